"""Finite-difference extraction of the KPZ coefficients of a driving function."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .driving import DrivingSpec, evaluate, smoothness_probe, stencil_size

DEFAULT_STEPS = (1e-2, 5e-3, 2.5e-3)
BETA_ZERO_TOL = 1e-8
GAMMA_ZERO_TOL = 1e-6


class NonSmoothDriving(ValueError):
    """The smoothness probe flagged the driving function."""


class InconsistentDirections(ValueError):
    """Per-direction derivative estimates disagree beyond extrapolation noise."""


@dataclass
class CoefficientSet:
    phi0: float
    alpha: float
    beta: float
    gamma1: float
    gamma2: float
    gamma3: float | None
    gamma: float
    cross_b_spread: float
    fd_steps_used: list[float] = field(default_factory=list)
    residual: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data) -> "CoefficientSet":
        return cls(**data)

    @classmethod
    def exact(cls, phi0=0.0, alpha=0.0, beta=0.0, gamma1=0.0, gamma2=0.0, gamma3=None):
        """Build a set from known values (no finite differences involved)."""
        return cls(phi0, alpha, beta, gamma1, gamma2, gamma3, gamma1 - gamma2, 0.0, [])


def _richardson(values: Sequence[float], steps: Sequence[float]) -> tuple[float, float]:
    """Extrapolate O(h^2) estimates; return (value, residual estimate)."""
    v = [float(x) for x in values]
    extrap = []
    for (h1, f1), (h2, f2) in zip(zip(steps, v), zip(steps[1:], v[1:])):
        r2 = (h1 / h2) ** 2
        extrap.append((r2 * f2 - f1) / (r2 - 1.0))
    if len(extrap) >= 2:
        return extrap[-1], abs(extrap[-1] - extrap[-2])
    return extrap[-1], abs(v[-1] - v[-2])


def _directional(spec, vectors_and_weights, f0=None):
    total = 0.0
    for vec, w in vectors_and_weights:
        total += w * evaluate(spec, vec)
    return total


def extract_coefficients(
    spec: DrivingSpec, steps: Sequence[float] = DEFAULT_STEPS, probe: bool = True
) -> CoefficientSet:
    """Central differences at ``u = 0`` with one Richardson step.

    Raises
    ------
    NonSmoothDriving
        If ``probe`` is set and the smoothness probe flags ``spec``.
    InconsistentDirections
        If per-direction estimates disagree by more than 100x the
        extrapolation residual (plus a 1e-9 absolute floor).
    """
    steps = [float(h) for h in steps]
    if len(steps) < 2 or any(a <= b for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be >= 2 strictly decreasing values")
    if probe:
        pr = smoothness_probe(spec, steps if len(steps) >= 3 else (*steps, steps[-1] / 2))
        if not pr.smooth:
            raise NonSmoothDriving(
                f"{spec.kind} flagged non-smooth (spread {pr.curvature_spread:.3g}, "
                f"linearity defect {pr.linearity_defect:.3g})"
            )

    d = spec.dimension
    n = stencil_size(d)
    eye = np.eye(n)
    zero = np.zeros(n)
    phi0 = evaluate(spec, zero)

    def first(idx):
        vals = [(evaluate(spec, h * eye[idx]) - evaluate(spec, -h * eye[idx])) / (2 * h) for h in steps]
        return _richardson(vals, steps)

    def second(idx):
        vals = [
            (evaluate(spec, h * eye[idx]) - 2 * phi0 + evaluate(spec, -h * eye[idx])) / (h * h)
            for h in steps
        ]
        return _richardson(vals, steps)

    def mixed(i, j):
        vals = []
        for h in steps:
            ei, ej = h * eye[i], h * eye[j]
            vals.append(
                (
                    evaluate(spec, ei + ej)
                    - evaluate(spec, ei - ej)
                    - evaluate(spec, -ei + ej)
                    + evaluate(spec, -ei - ej)
                )
                / (4 * h * h)
            )
        return _richardson(vals, steps)

    alpha, res_a = first(0)
    betas, g1s, g2s, g3s, residuals = [], [], [], [], [res_a]
    for b in range(1, n):
        minus_b = b + 1 if b % 2 == 1 else b - 1
        v, r = first(b)
        betas.append(v)
        residuals.append(r)
        v, r = second(b)
        g1s.append(v)
        residuals.append(r)
        v, r = mixed(b, minus_b)
        g2s.append(v)
        residuals.append(r)
        if d >= 2:
            for b2 in range(1, n):
                if b2 != b and b2 != minus_b:
                    v, r = mixed(b, b2)
                    g3s.append(v)
                    residuals.append(r)

    spread = max(float(np.ptp(x)) for x in (betas, g1s, g2s, g3s) if len(x))
    residual = max(residuals)
    if spread > 100 * residual + 1e-9:
        raise InconsistentDirections(
            f"direction spread {spread:.3e} exceeds 100x extrapolation residual {residual:.3e}"
        )

    gamma1 = float(np.mean(g1s))
    gamma2 = float(np.mean(g2s))
    gamma3 = float(np.mean(g3s)) if g3s else None
    return CoefficientSet(
        phi0=float(phi0),
        alpha=float(alpha),
        beta=float(np.mean(betas)),
        gamma1=gamma1,
        gamma2=gamma2,
        gamma3=gamma3,
        gamma=gamma1 - gamma2,
        cross_b_spread=spread,
        fd_steps_used=steps,
        residual=float(residual),
    )


def classify_branch(beta: float, gamma: float) -> str:
    if abs(beta) <= BETA_ZERO_TOL:
        return "frozen"
    if abs(gamma) <= GAMMA_ZERO_TOL:
        return "heat"
    return "kpz"


@dataclass
class ConsistencyReport:
    sum_rule: bool
    sum_error: float
    nonnegative: bool
    beta_zero_clause: bool
    branch: str
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.sum_rule and self.nonnegative and self.beta_zero_clause


def check_coefficient_consistency(cs: CoefficientSet, d: int, tol: float = 1e-6) -> ConsistencyReport:
    """Structural checks implied by monotonicity, equivariance and C^2."""
    notes = []
    err = abs(cs.alpha + 2 * d * cs.beta - 1.0)
    sum_ok = err <= tol
    if not sum_ok:
        notes.append(f"alpha + 2d*beta = {cs.alpha + 2 * d * cs.beta:.12g}, expected 1")
    nonneg = cs.alpha >= -tol and cs.beta >= -tol
    if not nonneg:
        notes.append("negative first derivative contradicts monotonicity")
    clause = True
    if abs(cs.beta) <= tol:
        seconds = [cs.gamma1, cs.gamma2] + ([cs.gamma3] if cs.gamma3 is not None else [])
        if any(abs(g) > tol for g in seconds):
            clause = False
            notes.append("beta = 0 but second derivatives are nonzero")
    return ConsistencyReport(sum_ok, err, nonneg, clause, classify_branch(cs.beta, cs.gamma), notes)
