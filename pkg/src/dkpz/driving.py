"""
Driving functions for deterministically growing lattice surfaces.

A driving function maps the heights on the stencil ``A = {0, ±e_1, ..., ±e_d}``
to the height of the centre site at the next time step. Stencil vectors are
numpy arrays whose last axis has length ``2d + 1`` and is ordered as

    index 0        -> 0
    index 2i + 1   -> +e_{i+1}
    index 2i + 2   -> -e_{i+1}

All evaluators are vectorised over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import ndtr

KINDS = (
    "average",
    "logsumexp",
    "gradient_form",
    "lpp_max",
    "rsos_maxmin",
    "smoothed",
    "gibbs",
    "identity",
)
# Deliberately non-monotone; only used to exercise the validator.
TEST_ONLY_KINDS = ("nonmonotone",)

Q_VARIANTS = ("sine", "sine_neg")
GIBBS_POTENTIALS = ("quadratic", "quartic")
SMOOTHED_BASES = ("lpp_max", "rsos_maxmin")

_DEFAULT_PARAMS = {
    "average": {},
    "logsumexp": {"theta": 1.0},
    "gradient_form": {"variant": "sine", "scale": 1.0},
    "lpp_max": {},
    "rsos_maxmin": {},
    "smoothed": {"base": "lpp_max", "delta": 0.5, "order": 20},
    "gibbs": {"potential": "quadratic", "lam": 0.0},
    "identity": {},
    "nonmonotone": {},
}

_C2_KINDS = {"average", "logsumexp", "gradient_form", "smoothed", "gibbs", "identity"}


class DrivingError(ValueError):
    """Invalid driving specification or input."""


class DimensionMismatch(DrivingError):
    pass


class GibbsQuadratureError(ArithmeticError):
    """The fixed Gibbs quadrature rule failed its self-consistency check."""

    def __init__(self, residual: float, tol: float):
        super().__init__(f"gibbs quadrature residual {residual:.3e} exceeds {tol:.1e}")
        self.residual = residual
        self.tol = tol


def stencil_size(d: int) -> int:
    return 2 * d + 1


def neighbor_index(axis: int, sign: int) -> int:
    """Position of ``sign * e_{axis+1}`` in a stencil vector."""
    return 2 * axis + 1 if sign > 0 else 2 * axis + 2


@dataclass(frozen=True)
class DrivingSpec:
    """A named, parameterised driving function.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS` (or the test-only ``"nonmonotone"``).
    dimension : int
        Lattice dimension ``d`` (1 to 3).
    params : mapping
        Kind-specific parameters; missing keys take their defaults.
    """

    kind: str
    dimension: int = 1
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS + TEST_ONLY_KINDS:
            raise DrivingError(f"unknown driving kind {self.kind!r}")
        if not 1 <= int(self.dimension) <= 3:
            raise DrivingError("dimension must be 1, 2 or 3")
        merged = dict(_DEFAULT_PARAMS[self.kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise DrivingError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged.update(self.params)
        _check_params(self.kind, merged)
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "params", MappingProxyType(merged))

    @property
    def claimed_smoothness(self) -> str:
        return "c2" if self.kind in _C2_KINDS else "lipschitz_only"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping, dimension: int | None = None) -> "DrivingSpec":
        d = data.get("dimension", dimension if dimension is not None else 1)
        return cls(data["kind"], d, dict(data.get("params", {})))

    def __call__(self, u) -> np.ndarray:
        return evaluate(self, u)


def _check_params(kind: str, p: dict) -> None:
    if kind == "logsumexp" and not float(p["theta"]) > 0:
        raise DrivingError("logsumexp needs theta > 0")
    if kind == "gradient_form":
        if p["variant"] not in Q_VARIANTS:
            raise DrivingError(f"gradient_form variant must be one of {Q_VARIANTS}")
        # q' = scale * (1 ± sin v) / 4 stays within [0, 1] iff 0 < scale <= 2
        if not 0 < float(p["scale"]) <= 2:
            raise DrivingError("gradient_form scale must lie in (0, 2]")
    if kind == "smoothed":
        if p["base"] not in SMOOTHED_BASES:
            raise DrivingError(f"smoothed base must be one of {SMOOTHED_BASES}")
        if not float(p["delta"]) > 0:
            raise DrivingError("smoothed needs delta > 0")
        if int(p["order"]) < 4:
            raise DrivingError("smoothed quadrature order must be >= 4")
    if kind == "gibbs":
        if p["potential"] not in GIBBS_POTENTIALS:
            raise DrivingError(f"gibbs potential must be one of {GIBBS_POTENTIALS}")
        if not float(p["lam"]) >= 0:
            raise DrivingError("gibbs quartic coefficient must be >= 0")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(spec: DrivingSpec, u) -> np.ndarray | float:
    """Evaluate ``phi(u)``; ``u`` has trailing axis of length ``2d + 1``."""
    u = np.asarray(u, dtype=float)
    n = stencil_size(spec.dimension)
    if u.ndim == 0 or u.shape[-1] != n:
        raise DimensionMismatch(
            f"{spec.kind} in d={spec.dimension} expects {n} stencil entries, got shape {u.shape}"
        )
    cols = [u[..., i] for i in range(n)]
    out = evaluate_columns(spec, cols)
    return float(out) if u.ndim == 1 else out


def evaluate_columns(spec: DrivingSpec, cols: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate ``phi`` given one array per stencil entry (no stacking)."""
    fn = _EVALUATORS[spec.kind]
    return fn(spec, list(cols))


def _sum(cols):
    # fixed left-to-right order keeps results bit-identical across calls
    total = cols[0]
    for c in cols[1:]:
        total = total + c
    return total


def _average(spec, cols):
    return _sum(cols[1:]) / (2 * spec.dimension)


def _logsumexp(spec, cols):
    theta = float(spec.params["theta"])
    nb = cols[1:]
    m = nb[0]
    for c in nb[1:]:
        m = np.maximum(m, c)
    s = _sum([np.exp(theta * (c - m)) for c in nb])
    return m + np.log(s) / theta


def _q(spec, v):
    scale = float(spec.params["scale"])
    if spec.params["variant"] == "sine":
        return scale * (v + 1.0 - np.cos(v)) / 4.0
    return scale * (v + np.cos(v) - 1.0) / 4.0


def _gradient_form(spec, cols):
    u0 = cols[0]
    return u0 + _sum([_q(spec, c - u0) for c in cols[1:]]) / (2 * spec.dimension)


def _max(cols):
    m = cols[0]
    for c in cols[1:]:
        m = np.maximum(m, c)
    return m


def _min(cols):
    m = cols[0]
    for c in cols[1:]:
        m = np.minimum(m, c)
    return m


def _lpp_max(spec, cols):
    return _max(cols)


def _rsos_maxmin(spec, cols):
    return 0.5 * (_max(cols[1:]) + _min(cols[1:]))


def _identity(spec, cols):
    return np.asarray(cols[0], dtype=float) + 0.0


def _nonmonotone(spec, cols):
    return cols[0] - cols[1]


def _expected_max(cols, delta, order):
    """E max_i (v_i + delta Z_i) for independent standard normals Z_i.

    Each term integrates over the winning coordinate's noise with
    Gauss-Hermite nodes while the others enter through the normal cdf, so the
    result is smooth in ``v`` (a tensor rule over a max would not be).
    """
    z, w = hermegauss(order)
    w = w / np.sqrt(2.0 * np.pi)
    centre = _sum(cols) / len(cols)
    v = [np.asarray(c - centre)[..., None] for c in cols]
    total = 0.0
    for i, vi in enumerate(v):
        prob = 1.0
        for j, vj in enumerate(v):
            if j != i:
                prob = prob * ndtr((vi - vj) / delta + z)
        total = total + np.sum(w * (vi + delta * z) * prob, axis=-1)
    return centre + total


def _smoothed(spec, cols):
    delta = float(spec.params["delta"])
    order = int(spec.params["order"])
    if spec.params["base"] == "lpp_max":
        return _expected_max(cols, delta, order)
    nb = cols[1:]
    # min_b(u_b + delta Z_b) = -max_b(-u_b + delta Z'_b) in distribution
    hi = _expected_max(nb, delta, order)
    lo = -_expected_max([-c for c in nb], delta, order)
    return 0.5 * (hi + lo)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
GIBBS_MIN_PANELS = 32
GIBBS_MAX_PANELS = 2048
GIBBS_TOL = 1e-10


def _gibbs_potential(spec, x):
    if spec.params["potential"] == "quadratic":
        return 0.5 * x * x
    x2 = x * x
    return 0.5 * x2 + float(spec.params["lam"]) * x2 * x2


def _composite_gl(a, b, panels):
    """Nodes/weights of a composite 8-point Gauss-Legendre rule on [a, b] (broadcast)."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    unit_x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    unit_w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    a = np.asarray(a)[..., None]
    b = np.asarray(b)[..., None]
    return a + (b - a) * unit_x, (b - a) * unit_w


def _gibbs_mean(spec, w, half_width, panels):
    s, ws = _composite_gl(-half_width, half_width, panels)
    energy = _sum([_gibbs_potential(spec, wb[..., None] - s) for wb in w])
    energy = energy - np.min(energy, axis=-1, keepdims=True)
    dens = ws * np.exp(-energy)
    return np.sum(s * dens, axis=-1) / np.sum(dens, axis=-1)


def _gibbs(spec, cols):
    nb = [np.asarray(c, dtype=float) for c in cols[1:]]
    nb = np.broadcast_arrays(*nb)
    centre = _sum(nb) / len(nb)
    w = [c - centre for c in nb]
    sigma = 1.0 / np.sqrt(2.0 * spec.dimension)
    # window covers all neighbour offsets plus ten posterior widths; smooth in w
    half_width = 10.0 * sigma + np.sqrt(_sum([x * x for x in w]) + sigma * sigma)
    panels = GIBBS_MIN_PANELS
    coarse = _gibbs_mean(spec, w, half_width, panels // 2)
    while True:
        fine = _gibbs_mean(spec, w, half_width, panels)
        resid = float(np.max(np.abs(fine - coarse), initial=0.0))
        if resid <= GIBBS_TOL:
            return centre + fine
        if panels >= GIBBS_MAX_PANELS:
            raise GibbsQuadratureError(resid, GIBBS_TOL)
        coarse, panels = fine, 2 * panels


_EVALUATORS = {
    "average": _average,
    "logsumexp": _logsumexp,
    "gradient_form": _gradient_form,
    "lpp_max": _lpp_max,
    "rsos_maxmin": _rsos_maxmin,
    "smoothed": _smoothed,
    "gibbs": _gibbs,
    "identity": _identity,
    "nonmonotone": _nonmonotone,
}


# ---------------------------------------------------------------------------
# axiom validation
# ---------------------------------------------------------------------------

@dataclass
class AxiomCheck:
    name: str
    passed: bool
    worst: float
    witness: tuple | None = None


@dataclass
class ValidationReport:
    kind: str
    dimension: int
    seed: int
    sample_count: int
    tol: float
    checks: dict[str, AxiomCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]


def lattice_symmetries(d: int) -> list[np.ndarray]:
    """Index permutations of the stencil generating the lattice symmetry group."""
    n = stencil_size(d)
    perms = []
    for i in range(d):
        p = np.arange(n)
        p[[2 * i + 1, 2 * i + 2]] = p[[2 * i + 2, 2 * i + 1]]
        perms.append(p)
    for i in range(d):
        for j in range(i + 1, d):
            p = np.arange(n)
            p[[2 * i + 1, 2 * j + 1]] = p[[2 * j + 1, 2 * i + 1]]
            p[[2 * i + 2, 2 * j + 2]] = p[[2 * j + 2, 2 * i + 2]]
            perms.append(p)
    return perms


def _worst(viol, u, v=None):
    k = int(np.argmax(viol))
    wit = (u[k].tolist(),) if v is None else (u[k].tolist(), v[k].tolist())
    return float(viol[k]), wit


def validate_properties(
    spec: DrivingSpec, sample_count: int = 1000, tol: float = 1e-9, seed: int = 0, scale: float = 1.0
) -> ValidationReport:
    """Check equivariance, monotonicity, lattice symmetry and sup-norm contraction
    on ``sample_count`` seeded random stencil vectors.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    n = stencil_size(spec.dimension)
    u = rng.uniform(-scale, scale, size=(sample_count, n))
    c = rng.uniform(-5 * scale, 5 * scale, size=sample_count)
    bump = rng.exponential(0.5 * scale, size=(sample_count, n))
    bump *= rng.random((sample_count, n)) < 0.5
    other = rng.uniform(-scale, scale, size=(sample_count, n))

    fu = evaluate(spec, u)
    checks = {}

    viol = np.abs(evaluate(spec, u + c[:, None]) - fu - c)
    worst, wit = _worst(viol, u)
    checks["equivariance"] = AxiomCheck("equivariance", worst <= tol, worst, wit)

    v = u + bump
    viol = fu - evaluate(spec, v)
    worst, wit = _worst(viol, u, v)
    checks["monotonicity"] = AxiomCheck("monotonicity", worst <= tol, max(worst, 0.0), wit)

    worst, wit = 0.0, None
    for p in lattice_symmetries(spec.dimension):
        viol = np.abs(evaluate(spec, u[:, p]) - fu)
        w_, wt = _worst(viol, u, u[:, p])
        if w_ > worst or wit is None:
            worst, wit = w_, wt
    checks["symmetry"] = AxiomCheck("symmetry", worst <= tol, worst, wit)

    viol = np.abs(fu - evaluate(spec, other)) - np.max(np.abs(u - other), axis=-1)
    worst, wit = _worst(viol, u, other)
    checks["contraction"] = AxiomCheck("contraction", worst <= tol, max(worst, 0.0), wit)

    return ValidationReport(spec.kind, spec.dimension, seed, sample_count, tol, checks)


# ---------------------------------------------------------------------------
# smoothness probe
# ---------------------------------------------------------------------------

@dataclass
class SmoothnessVerdict:
    verdict: str  # "c2_consistent" or "non_smooth_flagged"
    steps: list[float]
    second_differences: np.ndarray  # (len(steps), 2d): along each b at 0
    curvature_spread: float
    linearity_defect: float
    threshold: float

    @property
    def smooth(self) -> bool:
        return self.verdict == "c2_consistent"


def _unit(d, idx, h):
    e = np.zeros(stencil_size(d))
    e[idx] = h
    return e


def smoothness_probe(spec: DrivingSpec, steps: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                     threshold: float = 0.25) -> SmoothnessVerdict:
    """Flag driving functions whose behaviour at 0 is inconsistent with C^2.

    Two signals are combined. Second central differences along each neighbour
    direction must agree across step sizes (relative spread below
    ``threshold``). Central first differences must also be additive across
    pairs of stencil directions; an odd, positively homogeneous kink such as
    the max/min average cancels in every symmetric second difference and is
    only visible this way.
    """
    steps = [float(h) for h in steps]
    if len(steps) < 3 or any(h <= 0 for h in steps) or any(
        a <= b for a, b in zip(steps, steps[1:])
    ):
        raise ValueError("steps must be >= 3 strictly decreasing positive values")
    d = spec.dimension
    n = stencil_size(d)
    f0 = evaluate(spec, np.zeros(n))

    d2 = np.empty((len(steps), 2 * d))
    for k, h in enumerate(steps):
        for j, idx in enumerate(range(1, n)):
            e = _unit(d, idx, h)
            d2[k, j] = (evaluate(spec, e) - 2 * f0 + evaluate(spec, -e)) / (h * h)
    per_dir = np.max(d2, axis=0) - np.min(d2, axis=0)
    level = max(float(np.median(np.abs(d2))), 1e-3)
    spread = float(np.max(per_dir) / level)

    h = steps[-1]

    def slope(vec):
        return (evaluate(spec, h * vec) - evaluate(spec, -h * vec)) / (2 * h)

    basis = np.eye(n)
    grads = [slope(basis[i]) for i in range(n)]
    defect = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            gap = abs(slope(basis[i] + basis[j]) - grads[i] - grads[j])
            defect = max(defect, gap / max(abs(grads[i]) + abs(grads[j]), 1e-3))

    flagged = spread > threshold or defect > threshold
    return SmoothnessVerdict(
        "non_smooth_flagged" if flagged else "c2_consistent",
        steps, d2, spread, defect, threshold,
    )


def builtin_specs(d: int = 1) -> list[DrivingSpec]:
    """A representative instance of each shipped kind in dimension ``d``."""
    specs = [
        DrivingSpec("average", d),
        DrivingSpec("logsumexp", d, {"theta": 1.0}),
        DrivingSpec("logsumexp", d, {"theta": 2.5}),
        DrivingSpec("gradient_form", d, {"variant": "sine"}),
        DrivingSpec("gradient_form", d, {"variant": "sine_neg"}),
        DrivingSpec("lpp_max", d),
        DrivingSpec("rsos_maxmin", d),
        DrivingSpec("smoothed", d, {"base": "lpp_max", "delta": 0.5}),
        DrivingSpec("smoothed", d, {"base": "rsos_maxmin", "delta": 0.5}),
        DrivingSpec("gibbs", d, {"potential": "quadratic"}),
        DrivingSpec("gibbs", d, {"potential": "quartic", "lam": 0.5}),
        DrivingSpec("identity", d),
    ]
    return specs
