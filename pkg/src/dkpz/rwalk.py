"""
Lazy random walk kernels, their Gaussian approximation, and the random-walk
representation of an evolving surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coeffs import CoefficientSet, extract_coefficients
from .driving import DrivingSpec
from .lattice import (
    InitialData,
    MEMORY_CAP,
    compute_h_field,
    evolve_step,
    init_surface,
)


class WalkError(ValueError):
    pass


@dataclass(frozen=True)
class WalkKernel:
    """``p(t, x)`` stored densely on ``[-t, t]^d`` (index ``x + t``)."""

    alpha: float
    beta: float
    d: int
    t: int
    mass: np.ndarray

    def at(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=int))
        if np.any(np.abs(x) > self.t):
            return 0.0
        return float(self.mass[tuple(x + self.t)])

    def sites(self) -> np.ndarray:
        ax = np.arange(-self.t, self.t + 1)
        return np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"), axis=-1)

    def total(self) -> float:
        return float(np.sum(self.mass))


def _check_probabilities(alpha, beta, d, tol=1e-10):
    if alpha < 0 or beta < 0 or abs(alpha + 2 * d * beta - 1.0) > tol:
        raise WalkError(f"invalid walk: alpha={alpha}, beta={beta}, d={d}")


def _step(p: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """One application of ``alpha p(x) + beta sum_b p(x - b)``, growing the box by one."""
    d = p.ndim
    q = np.zeros(tuple(n + 2 for n in p.shape))
    inner = tuple(slice(1, -1) for _ in range(d))
    q[inner] += alpha * p
    for axis in range(d):
        for shift in (0, 2):
            sl = list(inner)
            sl[axis] = slice(shift, shift + p.shape[axis])
            q[tuple(sl)] += beta * p
    return q


def kernel_sequence(alpha: float, beta: float, d: int, t_max: int) -> list[np.ndarray]:
    """Dense kernels ``p(0), ..., p(t_max)``."""
    _check_probabilities(alpha, beta, d)
    p = np.ones((1,) * d)
    out = [p]
    for _ in range(int(t_max)):
        p = _step(p, alpha, beta)
        out.append(p)
    return out


def kernel_exact(alpha: float, beta: float, d: int, t: int) -> WalkKernel:
    if t < 0:
        raise WalkError("t must be nonnegative")
    return WalkKernel(float(alpha), float(beta), int(d), int(t), kernel_sequence(alpha, beta, d, t)[-1])


def kernel_gaussian(t: int, x, beta: float, parity_mode: str = "aperiodic") -> float:
    """Gaussian kernel ``(4 pi beta t)^{-d/2} exp(-|x|^2 / 4 beta t)``.

    With ``parity_mode="periodic"`` the value is doubled on sites whose
    coordinate sum has the parity of ``t`` and zero elsewhere.
    """
    if t < 1:
        raise WalkError("t must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(gaussian_kernel_array(t, x[None, :], beta, parity_mode)[0])


def gaussian_kernel_array(t: int, xs: np.ndarray, beta: float, parity_mode: str = "aperiodic") -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    d = xs.shape[-1]
    r2 = np.sum(xs * xs, axis=-1)
    val = (4 * math.pi * beta * t) ** (-d / 2) * np.exp(-r2 / (4 * beta * t))
    if parity_mode == "aperiodic":
        return val
    if parity_mode != "periodic":
        raise WalkError(f"unknown parity mode {parity_mode!r}")
    same = (np.rint(np.sum(xs, axis=-1)).astype(int) - t) % 2 == 0
    return np.where(same, 2.0 * val, 0.0)


@dataclass
class ErrorTable:
    alpha: float
    beta: float
    d: int
    times: list[int]
    sup_err: list[float]
    scaled_err: list[float]
    fitted_order: float
    parity_mode: str

    def rows(self):
        for t, e, s in zip(self.times, self.sup_err, self.scaled_err):
            yield t, e, s, self.fitted_order

    def to_csv(self) -> str:
        lines = ["t,sup_err,scaled_err,fitted_order"]
        lines += [f"{t},{e!r},{s!r},{o!r}" for t, e, s, o in self.rows()]
        return "\n".join(lines) + "\n"


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and the RMS residual."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def clt_error_table(alpha: float, beta: float, d: int, times: Sequence[int]) -> ErrorTable:
    """Sup distance between ``p(t, .)`` and the Gaussian kernel on the light cone."""
    times = [int(t) for t in times]
    if any(t < 2 for t in times) or any(a >= b for a, b in zip(times, times[1:])):
        raise WalkError("times must be increasing and >= 2")
    mode = "periodic" if alpha == 0 else "aperiodic"
    kernels = kernel_sequence(alpha, beta, d, times[-1])
    sup_err, scaled = [], []
    for t in times:
        k = WalkKernel(alpha, beta, d, t, kernels[t])
        g = gaussian_kernel_array(t, k.sites(), beta, mode)
        e = float(np.max(np.abs(k.mass - g)))
        sup_err.append(e)
        scaled.append(e * t ** ((d + 2) / 2))
    slope, _ = loglog_slope(times, sup_err)
    return ErrorTable(alpha, beta, d, times, sup_err, scaled, -slope, mode)


# ---------------------------------------------------------------------------
# random-walk representation
# ---------------------------------------------------------------------------

@dataclass
class ReconstructionReport:
    targets: list[tuple[int, ...]]
    t_steps: int
    direct: list[float]
    reconstructed: list[float]
    residual: list[float]

    @property
    def max_residual(self) -> float:
        return max(self.residual)


def _convolve_at(kernel: np.ndarray, field: np.ndarray, field_origin, site) -> float:
    """``sum_y p(x - y) F(y)`` for a kernel on ``[-s, s]^d``."""
    s = (kernel.shape[0] - 1) // 2
    sl = tuple(slice(c - s - o, c + s + 1 - o) for c, o in zip(site, field_origin))
    window = field[sl]
    flipped = kernel[(slice(None, None, -1),) * kernel.ndim]
    return float(np.sum(flipped * window))


def reconstruct_via_representation(
    g: InitialData,
    spec: DrivingSpec,
    epsilon: float,
    t_steps: int,
    targets: Sequence,
    cs: CoefficientSet | None = None,
    memory_cap: int = MEMORY_CAP,
) -> ReconstructionReport:
    """Rebuild ``f_eps(t, x) - t phi(0)`` from ``g_eps`` and the recorded h-fields
    with exact kernels, and compare with the directly evolved surface.
    """
    if t_steps < 1:
        raise WalkError("t_steps must be >= 1")
    if cs is None:
        cs = extract_coefficients(spec)
    d = spec.dimension
    targets = [tuple(int(c) for c in np.atleast_1d(x)) for x in targets]
    lo = tuple(min(x[i] for x in targets) - t_steps for i in range(d))
    hi = tuple(max(x[i] for x in targets) + t_steps for i in range(d))
    surf0 = init_surface(g, epsilon, (lo, hi), memory_cap)

    hfields = {}
    cur = surf0
    for _ in range(t_steps):
        nxt = evolve_step(cur, spec)
        hfields[nxt.time_step] = compute_h_field(cur, nxt, cs)
        cur = nxt

    kernels = kernel_sequence(max(cs.alpha, 0.0), max(cs.beta, 0.0), d, t_steps)
    direct, recon, resid = [], [], []
    for x in targets:
        val = _convolve_at(kernels[t_steps], surf0.heights, surf0.origin, x)
        for s in range(t_steps):
            h = hfields[t_steps - s]
            val += _convolve_at(kernels[s], h.values, h.origin, x)
        f = cur.at(x) - t_steps * cs.phi0
        direct.append(f)
        recon.append(val)
        resid.append(abs(f - val))
    return ReconstructionReport(targets, t_steps, direct, recon, resid)
