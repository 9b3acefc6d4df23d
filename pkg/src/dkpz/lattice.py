"""
Exact evolution of discrete surfaces on shrinking light-cone boxes.

A :class:`SurfaceSlice` holds heights on a dense axis-aligned box. Each
:func:`evolve_step` applies the driving function to every interior site and
returns the box shrunk by one on every face, so no boundary condition is ever
needed: a value at time ``t`` depends only on initial sites within distance
``t``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .coeffs import CoefficientSet
from .driving import DrivingSpec, evaluate_columns, stencil_size

MEMORY_CAP = 2 * 1024**3

# callables ``(prev, next, spec)`` invoked after every evolution step
STEP_OBSERVERS: list = []
INITIAL_KINDS = ("linear", "cosine", "capped_abs", "constant")


class LatticeError(ValueError):
    pass


class DomainExhausted(LatticeError):
    """Box too small to take another step."""


class SizingError(MemoryError):
    """Pre-flight estimate exceeds the configured memory cap."""


class ParityWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialData:
    """Lipschitz initial profile ``g`` on R^d.

    Kinds and parameters:

    ``linear``      ``slope``: per-axis coefficients, ``g(x) = slope . x``
    ``cosine``      ``amplitude``, ``wavevector``: ``g(x) = A cos(k . x)``
    ``capped_abs``  ``cap``: ``g(x) = min(|x|, M)``
    ``constant``    ``value``
    """

    kind: str
    dimension: int = 1
    params: Mapping[str, object] = field(default_factory=dict)
    lipschitz_override: float | None = None

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise LatticeError(f"unknown initial data kind {self.kind!r}")
        d = int(self.dimension)
        p = dict(self.params)
        if self.kind == "linear":
            p.setdefault("slope", [1.0] + [0.0] * (d - 1))
            p["slope"] = _vec(p["slope"], d)
        elif self.kind == "cosine":
            p.setdefault("amplitude", 1.0)
            p.setdefault("wavevector", [1.0] + [0.0] * (d - 1))
            p["amplitude"] = float(p["amplitude"])
            p["wavevector"] = _vec(p["wavevector"], d)
        elif self.kind == "capped_abs":
            p.setdefault("cap", 1.0)
            p["cap"] = float(p["cap"])
            if p["cap"] < 0:
                raise LatticeError("cap must be nonnegative")
        else:
            p.setdefault("value", 0.0)
            p["value"] = float(p["value"])
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "params", p)
        if self.lipschitz_override is not None and self.lipschitz_override < self.analytic_lipschitz - 1e-15:
            raise LatticeError(
                f"lipschitz {self.lipschitz_override} below the valid constant {self.analytic_lipschitz}"
            )

    @property
    def analytic_lipschitz(self) -> float:
        p = self.params
        if self.kind == "linear":
            return float(sum(abs(a) for a in p["slope"]))
        if self.kind == "cosine":
            return abs(p["amplitude"]) * float(sum(abs(k) for k in p["wavevector"]))
        if self.kind == "capped_abs":
            return 1.0
        return 0.0

    @property
    def lipschitz(self) -> float:
        if self.lipschitz_override is not None:
            return float(self.lipschitz_override)
        return self.analytic_lipschitz

    def __call__(self, x) -> np.ndarray:
        """Evaluate on points with trailing axis of length ``d`` (or scalars when d = 1)."""
        x = _points(x, self.dimension)
        p = self.params
        if self.kind == "linear":
            return _dot(x, p["slope"])
        if self.kind == "cosine":
            return p["amplitude"] * np.cos(_dot(x, p["wavevector"]))
        if self.kind == "capped_abs":
            return np.minimum(np.sqrt(_dot(x * x, [1.0] * self.dimension)), p["cap"])
        return np.full(x.shape[:-1], p["value"])

    def kinks(self) -> list[float]:
        """Breakpoints of ``g`` along the line when d = 1."""
        if self.kind == "capped_abs" and self.dimension == 1:
            m = self.params["cap"]
            return sorted({-m, 0.0, m})
        return []

    def gradient(self, x) -> np.ndarray:
        """Gradient of ``g`` (one-sided choice on the measure-zero kink sets)."""
        x = _points(x, self.dimension)
        p = self.params
        if self.kind == "linear":
            return np.broadcast_to(np.asarray(p["slope"]), x.shape).copy()
        if self.kind == "cosine":
            k = np.asarray(p["wavevector"])
            return -p["amplitude"] * np.sin(_dot(x, p["wavevector"]))[..., None] * k
        if self.kind == "capped_abs":
            r = np.sqrt(_dot(x * x, [1.0] * self.dimension))[..., None]
            inside = (r < p["cap"]) & (r > 0)
            return np.where(inside, x / np.where(r > 0, r, 1.0), 0.0)
        return np.zeros_like(x)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": {k: (list(v) if isinstance(v, tuple) else v)
                                             for k, v in self.params.items()}}
        out["lipschitz"] = self.lipschitz
        return out

    @classmethod
    def from_dict(cls, data: Mapping, dimension: int) -> "InitialData":
        return cls(data["kind"], dimension, dict(data.get("params", {})), data.get("lipschitz"))


def _vec(v, d):
    v = tuple(float(a) for a in (v if isinstance(v, (list, tuple)) else [v]))
    if len(v) != d:
        raise LatticeError(f"expected {d} components, got {len(v)}")
    return v


def _points(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise LatticeError(f"points must have {d} coordinates")
    return x


def _dot(x, coeffs):
    total = x[..., 0] * coeffs[0]
    for i in range(1, len(coeffs)):
        total = total + x[..., i] * coeffs[i]
    return total


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceSlice:
    """Heights on the integer box ``origin + [0, shape)`` at one time step."""

    epsilon: float
    time_step: int
    origin: tuple[int, ...]
    heights: np.ndarray
    lipschitz: float | None = None  # of the initial data, when known

    def __post_init__(self):
        self.heights.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.heights.ndim

    @property
    def box(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        lo = self.origin
        hi = tuple(o + n - 1 for o, n in zip(self.origin, self.heights.shape))
        return lo, hi

    def sites(self) -> np.ndarray:
        axes = [np.arange(o, o + n) for o, n in zip(self.origin, self.heights.shape)]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack(grid, axis=-1)

    def index(self, site) -> tuple[int, ...]:
        site = _site(site, self.dimension)
        idx = tuple(s - o for s, o in zip(site, self.origin))
        if any(i < 0 or i >= n for i, n in zip(idx, self.heights.shape)):
            raise LatticeError(f"site {site} outside domain {self.box}")
        return idx

    def at(self, site) -> float:
        return float(self.heights[self.index(site)])

    def contains(self, site) -> bool:
        lo, hi = self.box
        return all(l <= s <= h for s, l, h in zip(_site(site, self.dimension), lo, hi))


def _site(site, d) -> tuple[int, ...]:
    if np.ndim(site) == 0:
        site = (site,)
    site = tuple(int(s) for s in site)
    if len(site) != d:
        raise LatticeError(f"site must have {d} coordinates")
    return site


def make_box(center, radius: int, d: int | None = None):
    """Box ``center +- radius`` in every axis."""
    c = _site(center, d if d is not None else (1 if np.ndim(center) == 0 else len(center)))
    return tuple(x - radius for x in c), tuple(x + radius for x in c)


def estimate_bytes(shape: Sequence[int], d: int) -> int:
    """Rough peak memory for evolving a box: two slices plus stencil temporaries."""
    return int(np.prod(shape, dtype=float)) * 8 * (2 * d + 6)


def init_surface(g: InitialData, epsilon: float, box, memory_cap: int = MEMORY_CAP) -> SurfaceSlice:
    """Sample ``g(eps * x)`` on the inclusive integer box ``(lo, hi)``."""
    if not 0 < epsilon < 1:
        raise LatticeError("epsilon must lie in (0, 1)")
    lo, hi = (_site(b, g.dimension) for b in box)
    shape = tuple(h - l + 1 for l, h in zip(lo, hi))
    if any(n <= 0 for n in shape):
        raise LatticeError(f"empty box {box}")
    need = estimate_bytes(shape, g.dimension)
    if need > memory_cap:
        raise SizingError(f"box {shape} needs ~{need / 2**30:.2f} GiB (cap {memory_cap / 2**30:.2f} GiB)")
    axes = [np.arange(l, h + 1, dtype=float) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    heights = np.ascontiguousarray(g(epsilon * grid), dtype=float)
    return SurfaceSlice(float(epsilon), 0, lo, heights, g.lipschitz)


def stencil_columns(heights: np.ndarray) -> list[np.ndarray]:
    """Views ``[u_0, u_{+e1}, u_{-e1}, ...]`` over the interior of ``heights``."""
    d = heights.ndim
    inner = tuple(slice(1, -1) for _ in range(d))
    cols = [heights[inner]]
    for axis in range(d):
        for shift in (2, 0):  # +e then -e
            sl = list(inner)
            sl[axis] = slice(shift, heights.shape[axis] - 2 + shift)
            cols.append(heights[tuple(sl)])
    return cols


def evolve_step(slice_: SurfaceSlice, spec: DrivingSpec) -> SurfaceSlice:
    if spec.dimension != slice_.dimension:
        raise LatticeError("driving and surface dimensions differ")
    if any(n < 3 for n in slice_.heights.shape):
        raise DomainExhausted(f"domain {slice_.box} has empty interior")
    new = np.ascontiguousarray(evaluate_columns(spec, stencil_columns(slice_.heights)), dtype=float)
    origin = tuple(o + 1 for o in slice_.origin)
    nxt = SurfaceSlice(slice_.epsilon, slice_.time_step + 1, origin, new, slice_.lipschitz)
    for observer in STEP_OBSERVERS:
        observer(slice_, nxt, spec)
    return nxt


def evolve(slice_: SurfaceSlice, spec: DrivingSpec, steps: int, callback=None) -> SurfaceSlice:
    """Apply ``steps`` updates; ``callback(prev, next)`` sees every transition."""
    cur = slice_
    for _ in range(int(steps)):
        nxt = evolve_step(cur, spec)
        if callback is not None:
            callback(cur, nxt)
        cur = nxt
    return cur


# ---------------------------------------------------------------------------
# rescaled evaluation
# ---------------------------------------------------------------------------

def _snap(v: float) -> float:
    # decimal inputs like t / 0.1**2 land a few ulps off the intended integer
    r = round(v)
    return float(r) if abs(v - r) <= 1e-9 * max(1.0, abs(v)) else v


def floor_int(v: float) -> int:
    return int(math.floor(_snap(v)))


def rescaled_time(t: float, epsilon: float) -> int:
    return floor_int(t / (epsilon * epsilon))


def even_floor(a: float) -> int:
    """``2 * floor(a / 2)``: maps ``[2k, 2k + 2)`` to ``2k``."""
    return 2 * floor_int(a / 2)


def parity_site(y: Sequence[float], parity: int) -> tuple[int, ...]:
    """The lattice point of the requested coordinate-sum parity from ``y``.

    Coordinates after the first are floored; the first is sent to the even or
    odd integer of its pair ``[2k, 2k + 2)`` so that the total parity matches.
    """
    rest = [floor_int(c) for c in y[1:]]
    first = even_floor(y[0])
    if (sum(rest) + first) % 2 != parity:
        first += 1
    return (first, *rest)


def rescaled_site(x, epsilon: float, t_steps: int, parity_rule: str = "floor") -> tuple[int, ...]:
    y = [c / epsilon for c in np.atleast_1d(np.asarray(x, dtype=float))]
    if parity_rule == "floor":
        return tuple(floor_int(c) for c in y)
    if parity_rule not in ("parity0", "parity1"):
        raise LatticeError(f"unknown parity rule {parity_rule!r}")
    want = t_steps % 2 if parity_rule == "parity0" else 1 - t_steps % 2
    return parity_site(y, want)


def _hold_probability(spec: DrivingSpec, h: float = 1e-4) -> float:
    e = np.zeros(stencil_size(spec.dimension))
    e[0] = h
    cols_p = [np.asarray(v) for v in e]
    cols_m = [np.asarray(-v) for v in e]
    return float((evaluate_columns(spec, cols_p) - evaluate_columns(spec, cols_m)) / (2 * h))


def evaluate_rescaled_many(
    g: InitialData,
    spec: DrivingSpec,
    epsilon: float,
    t: float,
    xs: Iterable,
    parity_rule: str = "floor",
    memory_cap: int = MEMORY_CAP,
) -> list[float]:
    """``f_eps(t_eps, x_eps) - t_eps * phi(0)`` for several points at one time.

    A single light-cone box covering every target is evolved exactly.
    """
    if t < 0:
        raise LatticeError("t must be nonnegative")
    if parity_rule != "floor" and abs(_hold_probability(spec)) > 1e-8:
        warnings.warn(
            f"parity rule {parity_rule!r} used with a driving function whose hold "
            "probability is nonzero", ParityWarning, stacklevel=2,
        )
    d = spec.dimension
    t_eps = rescaled_time(t, epsilon)
    sites = [rescaled_site(x, epsilon, t_eps, parity_rule) for x in xs]
    lo = tuple(min(s[i] for s in sites) - t_eps for i in range(d))
    hi = tuple(max(s[i] for s in sites) + t_eps for i in range(d))
    surf = init_surface(g, epsilon, (lo, hi), memory_cap)
    surf = evolve(surf, spec, t_eps)
    phi0 = float(evaluate_columns(spec, [np.zeros(())] * stencil_size(d)))
    return [surf.at(s) - t_eps * phi0 for s in sites]


def evaluate_rescaled(g, spec, epsilon, t, x, parity_rule="floor", memory_cap=MEMORY_CAP) -> float:
    """Rescaled, renormalised surface height at a continuum point ``(t, x)``."""
    return evaluate_rescaled_many(g, spec, epsilon, t, [x], parity_rule, memory_cap)[0]


# ---------------------------------------------------------------------------
# h-field and roughness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HField:
    """Deviation of the update from its random-walk linearisation."""

    epsilon: float
    time_step: int
    origin: tuple[int, ...]
    values: np.ndarray

    def rescaled(self) -> np.ndarray:
        return self.values / (self.epsilon * self.epsilon)

    def at(self, site) -> float:
        site = _site(site, self.values.ndim)
        return float(self.values[tuple(s - o for s, o in zip(site, self.origin))])

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def compute_h_field(prev: SurfaceSlice, next_: SurfaceSlice, cs: CoefficientSet) -> HField:
    """``f(t) - phi(0) - alpha f(t-1) - beta * sum_b f(t-1, . + b)`` on ``next_``'s box.

    ``phi(0)`` is removed so the field belongs to the renormalised surface
    ``f_eps(t) - t phi(0)``; it is a no-op for drivers with ``phi(0) = 0``.
    """
    if next_.time_step != prev.time_step + 1:
        raise LatticeError("slices are not consecutive in time")
    d = prev.dimension
    lo_p, hi_p = prev.box
    lo_n, hi_n = next_.box
    if any(ln < lp + 1 or hn > hp - 1 for ln, lp, hn, hp in zip(lo_n, lo_p, hi_n, hi_p)):
        raise LatticeError("next domain must lie inside the interior of prev")
    # crop prev to next's box dilated by one
    sl = tuple(slice(ln - 1 - lp, hn + 2 - lp) for ln, lp, hn in zip(lo_n, lo_p, hi_n))
    cols = stencil_columns(prev.heights[sl])
    lin = cs.alpha * cols[0] + cs.beta * _sum(cols[1:])
    vals = next_.heights - cs.phi0 - lin
    return HField(prev.epsilon, next_.time_step, next_.origin, vals)


def _sum(cols):
    total = cols[0]
    for c in cols[1:]:
        total = total + c
    return total


@dataclass
class RoughnessReport:
    max_increment: float
    increment_site: tuple[int, ...]
    increment_axis: int
    max_second_difference: list[float]
    second_difference_sites: list[tuple[int, ...] | None]


def roughness_report(slice_: SurfaceSlice) -> RoughnessReport:
    """Largest nearest-neighbour increment and largest |second difference| per axis."""
    H = slice_.heights
    d = H.ndim
    best, best_site, best_axis = 0.0, slice_.origin, 0
    seconds, second_sites = [], []
    for axis in range(d):
        if H.shape[axis] >= 2:
            inc = np.abs(np.diff(H, axis=axis))
            k = np.unravel_index(int(np.argmax(inc)), inc.shape)
            if inc[k] > best:
                best = float(inc[k])
                best_site = tuple(int(i + o) for i, o in zip(k, slice_.origin))
                best_axis = axis
        if H.shape[axis] >= 3:
            sec = np.abs(np.diff(H, n=2, axis=axis))
            k = np.unravel_index(int(np.argmax(sec)), sec.shape)
            site = [int(i + o) for i, o in zip(k, slice_.origin)]
            site[axis] += 1
            seconds.append(float(sec[k]))
            second_sites.append(tuple(site))
        else:
            seconds.append(0.0)
            second_sites.append(None)
    return RoughnessReport(best, best_site, best_axis, seconds, second_sites)
