"""
Experiment orchestration: epsilon sweeps against the continuum limit, the
gradient-squared check, and deterministic report emission.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .coeffs import CoefficientSet, check_coefficient_consistency, extract_coefficients
from .driving import DrivingSpec, ValidationReport, validate_properties
from .lattice import (
    InitialData,
    MEMORY_CAP,
    ParityWarning,
    compute_h_field,
    evaluate_rescaled_many,
    evolve,
    evolve_step,
    floor_int,
    init_surface,
    make_box,
    rescaled_site,
    rescaled_time,
)
from .limit import LimitEvaluator, QuadratureConfig, cole_hopf_eval, limit_gradient
from .rwalk import loglog_slope

DEFAULT_TOLERANCES = {
    "validation": 1e-9,
    "validation_samples": 1000,
    "consistency": 1e-6,
    "quadrature": 1e-10,
}


class ValidationFailed(RuntimeError):
    def __init__(self, report: ValidationReport | None, message: str):
        super().__init__(message)
        self.report = report


@dataclass
class ExperimentConfig:
    dimension: int
    driving: DrivingSpec
    initial: InitialData
    epsilons: list[float]
    eval_points: list[tuple[float, tuple[float, ...]]]
    tolerances: dict = field(default_factory=dict)
    parity_rule: str = "floor"
    seed: int = 0

    def __post_init__(self):
        self.epsilons = [float(e) for e in self.epsilons]
        if any(not 0 < e < 1 for e in self.epsilons):
            raise ValueError("epsilons must lie in (0, 1)")
        if any(a <= b for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        pts = []
        for t, x in self.eval_points:
            x = tuple(float(c) for c in np.atleast_1d(x))
            if len(x) != self.dimension:
                raise ValueError(f"eval point {x} has wrong dimension")
            if not t > 0:
                raise ValueError("evaluation times must be positive")
            if rescaled_time(t, self.epsilons[0]) < 1:
                raise ValueError(f"t={t} gives no lattice step at epsilon={self.epsilons[0]}")
            pts.append((float(t), x))
        self.eval_points = pts
        if self.driving.dimension != self.dimension or self.initial.dimension != self.dimension:
            raise ValueError("driving/initial dimension disagrees with config dimension")
        if self.parity_rule not in ("floor", "parity0", "parity1"):
            raise ValueError(f"unknown parity rule {self.parity_rule!r}")

    def tol(self, name):
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "driving": {"kind": self.driving.kind, "params": dict(self.driving.params)},
            "initial": self.initial.to_dict(),
            "epsilons": list(self.epsilons),
            "eval_points": [[t, list(x)] for t, x in self.eval_points],
            "tolerances": dict(sorted(self.tolerances.items())),
            "parity_rule": self.parity_rule,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        d = int(data["dimension"])
        return cls(
            dimension=d,
            driving=DrivingSpec.from_dict(data["driving"], d),
            initial=InitialData.from_dict(data["initial"], d),
            epsilons=list(data["epsilons"]),
            eval_points=[(p[0], p[1]) for p in data["eval_points"]],
            tolerances=dict(data.get("tolerances", {})),
            parity_rule=data.get("parity_rule", "floor"),
            seed=int(data.get("seed", 0)),
        )

    def replace(self, **changes) -> "ExperimentConfig":
        data = self.to_dict()
        data.update(changes)
        return ExperimentConfig.from_dict(data)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def shipped_config_names() -> list[str]:
    files = resources.files("dkpz.configs").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def shipped_config(name: str) -> ExperimentConfig:
    text = resources.files("dkpz.configs").joinpath(f"{name}.json").read_text()
    return ExperimentConfig.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# preparation shared by the experiments
# ---------------------------------------------------------------------------

@dataclass
class Preparation:
    validation: ValidationReport
    coefficients: CoefficientSet
    branch: str
    evaluator: LimitEvaluator


def prepare(config: ExperimentConfig) -> Preparation:
    """Validate the driver, extract coefficients and build the limit evaluator."""
    rep = validate_properties(
        config.driving, int(config.tol("validation_samples")), config.tol("validation"), config.seed
    )
    if not rep.passed:
        raise ValidationFailed(rep, f"driving function fails axioms: {rep.failures()}")
    cs = extract_coefficients(config.driving)
    cons = check_coefficient_consistency(cs, config.dimension, config.tol("consistency"))
    if not cons.passed:
        raise ValidationFailed(rep, "; ".join(cons.notes))
    ev = LimitEvaluator.from_coefficients(
        config.initial, cs, QuadratureConfig(tol=config.tol("quadrature"))
    )
    if ev.branch != cons.branch:
        raise RuntimeError("limit branch disagrees with the coefficient classification")
    return Preparation(rep, cs, cons.branch, ev)


# ---------------------------------------------------------------------------
# convergence sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    epsilon: float
    t: float
    x: tuple[float, ...]
    f_eps: float
    f_limit: float
    abs_err: float


@dataclass
class PointFit:
    t: float
    x: tuple[float, ...]
    order: float
    fit_residual: float
    monotone: bool


@dataclass
class ConvergenceReport:
    config: dict
    branch: str
    coefficients: dict
    rows: list[SweepRow]
    fits: list[PointFit]
    seed: int
    version: str
    timing: float | None = field(default=None, compare=False)

    def errors_at(self, t, x) -> list[float]:
        x = tuple(float(c) for c in np.atleast_1d(x))
        return [r.abs_err for r in self.rows if r.t == t and r.x == x]

    def fit_for(self, t, x) -> PointFit:
        x = tuple(float(c) for c in np.atleast_1d(x))
        return next(f for f in self.fits if f.t == t and f.x == x)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "branch": self.branch,
            "coefficients": self.coefficients,
            "rows": [asdict(r) | {"x": list(r.x)} for r in self.rows],
            "fits": [asdict(f) | {"x": list(f.x)} for f in self.fits],
            "seed": self.seed,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConvergenceReport":
        rows = [SweepRow(**(r | {"x": tuple(r["x"])})) for r in data["rows"]]
        fits = [PointFit(**(f | {"x": tuple(f["x"])})) for f in data["fits"]]
        return cls(data["config"], data["branch"], data["coefficients"], rows, fits,
                   data["seed"], data["version"])


def _fit(eps: Sequence[float], errs: Sequence[float]) -> tuple[float, float]:
    if len(eps) < 2 or any(e <= 0 for e in errs):
        return math.nan, math.nan
    return loglog_slope(eps, errs)


def _monotone(errs: Sequence[float]) -> bool:
    tail = list(errs[1:])
    return all(b <= a for a, b in zip(tail, tail[1:]))


def discrete_values(config: ExperimentConfig, epsilon: float, parity_rule: str | None = None,
                    memory_cap: int = MEMORY_CAP) -> list[float]:
    """Rescaled surface values at every evaluation point for one epsilon."""
    rule = parity_rule or config.parity_rule
    out = {}
    by_t: dict[float, list[int]] = {}
    for i, (t, _) in enumerate(config.eval_points):
        by_t.setdefault(t, []).append(i)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParityWarning)
        for t, idx in by_t.items():
            xs = [config.eval_points[i][1] for i in idx]
            vals = evaluate_rescaled_many(config.initial, config.driving, epsilon, t, xs, rule, memory_cap)
            out.update(zip(idx, vals))
    return [out[i] for i in range(len(config.eval_points))]


def run_convergence_sweep(config: ExperimentConfig, parity_rule: str | None = None,
                          prep: Preparation | None = None) -> ConvergenceReport:
    """Discrete rescaled surface versus the continuum limit for every (epsilon, point)."""
    start = time.perf_counter()
    prep = prep or prepare(config)
    limits = [cole_hopf_eval(prep.evaluator, t, x) for t, x in config.eval_points]
    rows = []
    for eps in config.epsilons:
        vals = discrete_values(config, eps, parity_rule)
        for (t, x), fe, fl in zip(config.eval_points, vals, limits):
            rows.append(SweepRow(eps, t, x, fe, fl, abs(fe - fl)))
    fits = []
    for t, x in config.eval_points:
        errs = [r.abs_err for r in rows if r.t == t and r.x == x]
        order, resid = _fit(config.epsilons, errs)
        fits.append(PointFit(t, x, order, resid, _monotone(errs)))
    cfg = config.to_dict()
    if parity_rule:
        cfg["parity_rule"] = parity_rule
    return ConvergenceReport(
        cfg, prep.branch, prep.coefficients.to_dict(), rows, fits, config.seed, __version__,
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# gradient-squared emergence
# ---------------------------------------------------------------------------

@dataclass
class GradientSquareRow:
    epsilon: float
    t: float
    x: tuple[float, ...]
    h_rescaled: float
    target: float
    abs_err: float
    rel_err: float


@dataclass
class GradientSquareReport:
    gamma: float
    rows: list[GradientSquareRow]
    decreasing: dict

    def errors_at(self, t, x, relative=True):
        x = tuple(float(c) for c in np.atleast_1d(x))
        key = "rel_err" if relative else "abs_err"
        return [getattr(r, key) for r in self.rows if r.t == t and r.x == x]


def rescaled_h(config: ExperimentConfig, cs: CoefficientSet, epsilon: float, t: float, x) -> float:
    """``eps^-2 h_eps(t_eps, x_eps)`` from an exact light-cone evolution."""
    t_eps = rescaled_time(t, epsilon)
    if t_eps < 1:
        raise ValueError("need at least one lattice step")
    site = rescaled_site(x, epsilon, t_eps, config.parity_rule)
    lo = tuple(s - t_eps for s in site)
    hi = tuple(s + t_eps for s in site)
    surf = init_surface(config.initial, epsilon, (lo, hi))
    prev = evolve(surf, config.driving, t_eps - 1)
    nxt = evolve_step(prev, config.driving)
    h = compute_h_field(prev, nxt, cs)
    return h.at(site) / (epsilon * epsilon)


def run_gradient_square_check(config: ExperimentConfig, prep: Preparation | None = None) -> GradientSquareReport:
    """Compare the rescaled h-field with ``gamma |grad f|^2`` of the limit."""
    prep = prep or prepare(config)
    if prep.branch == "frozen":
        raise ValueError("gradient-squared check needs the kpz or heat branch")
    gamma = prep.evaluator.gamma
    targets = []
    for t, x in config.eval_points:
        grad = limit_gradient(prep.evaluator, t, x)
        targets.append(gamma * float(np.dot(grad, grad)))
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParityWarning)
        for eps in config.epsilons:
            for (t, x), target in zip(config.eval_points, targets):
                hr = rescaled_h(config, prep.coefficients, eps, t, x)
                err = abs(hr - target)
                rel = err / abs(target) if target != 0 else err
                rows.append(GradientSquareRow(eps, t, x, hr, target, err, rel))
    trend = {}
    for t, x in config.eval_points:
        errs = [r.abs_err for r in rows if r.t == t and r.x == x]
        trend[(t, x)] = all(b < a for a, b in zip(errs, errs[1:]))
    return GradientSquareReport(gamma, rows, trend)


@dataclass
class HScalingReport:
    epsilons: list[float]
    sup_h: list[float]
    constant: float
    slope: float
    fit_residual: float


def run_h_scaling(config: ExperimentConfig, cs: CoefficientSet, t: float = 1.0, window: float = 1.0,
                  epsilons: Sequence[float] | None = None) -> HScalingReport:
    """``sup |h_eps|`` over all steps up to ``t_eps`` and sites with ``|eps x|_inf <= window``.

    ``constant`` is the run-level ``C`` in ``sup |h_eps| <= C eps^2``.
    """
    epsilons = list(config.epsilons if epsilons is None else epsilons)
    d = config.dimension
    sups = []
    for eps in epsilons:
        t_eps = rescaled_time(t, eps)
        r = floor_int(window / eps)
        surf = init_surface(config.initial, eps, make_box((0,) * d, r + t_eps, d))
        best = [0.0]

        def track(prev, nxt):
            h = compute_h_field(prev, nxt, cs)
            lo = tuple(-r - o for o in h.origin)
            sl = tuple(slice(l, l + 2 * r + 1) for l in lo)
            best[0] = max(best[0], float(np.max(np.abs(h.values[sl]))))

        evolve(surf, config.driving, t_eps, track)
        sups.append(best[0])
    slope, resid = loglog_slope(epsilons, sups)
    const = max(s / (e * e) for s, e in zip(sups, epsilons))
    return HScalingReport(epsilons, sups, const, slope, resid)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def report_csv(report: ConvergenceReport) -> str:
    d = int(report.config["dimension"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "t"] + [f"x{i + 1}" for i in range(d)] + ["f_eps", "f_limit", "abs_err", "fitted_order"])
    orders = {(f.t, f.x): f.order for f in report.fits}
    for r in report.rows:
        w.writerow([repr(r.epsilon), repr(r.t)] + [repr(c) for c in r.x]
                   + [repr(r.f_eps), repr(r.f_limit), repr(r.abs_err), repr(orders[(r.t, r.x)])])
    return buf.getvalue()


def report_json(report: ConvergenceReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report: ConvergenceReport, fmt: str, path) -> None:
    """Write ``report`` as CSV or JSON; output is byte-identical for equal reports.

    Wall-clock timing is deliberately left out of both formats.
    """
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report_json(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    Path(path).write_text(text)


def read_report(path) -> ConvergenceReport:
    with open(path) as fh:
        return ConvergenceReport.from_dict(json.load(fh))
