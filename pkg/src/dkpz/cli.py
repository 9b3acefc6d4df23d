"""Command line entry point (``dkpz`` / ``python -m dkpz``)."""
from __future__ import annotations

import argparse
import csv
import json
import sys

from .coeffs import NonSmoothDriving, InconsistentDirections, check_coefficient_consistency, extract_coefficients
from .driving import GibbsQuadratureError, validate_properties
from .harness import (
    ValidationFailed,
    emit_report,
    load_config,
    prepare,
    run_convergence_sweep,
)
from .lattice import LatticeError, SizingError, evolve, init_surface, make_box
from .limit import QuadratureError, cole_hopf_eval, duhamel_check
from .rwalk import clt_error_table

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _point(text: str) -> tuple[float, list[float]]:
    t, _, xs = text.partition(":")
    return float(t), [float(c) for c in xs.split(",")]


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    rep = validate_properties(cfg.driving, cfg.tol("validation_samples"), cfg.tol("validation"), cfg.seed)
    _dump({
        "kind": rep.kind,
        "seed": rep.seed,
        "samples": rep.sample_count,
        "passed": rep.passed,
        "checks": {k: {"passed": c.passed, "worst": c.worst, "witness": c.witness}
                   for k, c in rep.checks.items()},
    })
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def cmd_coeffs(args) -> int:
    cfg = load_config(args.config)
    cs = extract_coefficients(cfg.driving)
    cons = check_coefficient_consistency(cs, cfg.dimension, cfg.tol("consistency"))
    _dump(cs.to_dict() | {"branch": cons.branch, "consistent": cons.passed, "notes": cons.notes})
    return EXIT_OK if cons.passed else EXIT_VALIDATION


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    d = cfg.dimension
    radius = args.radius + args.steps
    surf = init_surface(cfg.initial, args.epsilon, make_box((0,) * d, radius, d))
    surf = evolve(surf, cfg.driving, args.steps)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(d)] + ["height"])
        for site, h in zip(surf.sites().reshape(-1, d), surf.heights.ravel()):
            w.writerow([int(c) for c in site] + [repr(float(h))])
    return EXIT_OK


def cmd_walk(args) -> int:
    times = [int(t) for t in args.times.split(",")]
    table = clt_error_table(args.alpha, args.beta, args.dim, times)
    with open(args.out, "w") as fh:
        fh.write(table.to_csv())
    return EXIT_OK


def cmd_limit(args) -> int:
    cfg = load_config(args.config)
    ev = prepare(cfg).evaluator
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(cfg.dimension)] + ["f"])
    for item in filter(None, args.points.split(";")):
        t, x = _point(item)
        w.writerow([repr(t)] + [repr(c) for c in x] + [repr(cole_hopf_eval(ev, t, x))])
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    report = run_convergence_sweep(cfg)
    fmt = "csv" if args.out.endswith(".csv") else "json"
    emit_report(report, fmt, args.out)
    return EXIT_OK


def cmd_duhamel(args) -> int:
    cfg = load_config(args.config)
    ev = prepare(cfg).evaluator
    t, x = _point(args.point)
    res = duhamel_check(ev, t, x)
    _dump({"t": t, "x": x, "residual": res.residual, "lhs": res.lhs,
           "heat_term": res.heat_term, "source_term": res.source_term,
           "refinement_change": res.refinement_change})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dkpz", description="deterministic KPZ lattice laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the driving-function axioms")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("coeffs", help="extract alpha, beta, gamma as JSON")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("evolve", help="evolve the surface and dump a slice as CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--radius", type=int, default=10, help="half-width of the output box")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("walk", help="local CLT error table as CSV")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--times", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_walk)

    s = sub.add_parser("limit", help="evaluate the continuum limit at points t:x1[,x2..];...")
    s.add_argument("--config", required=True)
    s.add_argument("--points", required=True)
    s.set_defaults(func=cmd_limit)

    s = sub.add_parser("sweep", help="epsilon sweep against the limit")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("duhamel", help="Duhamel residual at one point (d = 1)")
    s.add_argument("--config", required=True)
    s.add_argument("--point", required=True)
    s.set_defaults(func=cmd_duhamel)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationFailed, NonSmoothDriving, InconsistentDirections) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, GibbsQuadratureError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, SizingError, MemoryError, json.JSONDecodeError, KeyError) as exc:
        print(f"i/o or sizing error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LatticeError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
