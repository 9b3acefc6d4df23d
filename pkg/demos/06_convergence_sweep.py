"""Sweep epsilon for each shipped configuration and compare the rescaled
discrete surface with the continuum limit."""
from dkpz.harness import run_convergence_sweep, shipped_config, shipped_config_names

for name in shipped_config_names():
    cfg = shipped_config(name)
    rep = run_convergence_sweep(cfg)
    print(f"{name} ({rep.branch}, parity rule {cfg.parity_rule})")
    for fit in rep.fits:
        errs = rep.errors_at(fit.t, fit.x)
        cells = "  ".join(f"{e:.2e}" for e in errs)
        print(f"  t={fit.t}, x={fit.x}:  {cells}   order {fit.order:.2f}")
    print()
