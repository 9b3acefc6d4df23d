"""Tour of the shipped driving functions.

For each kind we check the four axioms on random stencils, ask the smoothness
probe for a verdict, and print phi at a sample stencil.
"""
import numpy as np

from dkpz.driving import DrivingSpec, builtin_specs, evaluate, smoothness_probe, validate_properties

u = np.array([0.0, 0.4, -0.3, 0.1, 0.25])

print(f"{'kind':<14}{'params':<40}{'axioms':<8}{'probe':<20}{'phi(u)':>10}")
for spec in builtin_specs(2):
    rep = validate_properties(spec, sample_count=500)
    verdict = smoothness_probe(spec).verdict
    params = ", ".join(f"{k}={v}" for k, v in spec.params.items())
    print(f"{spec.kind:<14}{params:<40}{'ok' if rep.passed else 'FAIL':<8}{verdict:<20}{evaluate(spec, u):>10.5f}")

# A non-monotone map is caught with a concrete witness pair u <= v, phi(u) > phi(v).

bad = validate_properties(DrivingSpec("nonmonotone"), 200)
u_w, v_w = bad.checks["monotonicity"].witness
print("\nnonmonotone fails:", bad.failures())
print("  witness u =", np.round(u_w, 3), " v =", np.round(v_w, 3))
