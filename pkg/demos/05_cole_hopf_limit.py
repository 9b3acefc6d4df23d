"""The continuum limit: Cole-Hopf for kpz drivers, the heat kernel when
gamma = 0, and the Duhamel integral equation as a cross-check."""
import math

from dkpz.lattice import InitialData
from dkpz.limit import LimitEvaluator, cole_hopf_eval, duhamel_check, limit_gradient

g = InitialData("cosine", 1)
kpz = LimitEvaluator(g, beta=0.5, gamma=0.5)
heat = LimitEvaluator(g, beta=0.5, gamma=0.0)

print("kpz  f(1, 0) =", cole_hopf_eval(kpz, 1.0, [0.0]))
print("heat f(1, 0) =", cole_hopf_eval(heat, 1.0, [0.0]), " exp(-1/2) =", math.exp(-0.5))
print("grad f(0.5, 1) =", limit_gradient(kpz, 0.5, [1.0]))

res = duhamel_check(kpz, 1.0, [0.0])
print(f"\nDuhamel: f = {res.lhs:.10f}, heat term {res.heat_term:.10f}, "
      f"gamma * source {0.5 * res.source_term:.10f}, residual {res.residual:.2e}")
