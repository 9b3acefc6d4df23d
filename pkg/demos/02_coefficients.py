"""Extract alpha, beta, gamma from a driving function and see which branch
of the scaling limit it falls into."""
from dkpz.coeffs import check_coefficient_consistency, extract_coefficients
from dkpz.driving import DrivingSpec

specs = [
    DrivingSpec("average", 1),
    DrivingSpec("logsumexp", 1, {"theta": 1.0}),
    DrivingSpec("gradient_form", 1, {"variant": "sine"}),
    DrivingSpec("gradient_form", 2, {"variant": "sine_neg"}),
    DrivingSpec("gibbs", 1, {"potential": "quartic", "lam": 0.5}),
    DrivingSpec("smoothed", 1, {"base": "lpp_max"}),
    DrivingSpec("identity", 1),
]

print(f"{'kind':<14}{'d':>2}{'alpha':>10}{'beta':>10}{'gamma':>12}  branch")
for spec in specs:
    cs = extract_coefficients(spec)
    rep = check_coefficient_consistency(cs, spec.dimension)
    print(f"{spec.kind:<14}{spec.dimension:>2}{cs.alpha:>10.6f}{cs.beta:>10.6f}{cs.gamma:>12.6f}  {rep.branch}")

# The sum rule alpha + 2d beta = 1 follows from equivariance alone.
cs = extract_coefficients(DrivingSpec("logsumexp", 3, {"theta": 2.0}))
print("\nlogsumexp d=3: alpha + 6 beta =", cs.alpha + 6 * cs.beta)
