"""Lazy random walk kernels against the Gaussian, and the random-walk
representation of an evolving surface."""
from dkpz.driving import DrivingSpec
from dkpz.lattice import InitialData
from dkpz.rwalk import clt_error_table, reconstruct_via_representation

for alpha, beta in [(0.5, 0.25), (0.0, 0.5)]:
    table = clt_error_table(alpha, beta, 1, [4, 16, 64, 256])
    print(f"alpha={alpha}, beta={beta} ({table.parity_mode} Gaussian)")
    for t, e, s, _ in table.rows():
        print(f"  t={t:>4}  sup err {e:.3e}  t^1.5 * err {s:.4f}")
    print(f"  fitted order {table.fitted_order:.3f}\n")

# f_eps - t phi(0) = sum_y p(t, x - y) g_eps(y) + sum_s sum_y p(s, x - y) h(t - s, y)
rep = reconstruct_via_representation(
    InitialData("cosine", 1), DrivingSpec("logsumexp", 1), 0.1, 30, [[x] for x in range(-10, 11)]
)
print("representation identity, largest residual:", rep.max_residual)
