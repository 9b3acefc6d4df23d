import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from dkpz.driving import DrivingSpec
from dkpz.lattice import InitialData
from dkpz.rwalk import (
    WalkError,
    clt_error_table,
    gaussian_kernel_array,
    kernel_exact,
    kernel_gaussian,
    kernel_sequence,
    loglog_slope,
    reconstruct_via_representation,
)


@pytest.mark.parametrize("t", [1, 5, 40])
def test_lazy_walk_is_shifted_binomial(t):
    # one step of (1/4, 1/2, 1/4) is the sum of two fair coin flips minus one
    k = kernel_exact(0.5, 0.25, 1, t)
    x = np.arange(-t, t + 1)
    np.testing.assert_allclose(k.mass, binom.pmf(x + t, 2 * t, 0.5), atol=1e-15)


@pytest.mark.parametrize("t", [2, 7, 30])
def test_simple_walk_is_binomial_on_its_parity(t):
    k = kernel_exact(0.0, 0.5, 1, t)
    x = np.arange(-t, t + 1)
    want = np.where((x + t) % 2 == 0, binom.pmf((x + t) // 2, t, 0.5), 0.0)
    np.testing.assert_allclose(k.mass, want, atol=1e-15)


def test_d2_kernel_symmetric_and_normalised():
    k = kernel_exact(0.2, 0.2, 2, 12)
    assert k.total() == pytest.approx(1.0, abs=1e-13)
    assert k.at((13, 0)) == 0.0
    np.testing.assert_allclose(k.mass, k.mass.T, atol=1e-16)
    np.testing.assert_allclose(k.mass, k.mass[::-1, :], atol=1e-16)


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0, 1), d=st.integers(1, 3), t=st.integers(0, 8))
def test_kernel_invariants(alpha, d, t):
    beta = (1 - alpha) / (2 * d)
    p = kernel_sequence(alpha, beta, d, t)
    for s, m in enumerate(p):
        assert m.shape == (2 * s + 1,) * d
        assert np.all(m >= 0)
        assert abs(m.sum() - 1) < 1e-12
    if t >= 1:
        # one step of the recursion from p(t - 1)
        prev = np.pad(p[-2], 1)
        step = alpha * prev
        for ax in range(d):
            step = step + beta * (np.roll(prev, 1, ax) + np.roll(prev, -1, ax))
        np.testing.assert_allclose(p[-1], step, atol=1e-14)


def test_invalid_walks_rejected():
    with pytest.raises(WalkError):
        kernel_exact(0.5, 0.5, 1, 3)
    with pytest.raises(WalkError):
        kernel_exact(1.2, -0.1, 1, 3)
    with pytest.raises(WalkError):
        kernel_gaussian(0, [0.0], 0.25)


def test_gaussian_formula_and_parity_doubling():
    val = kernel_gaussian(10, [2.0], 0.25)
    assert val == pytest.approx((4 * np.pi * 0.25 * 10) ** -0.5 * np.exp(-4 / 10))
    xs = np.array([[0.0], [1.0], [2.0]])
    per = gaussian_kernel_array(4, xs, 0.5, "periodic")
    ape = gaussian_kernel_array(4, xs, 0.5)
    np.testing.assert_allclose(per, [2 * ape[0], 0.0, 2 * ape[2]])


def test_loglog_slope_exact_power():
    xs = [1, 2, 4, 8]
    slope, rms = loglog_slope(xs, [3 * x**-1.5 for x in xs])
    assert slope == pytest.approx(-1.5)
    assert rms < 1e-14


def test_clt_table_and_csv():
    table = clt_error_table(0.5, 0.25, 1, [4, 16, 64])
    assert all(b < a for a, b in zip(table.sup_err, table.sup_err[1:]))
    # sup error is O(t^{-(d+2)/2}): the scaled column levels off
    assert table.fitted_order > 1.2
    lines = table.to_csv().splitlines()
    assert lines[0] == "t,sup_err,scaled_err,fitted_order"
    assert len(lines) == 4


def test_clt_d2_order():
    table = clt_error_table(0.2, 0.2, 2, [4, 8, 16, 32])
    assert table.fitted_order > 1.5


def test_clt_times_validated():
    with pytest.raises(WalkError):
        clt_error_table(0.5, 0.25, 1, [16, 4])


@pytest.mark.parametrize("spec", [
    DrivingSpec("gradient_form", 1),
    DrivingSpec("logsumexp", 1),
    DrivingSpec("gibbs", 1, {"potential": "quartic", "lam": 0.5}),
])
def test_representation_identity_d1(spec):
    g = InitialData("cosine", 1)
    rep = reconstruct_via_representation(g, spec, 0.1, 20, [[-5], [0], [3]])
    assert rep.max_residual <= 1e-9


def test_representation_identity_d2_capped():
    g = InitialData("capped_abs", 2, {"cap": 0.4})
    rep = reconstruct_via_representation(g, DrivingSpec("gradient_form", 2), 0.2, 8, [(0, 0), (2, -1)])
    assert rep.max_residual <= 1e-9
