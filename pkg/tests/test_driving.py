import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from dkpz.driving import (
    DimensionMismatch,
    DrivingError,
    DrivingSpec,
    builtin_specs,
    evaluate,
    lattice_symmetries,
    neighbor_index,
    smoothness_probe,
    validate_properties,
)


def test_stencil_ordering():
    assert neighbor_index(0, +1) == 1
    assert neighbor_index(0, -1) == 2
    assert neighbor_index(2, -1) == 6


def test_closed_forms_d1():
    u = np.array([0.3, 1.0, -0.5])
    assert evaluate(DrivingSpec("average"), u) == pytest.approx(0.25)
    assert evaluate(DrivingSpec("logsumexp"), u) == pytest.approx(math.log(math.e + math.exp(-0.5)))
    assert evaluate(DrivingSpec("lpp_max"), u) == 1.0
    assert evaluate(DrivingSpec("rsos_maxmin"), u) == pytest.approx(0.25)
    assert evaluate(DrivingSpec("identity"), u) == 0.3
    # u0 + sum_b q(u_b - u0) / 2 with q(v) = (v + 1 - cos v) / 4
    q = lambda v: (v + 1 - math.cos(v)) / 4
    assert evaluate(DrivingSpec("gradient_form"), u) == pytest.approx(0.3 + (q(0.7) + q(-0.8)) / 2)


def test_logsumexp_theta_scaling():
    u = np.array([0.0, 0.4, -0.2, 1.1, 0.3])
    theta = 2.5
    expect = math.log(sum(math.exp(theta * v) for v in u[1:])) / theta
    assert evaluate(DrivingSpec("logsumexp", 2, {"theta": theta}), u) == pytest.approx(expect, abs=1e-14)


def test_gibbs_quadratic_is_average():
    rng = np.random.default_rng(3)
    u = rng.normal(size=(50, 5)) * 2
    got = evaluate(DrivingSpec("gibbs", 2), u)
    want = evaluate(DrivingSpec("average", 2), u)
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_gibbs_quartic_against_quad():
    spec = DrivingSpec("gibbs", 1, {"potential": "quartic", "lam": 0.5})
    u = np.array([0.0, 0.9, -0.4])
    V = lambda x: 0.5 * x * x + 0.5 * x**4
    energy = lambda s: V(0.9 - s) + V(-0.4 - s)
    num = quad(lambda s: s * math.exp(-energy(s)), -np.inf, np.inf, epsabs=1e-13)[0]
    den = quad(lambda s: math.exp(-energy(s)), -np.inf, np.inf, epsabs=1e-13)[0]
    assert evaluate(spec, u) == pytest.approx(num / den, abs=1e-10)


def test_smoothed_max_against_quad():
    delta = 0.5
    u = np.array([0.1, 0.6, -0.3])
    spec = DrivingSpec("smoothed", 1, {"base": "lpp_max", "delta": delta})

    # E max = \int P(max <= m) complement, split at 0
    cdf = lambda m: np.prod([norm.cdf((m - v) / delta) for v in u])
    pos = quad(lambda m: 1 - cdf(m), 0, np.inf, epsabs=1e-13)[0]
    neg = quad(cdf, -np.inf, 0, epsabs=1e-13)[0]
    assert evaluate(spec, u) == pytest.approx(pos - neg, abs=1e-8)


def test_smoothed_rsos_is_odd_symmetric():
    spec = DrivingSpec("smoothed", 2, {"base": "rsos_maxmin"})
    u = np.array([0.2, 0.5, -1.0, 0.3, 0.8])
    assert evaluate(spec, -u) == pytest.approx(-evaluate(spec, u), abs=1e-13)


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(0)
    u = rng.normal(size=(7, 5))
    for spec in builtin_specs(2):
        batch = evaluate(spec, u)
        single = [evaluate(spec, row) for row in u]
        np.testing.assert_allclose(batch, single, rtol=0, atol=1e-13)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evaluate(DrivingSpec("average", 2), np.zeros(3))


@pytest.mark.parametrize("kind,params", [
    ("nope", {}),
    ("logsumexp", {"theta": 0.0}),
    ("gradient_form", {"scale": 3.0}),
    ("gradient_form", {"variant": "cosine"}),
    ("smoothed", {"order": 2}),
    ("gibbs", {"lam": -1.0}),
    ("average", {"theta": 1.0}),
])
def test_bad_specs_rejected(kind, params):
    with pytest.raises(DrivingError):
        DrivingSpec(kind, 1, params)


def test_spec_round_trip():
    spec = DrivingSpec("smoothed", 3, {"base": "rsos_maxmin", "delta": 0.25})
    assert DrivingSpec.from_dict(spec.to_dict()) == spec


def test_symmetry_group_sizes():
    assert len(lattice_symmetries(1)) == 1
    assert len(lattice_symmetries(3)) == 3 + 3


@pytest.mark.parametrize("d", [1, 2, 3])
def test_builtins_satisfy_axioms(d):
    for spec in builtin_specs(d):
        rep = validate_properties(spec, 1000, 1e-9, seed=d)
        assert rep.passed, (spec, rep.failures(), {k: c.worst for k, c in rep.checks.items()})


def test_nonmonotone_caught_with_witness():
    rep = validate_properties(DrivingSpec("nonmonotone"), 200, 1e-9)
    assert "monotonicity" in rep.failures()
    chk = rep.checks["monotonicity"]
    u, v = map(np.asarray, chk.witness)
    assert np.all(v >= u)
    f = DrivingSpec("nonmonotone")
    assert evaluate(f, u) > evaluate(f, v)


@pytest.mark.parametrize("spec,smooth", [
    (DrivingSpec("lpp_max", 1), False),
    (DrivingSpec("lpp_max", 2), False),
    (DrivingSpec("rsos_maxmin", 2), False),
    (DrivingSpec("rsos_maxmin", 3), False),
    (DrivingSpec("average", 2), True),
    (DrivingSpec("logsumexp", 1), True),
    (DrivingSpec("gradient_form", 3), True),
    (DrivingSpec("smoothed", 1), True),
    (DrivingSpec("smoothed", 2, {"base": "rsos_maxmin"}), True),
    (DrivingSpec("gibbs", 1, {"potential": "quartic", "lam": 0.5}), True),
])
def test_smoothness_probe(spec, smooth):
    assert smoothness_probe(spec).smooth is smooth


def test_rsos_d1_reduces_to_average():
    # with two neighbours (max + min) / 2 is their mean, which is genuinely smooth
    rng = np.random.default_rng(1)
    u = rng.normal(size=(20, 3))
    np.testing.assert_allclose(evaluate(DrivingSpec("rsos_maxmin"), u), evaluate(DrivingSpec("average"), u))
    assert smoothness_probe(DrivingSpec("rsos_maxmin", 1)).smooth


stencils = st.lists(st.floats(-3, 3, allow_nan=False), min_size=5, max_size=5).map(np.array)


@settings(max_examples=60, deadline=None)
@given(u=stencils, c=st.floats(-50, 50), bump=stencils)
def test_axioms_property(u, c, bump):
    bump = np.abs(bump)
    for spec in builtin_specs(2):
        fu = evaluate(spec, u)
        assert abs(evaluate(spec, u + c) - fu - c) <= 1e-9 * max(1, abs(c))
        assert evaluate(spec, u + bump) >= fu - 1e-9
        assert abs(evaluate(spec, u + bump) - fu) <= np.max(bump) + 1e-9


@pytest.mark.parametrize("d", [1, 2, 3])
def test_equivariance_tight(d):
    rng = np.random.default_rng(7)
    u = rng.normal(size=(100, 2 * d + 1))
    c = rng.uniform(-10, 10, size=100)
    for spec in builtin_specs(d):
        np.testing.assert_allclose(evaluate(spec, u + c[:, None]), evaluate(spec, u) + c, rtol=0, atol=1e-10)


def test_evaluate_is_pure():
    u = np.random.default_rng(2).normal(size=(30, 5))
    for spec in builtin_specs(2):
        assert np.array_equal(evaluate(spec, u), evaluate(spec, u.copy()))
