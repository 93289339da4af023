import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fenefp.geometry import ModelParams
from fenefp.quadrature import (IntegrationError, RuleCache, ball_rule,
                               closed_form_rho_moment, disk_rule,
                               integrate_field, integrate_weighted, trace_rule)


@pytest.fixture(scope="module")
def p4():
    return ModelParams(n=2, b=4.0)


def test_moments_match_closed_forms(p4):
    cache = RuleCache(p4, 64, 64)
    for mu in (-0.5, 0.0, 0.75, 2.0):
        q = cache.rule(mu)
        for k in (0, 1, 2, 3):
            num = integrate_field(lambda m: np.sum(m * m, axis=1) ** k, q)
            ref = closed_form_rho_moment(4.0, mu, k)
            assert num == pytest.approx(ref, rel=1e-12)


def test_moments_closed_forms_n3():
    p = ModelParams(n=3, b=4.0)
    q = ball_rule(p, 1.0, 48, 32)
    for k in (0, 1, 2):
        num = integrate_field(lambda m: np.sum(m * m, axis=1) ** k, q)
        ref = closed_form_rho_moment(4.0, 1.0, k, n=3)
        assert num == pytest.approx(ref, rel=1e-12)


@given(st.integers(min_value=0, max_value=4),
       st.floats(min_value=-0.9, max_value=3.0))
def test_monomial_exactness(k, mu):
    p = ModelParams(n=2, b=4.0)
    q = ball_rule(p, mu, 32, 16)
    num = integrate_field(lambda m: np.sum(m * m, axis=1) ** k, q)
    ref = closed_form_rho_moment(4.0, mu, k)
    assert num == pytest.approx(ref, rel=1e-11)


def test_angular_monomials_integrate_to_zero(p4):
    q = ball_rule(p4, 0.5, 32, 32)
    for fn in (lambda m: m[:, 0], lambda m: m[:, 0] * m[:, 1],
               lambda m: m[:, 0] ** 3):
        assert abs(integrate_field(fn, q)) < 1e-12


def test_extra_rho_power_folding(p4):
    q = ball_rule(p4, 1.0, 64, 16)
    ones = np.ones(len(q.weights))
    val = integrate_weighted(ones, q, extra_rho_power=2.0)
    assert val == pytest.approx(closed_form_rho_moment(4.0, 3.0), rel=1e-13)


def test_non_integrable_weight_rejected(p4):
    with pytest.raises(IntegrationError):
        ball_rule(p4, -1.0)
    with pytest.raises(IntegrationError):
        RuleCache(p4).rule(-1.5)


def test_non_finite_integrand_rejected(p4):
    q = ball_rule(p4, 0.0, 8, 8)
    bad = np.full(len(q.weights), np.nan)
    with pytest.raises(IntegrationError):
        integrate_weighted(bad, q)


def test_disk_rule_area(p4):
    dr = disk_rule(p4, 1.5, 32, 32)
    assert np.sum(dr.weights) == pytest.approx(np.pi * 1.5 ** 2, rel=1e-13)
    # quadratic moment on the disk: int r^2 dm = pi R^4 / 2
    val = integrate_weighted(np.sum(dr.nodes ** 2, axis=1), dr)
    assert val == pytest.approx(np.pi * 1.5 ** 4 / 2.0, rel=1e-13)


def test_trace_rule_circumference():
    tr = trace_rule(2.0, 128)
    assert np.sum(tr.weights) == pytest.approx(4.0 * np.pi, rel=1e-14)
    np.testing.assert_allclose(np.sum(tr.nodes ** 2, axis=1), 4.0)


def test_rule_cache_reuses_rules(p4):
    cache = RuleCache(p4, 16, 16)
    assert cache.rule(0.5) is cache.rule(0.5)
    assert cache.rule(0.5) is not cache.rule(1.5)


def test_equilibrium_normalization_quadrature_oracle(p4):
    q = ball_rule(p4, p4.b / 2.0, 64, 16)
    z = integrate_weighted(np.ones(len(q.weights)), q)
    assert z == pytest.approx(64.0 * np.pi / 3.0, rel=1e-13)
