import numpy as np
import pytest

from fenefp.checks import (ALL_CHECKS, CheckResult, check_conservation,
                           check_embedding, check_equilibrium_steady,
                           check_equivalence, check_garding,
                           check_nonuniqueness, check_picard, check_quadrature,
                           check_rev1_sign, check_trace_decay,
                           check_uniqueness, rev1_matrices)
from fenefp.geometry import ModelParams
from fenefp.quadrature import RuleCache
from fenefp.scenarios import Resolution

FAST = Resolution(10, 6, 64, 64, 60)


def test_result_line_format():
    res = CheckResult("demo", True, {"x": 1.5, "n": 3}, "note")
    line = res.line()
    assert line.startswith("[pass] demo:")
    assert "x=1.500e+00" in line and "n=3" in line and "(note)" in line
    assert CheckResult("demo", False).line().startswith("[FAIL]")


def test_quadrature_check():
    res = check_quadrature()
    assert res.passed
    assert res.measured["max_rel_err"] < 1e-12


def test_embedding_check():
    res = check_embedding()
    assert res.passed
    assert 0.0 < res.measured["C_beta"] < 10.0
    assert 0.0 < res.measured["C_b_half"] < 10.0


def test_trace_decay_check():
    res = check_trace_decay()
    assert res.passed
    assert res.measured["fit"] == pytest.approx(1.0, abs=0.05)


def test_equivalence_check():
    res = check_equivalence()
    assert res.passed
    assert res.measured["bound_b2.1"] > res.measured["bound_b4"]


def test_garding_check():
    res = check_garding()
    assert res.passed
    assert res.measured["min_C1"] > 0.0


def test_rev1_sign_check():
    res = check_rev1_sign()
    assert res.passed
    assert res.measured["max_lhs"] <= 1e-10
    assert res.measured["max_rel_mismatch"] < 1e-9


def test_rev1_matrices_on_known_field():
    # u = rho: int m.grad(u^2) rho^{gamma-1} has the closed value
    # -2 int |m|^2 rho^{gamma+1} . 2 / rho = -4 int |m|^2 rho^gamma
    p = ModelParams(n=2, b=4.0)
    gamma = 0.75
    cache = RuleCache(p, 96, 64)
    bs, P, Q = rev1_matrices(p, gamma, 4, 3, cache)
    # find coefficients with sum c phi = rho
    q = cache.rule(2.0)
    vals = bs.tabulate(q)[0]
    rho = q.rho
    c, *_ = np.linalg.lstsq(vals, rho, rcond=None)
    lhs = c @ (P + P.T) @ c
    from fenefp.quadrature import closed_form_rho_moment
    ref = -4.0 * closed_form_rho_moment(4.0, gamma, 1)
    assert lhs == pytest.approx(ref, rel=1e-10)
    assert -c @ Q @ c == pytest.approx(ref, rel=1e-10)


def test_conservation_check_fast():
    assert check_conservation(FAST).passed


def test_equilibrium_steady_check_fast():
    assert check_equilibrium_steady(FAST).passed


def test_uniqueness_check_fast():
    assert check_uniqueness(FAST).passed


def test_nonuniqueness_check_fast():
    res = check_nonuniqueness(Resolution(16, 4, 64, 64, 60))
    assert res.passed
    assert res.measured["separation"] > 1e-7


def test_picard_check_fast():
    res = check_picard(FAST)
    assert res.passed
    assert res.measured["contraction"] < 0.9


def test_suite_covers_all_invariants():
    names = [fn.__name__ for fn in ALL_CHECKS]
    assert len(names) == len(set(names)) == 11
