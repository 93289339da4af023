import numpy as np
import pytest

from fenefp.basis import build_basis
from fenefp.geometry import ModelParams, kappa_shear, kappa_zero
from fenefp.operators import (AssembledOperator, CoercivityError, assemble,
                              degenerate_drift, garding_constants, gram_L2)
from fenefp.quadrature import RuleCache
from fenefp.scenarios import mass_vector


@pytest.fixture(scope="module")
def setup():
    p = ModelParams(n=2, b=4.0, kappa=kappa_shear(1.0))
    cache = RuleCache(p, 64, 64)
    bs = build_basis(p, p.beta, 6, 4, cache)
    op = assemble(bs, cache)
    return p, cache, bs, op


def test_mass_matrix_matches_direct_quadrature(setup):
    # at b = 4 the weight exponent is 0, so the integrand is polynomial
    # and a single plain rule integrates every entry exactly
    _, cache, bs, op = setup
    q = cache.rule(0.0)
    vals = bs.evaluate(q.nodes)
    ref = vals.T @ (q.weights[:, None] * vals)
    np.testing.assert_allclose(op.M, ref, rtol=1e-12, atol=1e-10)


def test_mass_matrix_spd(setup):
    _, _, _, op = setup
    np.testing.assert_allclose(op.M, op.M.T, atol=1e-11)
    assert np.min(np.linalg.eigvalsh(op.M)) > 0.0


def test_stiffness_psd(setup):
    _, _, _, op = setup
    np.testing.assert_allclose(op.S, op.S.T, atol=1e-10)
    assert np.min(np.linalg.eigvalsh(op.S)) > -1e-12


def test_stiffness_matches_direct_quadrature(setup):
    _, cache, bs, op = setup
    q = cache.rule(0.0)
    grads = bs.gradients(q.nodes)
    ref = 0.5 * np.einsum("nic,n,njc->ij", grads, q.weights, grads)
    np.testing.assert_allclose(op.S, ref, rtol=1e-12, atol=1e-10)


def test_reaction_kappa_zero_is_constant_block():
    p = ModelParams(n=2, b=4.0, kappa=kappa_zero())
    cache = RuleCache(p, 64, 64)
    bs = build_basis(p, p.beta, 4, 3, cache)
    op = assemble(bs, cache)
    np.testing.assert_allclose(op.reaction(0.3),
                               p.n * (p.b / 2.0 - 1.0) * op.R0)


def test_reaction_shear_block(setup):
    p, cache, bs, op = setup
    # reaction coefficient 2 m.kappa m + n(b/2-1) against phi_i phi_j rho^{-1};
    # fold the basis prefactors so the rule exponent stays admissible
    q = cache.rule(1.0)  # weights carry rho^1; (phi/rho)^2 restores rho^{-1}
    vals = bs.evaluate(q.nodes) / q.rho[:, None]
    coef = 2.0 * q.nodes[:, 0] * q.nodes[:, 1] + p.n * (p.b / 2.0 - 1.0)
    ref = vals.T @ ((q.weights * coef)[:, None] * vals)
    np.testing.assert_allclose(op.reaction(0.0), ref, rtol=1e-11, atol=1e-9)


def test_discrete_mass_conservation_rows(setup):
    # the mass functional is stationary under the evolution: v solves
    # M c = mass_vector and c^T A(t) vanishes for every t
    _, cache, bs, op = setup
    v = mass_vector(bs, cache)
    c = np.linalg.solve(op.M, v)
    for t in (0.0, 0.37, 1.0):
        row = c @ op.evolution_matrix(t)
        assert np.max(np.abs(row)) < 1e-10 * np.max(np.abs(op.M))


def test_gram_power_shift(setup):
    _, cache, bs, _ = setup
    q = cache.rule(1.0)  # weights carry the shifted rho power
    vals = bs.evaluate(q.nodes)
    ref = vals.T @ (q.weights[:, None] * vals)
    np.testing.assert_allclose(gram_L2(bs, cache, rho_power_shift=1), ref,
                               rtol=1e-12, atol=1e-9)


def test_degenerate_drift_vanishes_at_gamma_beta():
    p = ModelParams(n=2, b=4.0)
    cache = RuleCache(p, 64, 64)
    bs = build_basis(p, 0.5, 4, 3, cache)
    d0 = degenerate_drift(bs, cache, beta=0.5)
    np.testing.assert_allclose(d0, 0.0, atol=1e-15)
    op = assemble(bs, cache, beta=p.beta, gamma_mode=True)
    assert op.D0 is not None
    assert np.max(np.abs(op.D0)) > 0.0
    op2 = assemble(bs, cache)
    assert op2.D0 is None


def test_garding_certificate_positive(setup):
    _, _, _, op = setup
    c1, c2 = garding_constants(op, 0.0)
    assert c1 > 0.0
    assert c2 >= 0.0
    # certified inequality holds for random vectors
    rng = np.random.default_rng(5)
    q = 0.5 * (op.bilinear(0.0) + op.bilinear(0.0).T)
    for _ in range(20):
        c = rng.standard_normal(op.M.shape[0])
        lhs = c1 * (c @ op.gram_H1 @ c)
        rhs = c @ q @ c + c2 * (c @ op.M @ c)
        assert lhs <= rhs + 1e-9 * abs(rhs)


def test_garding_failure_raises(setup):
    # an overwhelming drift term makes the form too indefinite to certify
    # within a small C2 budget; the H^1 Gram itself stays positive definite
    _, cache, bs, op = setup
    bad_dab = op.Dab.copy()
    bad_dab[0, 1] = -50.0 * op.gram_H1
    bad = AssembledOperator(basis=bs, cache=cache, M=op.M, S=op.S,
                            Dab=bad_dab, R0=op.R0, Rab=op.Rab)
    with pytest.raises(CoercivityError):
        garding_constants(bad, 0.0, max_c2=4.0)


def test_evolution_matrix_combines_blocks(setup):
    _, _, _, op = setup
    t = 0.42
    np.testing.assert_allclose(op.evolution_matrix(t),
                               op.S + op.drift(t) - op.reaction(t))
