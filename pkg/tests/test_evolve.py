import numpy as np
import pytest

from fenefp.basis import build_basis
from fenefp.evolve import (SolveError, crank_nicolson, picard_solve, project)
from fenefp.geometry import ModelParams, equilibrium_normalization, kappa_shear
from fenefp.operators import assemble
from fenefp.quadrature import RuleCache


@pytest.fixture(scope="module")
def setup():
    p = ModelParams(n=2, b=4.0, kappa=kappa_shear(1.0), horizon=1.0)
    cache = RuleCache(p, 64, 64)
    bs = build_basis(p, p.beta, 8, 6, cache)
    op = assemble(bs, cache)
    return p, cache, bs, op


def test_projection_reproduces_basis_span_field(setup):
    # w_eq = rho / Z lies in the span (rho times a degree-0 polynomial)
    p, cache, bs, op = setup
    z = equilibrium_normalization(p)

    def w_eq(nodes):
        nodes = np.asarray(nodes, dtype=float)
        return (p.b - np.sum(nodes * nodes, axis=1)) / z

    d = project(bs, w_eq, op.M, cache)
    pts = np.array([[0.1, 0.2], [0.5, -0.3], [1.2, 0.4]])
    np.testing.assert_allclose(bs.evaluate(pts) @ d, w_eq(pts),
                               rtol=1e-11, atol=1e-14)


def test_trajectory_reconstructors(setup):
    p, cache, bs, op = setup
    d0 = np.zeros(bs.size)
    d0[0] = 1.0
    traj = crank_nicolson(op, d0, 0.1, 2)
    pts = np.array([[0.3, 0.1]])
    rho = p.b - np.sum(pts ** 2, axis=1)
    np.testing.assert_allclose(traj.f_at(0, pts), rho * traj.w_at(0, pts))
    norms = traj.l2_beta_norms(op.M)
    assert norms.shape == (3,)
    assert norms[0] == pytest.approx(np.sqrt(d0 @ op.M @ d0))


def test_crank_nicolson_second_order(setup):
    # halving the step size should cut the error by about four
    p, cache, bs, op = setup
    d0 = np.zeros(bs.size)
    d0[: bs.size // 2] = np.linspace(1.0, 0.1, bs.size // 2)
    ref = crank_nicolson(op, d0, 0.5, 1024).coeffs[-1]
    errs = []
    for N in (8, 16, 32):
        end = crank_nicolson(op, d0, 0.5, N).coeffs[-1]
        errs.append(np.linalg.norm(end - ref))
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(r > 1.8 for r in rates)


def test_crank_nicolson_with_forcing_matches_steady_state(setup):
    # constant forcing A d* = h has d* as a fixed point when kappa is constant
    p, cache, bs, op = setup
    rng = np.random.default_rng(11)
    d_star = rng.standard_normal(bs.size) * 0.1
    A = op.evolution_matrix(0.0)
    h = A @ d_star
    traj = crank_nicolson(op, d_star, 1.0, 50, forcing=lambda t: h)
    np.testing.assert_allclose(traj.coeffs[-1], d_star, rtol=1e-9, atol=1e-12)


def test_picard_matches_direct(setup):
    p, cache, bs, op = setup
    rng = np.random.default_rng(3)
    d0 = rng.standard_normal(bs.size) * 0.05
    direct = crank_nicolson(op, d0, 0.5, 50)
    fixed, rep = picard_solve(op, d0, 0.5, 50)
    assert rep.iterations >= 1
    assert max(rep.contraction_factors) < 0.9
    np.testing.assert_allclose(fixed.coeffs, direct.coeffs,
                               rtol=1e-7, atol=1e-10)


def test_invalid_march_rejected(setup):
    _, _, bs, op = setup
    with pytest.raises(SolveError):
        crank_nicolson(op, np.zeros(bs.size), 1.0, 0)
    with pytest.raises(SolveError):
        crank_nicolson(op, np.zeros(bs.size), -1.0, 10)
