"""Invariant suites behind the `check` subcommand.

Each suite measures a provable property of the continuous problem on the
discrete objects and reports the measured quantities next to its
tolerance, so a failure names the violated invariant directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .basis import build_basis
from .evolve import crank_nicolson, picard_solve, project
from .geometry import ModelParams, kappa_shear, kappa_zero
from .operators import (CoercivityError, assemble, garding_constants, gram_L2)
from .quadrature import RuleCache, closed_form_rho_moment, integrate_field
from .scenarios import (FPFProblem, NonUniqueProblem, Resolution, SOLVER_TOL,
                        boundary_forcing, f0_equilibrium, interior_separation,
                        solve_fpf, solve_nonunique)
from .spaces import equivalence_ratio, radius_ladder, trace_profile


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in self.measured.items())
        return f"[{status}] {self.name}: {extras}" + (
            f" ({self.detail})" if self.detail else "")


def check_quadrature(b: float = 4.0, tol: float = 1e-12) -> CheckResult:
    """Weighted moments against Beta-function closed forms; Z for b=4."""
    p = ModelParams(n=2, b=b)
    cache = RuleCache(p, 64, 64)
    worst = 0.0
    for mu in (-0.5, 0.0, 0.75, 1.0, 2.0, b / 2.0):
        q = cache.rule(mu)
        for k in (0, 1, 2):
            num = integrate_field(lambda m: np.sum(m * m, axis=1) ** k, q)
            ref = closed_form_rho_moment(b, mu, k)
            worst = max(worst, abs(num - ref) / abs(ref))
    z = geo.equilibrium_normalization(p)
    z_ref = 2.0 * np.pi * b ** (b / 2.0 + 1.0) / (b + 2.0)
    worst = max(worst, abs(z - z_ref) / z_ref)
    measured = {"max_rel_err": worst}
    if b == 4.0:
        measured["Z_rel_err_64pi3"] = abs(z - 64.0 * np.pi / 3.0) / (64.0 * np.pi / 3.0)
        worst = max(worst, measured["Z_rel_err_64pi3"])
    return CheckResult("quadrature closed forms", worst < tol, measured,
                       f"tolerance {tol:g}")


def _basis_embedding_constant(p: ModelParams, mu: float, K_r: int, K_theta: int,
                              cache: RuleCache) -> float:
    """max_i ||phi_i||_{L^2_{mu-2}} / ||phi_i||_{H^1_mu}, vectorized per family.

    Same folding as embedding_defect: for mu < 1 the rho^s prefactor of the
    family is absorbed into the rule exponent; gradients only need rule(mu).
    """
    bs = build_basis(p, p.beta, K_r, K_theta, cache)
    lhs_sq = np.zeros(bs.size)
    rhs_sq = np.zeros(bs.size)
    for (s, _), idx in bs.power_groups.items():
        van = s if mu < 1.0 else 0.0
        q1 = cache.rule(mu - 2.0 + 2.0 * van)
        v1 = bs.tabulate(q1)[0][:, idx]
        if van != 0.0:
            v1 = v1 / q1.rho[:, None] ** van
        lhs_sq[idx] = q1.weights @ (v1 * v1)

        q2 = cache.rule(mu + 2.0 * van)
        v2 = bs.tabulate(q2)[0][:, idx]
        if van != 0.0:
            v2 = v2 / q2.rho[:, None] ** van
        rhs_sq[idx] = q2.weights @ (v2 * v2)
        q3 = cache.rule(mu)
        g = bs.tabulate(q3)[1][:, idx, :]
        rhs_sq[idx] += q3.weights @ np.sum(g * g, axis=2)
    return float(np.max(np.sqrt(lhs_sq / rhs_sq)))


def check_embedding(b: float = 4.0, rel_window: float = 0.10) -> CheckResult:
    """||phi||_{L^2_{mu-2}} <= C ||phi||_{H^1_mu} over basis functions.

    Checked on the mu = beta branch and the mu = b/2 branch; the constant
    must be stable (within rel_window) under basis-degree doubling.
    """
    p = ModelParams(n=2, b=b)
    cache = RuleCache(p, 96, 64)
    measured = {}
    ok = True
    for label, mu in (("beta", p.beta), ("b_half", b / 2.0)):
        c1 = _basis_embedding_constant(p, mu, 6, 4, cache)
        c2 = _basis_embedding_constant(p, mu, 12, 8, cache)
        measured[f"C_{label}"] = c2
        measured[f"C_{label}_drift"] = abs(c2 - c1) / c1
        ok = ok and np.isfinite(c2) and abs(c2 - c1) / c1 < rel_window
    return CheckResult("weighted embedding constant", ok, measured,
                       f"stability window {rel_window:.0%}")


def check_trace_decay(b: float = 4.0, tol: float = 0.05) -> CheckResult:
    """Equilibrium boundary profile f^eq/d decays like d^{b/2-1}."""
    p = ModelParams(n=2, b=b)
    feq = geo.equilibrium(p)

    def feq_over_d(nodes):
        nodes = np.asarray(nodes, dtype=float)
        dist = p.radius - np.sqrt(np.sum(nodes * nodes, axis=1))
        return feq(nodes) / dist

    radii = radius_ladder(b, 3, 14)
    _, trace = trace_profile(feq_over_d, b, 3, 14)
    d = p.radius - radii
    slope = float(np.polyfit(np.log(d), np.log(trace), 1)[0])
    expected = b / 2.0 - 1.0
    return CheckResult("equilibrium trace decay exponent",
                       abs(slope - expected) < tol,
                       {"fit": slope, "expected": expected},
                       f"tolerance {tol:g}")


def _f_space_field(p: ModelParams, bs, c):
    """Basis combination times rho^{b/2-1}, so it vanishes like an f-field."""
    F0 = bs.function(c)
    G0 = bs.gradient_function(c)
    e = p.b / 2.0 - 1.0

    def F(m):
        m = np.asarray(m, dtype=float)
        rho = p.b - np.sum(m * m, axis=1)
        return rho ** e * F0(m)

    def G(m):
        m = np.asarray(m, dtype=float)
        rho = p.b - np.sum(m * m, axis=1)
        return (rho[:, None] ** e * G0(m)
                - 2.0 * e * m * (rho ** (e - 1.0) * F0(m))[:, None])

    return F, G


def check_equivalence(tol_growth: float = 0.0) -> CheckResult:
    """Both norm-equivalence ratios bounded at b=4; bound grows as b drops to 2.1."""
    bounds = []
    for b in (4.0, 3.0, 2.5, 2.2, 2.1):
        p = ModelParams(n=2, b=b)
        cache = RuleCache(p, 96, 64)
        bs = build_basis(p, p.beta, 6, 4, cache)
        worst = 0.0
        for i in range(bs.size):
            c = np.zeros(bs.size)
            c[i] = 1.0
            F, G = _f_space_field(p, bs, c)
            a, cc = equivalence_ratio(F, G, p, cache,
                                      vanish=float(bs.powers[i]) + b / 2.0 - 1.0)
            worst = max(worst, a / cc, cc / a)
        bounds.append(worst)
    monotone = all(bounds[i + 1] > bounds[i] + tol_growth
                   for i in range(len(bounds) - 1))
    ok = np.isfinite(bounds[0]) and monotone
    return CheckResult("norm equivalence ratios", ok,
                       {"bound_b4": bounds[0], "bound_b2.1": bounds[-1]},
                       "monotone growth toward b=2")


def check_garding() -> CheckResult:
    """Certified C1 > 0 for b in {2.5, 3, 4, 6} and shear rates {0, 1, 2}."""
    measured = {}
    ok = True
    for b in (2.5, 3.0, 4.0, 6.0):
        for rate in (0.0, 1.0, 2.0):
            kap = kappa_zero() if rate == 0.0 else kappa_shear(rate)
            p = ModelParams(n=2, b=b, kappa=kap)
            cache = RuleCache(p, 64, 64)
            bs = build_basis(p, p.beta, 8, 6, cache)
            op = assemble(bs, cache)
            try:
                c1, c2 = garding_constants(op, 0.0)
            except CoercivityError:
                ok = False
                c1, c2 = float("nan"), float("nan")
            measured[f"C1(b={b:g},k={rate:g})"] = c1
            ok = ok and c1 > 0.0
    return CheckResult("Garding coercivity certificate", ok,
                       {"min_C1": min(measured.values())},
                       "12 parameter combinations")


def rev1_matrices(p: ModelParams, gamma: float, K_r: int, K_theta: int,
                  cache: RuleCache):
    """Matrices P, Q with int m.grad(u^2) rho^{gamma-1} = c^T (P + P^T) c and
    the integrated-by-parts value -c^T Q c."""
    bs = build_basis(p, gamma, K_r, K_theta, cache)
    P = np.zeros((bs.size, bs.size))
    Q = np.zeros((bs.size, bs.size))
    for fA, ia in bs.power_groups.items():
        for fB, ib in bs.power_groups.items():
            e1 = gamma - 1.0 + fA[0] + fB[0]
            r1 = cache.rule(e1 - 1.0)           # gradient on the trial factor
            vals, grads = bs.tabulate(r1)
            w = r1.weights * r1.rho ** (gamma - 1.0 - (e1 - 1.0))
            integ = np.einsum("nc,nlc->nl", r1.nodes, grads[:, ib, :])
            P[np.ix_(ia, ib)] = vals[:, ia].T @ (w[:, None] * integ)

            r2 = cache.rule(e1)
            vals2, _ = bs.tabulate(r2)
            w1 = p.n * r2.weights * r2.rho ** (gamma - 1.0 - e1)
            blk = vals2[:, ia].T @ (w1[:, None] * vals2[:, ib])

            u1 = np.sum(r1.nodes * r1.nodes, axis=1)
            w2 = r1.weights * u1 * r1.rho ** (gamma - 2.0 - (e1 - 1.0))
            blk += 2.0 * (1.0 - gamma) * (
                vals[:, ia].T @ (w2[:, None] * vals[:, ib]))
            Q[np.ix_(ia, ib)] = blk
    return bs, P, Q


def check_rev1_sign(b: float = 4.0, gamma: float = 0.75, n_vectors: int = 100,
                    seed: int = 7) -> CheckResult:
    """int m.grad(u^2) rho^{gamma-1} <= 0 and equals the divergence identity."""
    p = ModelParams(n=2, b=b)
    cache = RuleCache(p, 96, 64)
    bs, P, Q = rev1_matrices(p, gamma, 8, 6, cache)
    sym = P + P.T
    rng = np.random.default_rng(seed)
    max_lhs = -np.inf
    max_mismatch = 0.0
    for _ in range(n_vectors):
        c = rng.standard_normal(bs.size)
        lhs = float(c @ sym @ c)
        rhs = -float(c @ Q @ c)
        max_lhs = max(max_lhs, lhs)
        max_mismatch = max(max_mismatch, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    ok = max_lhs <= 1e-10 and max_mismatch < 1e-9
    return CheckResult("boundary sign identity", ok,
                       {"max_lhs": max_lhs, "max_rel_mismatch": max_mismatch},
                       f"{n_vectors} random coefficient vectors")


def check_conservation(res: Resolution | None = None) -> CheckResult:
    p = ModelParams(n=2, b=4.0, kappa=kappa_shear(1.0), horizon=1.0)
    from .scenarios import f0_bump
    prob = FPFProblem(params=p, f0=f0_bump(p), resolution=res or Resolution())
    _, report = solve_fpf(prob)
    return CheckResult("mass conservation (shear run)",
                       report.mass_drift < 1e-8,
                       {"rel_drift": report.mass_drift}, "tolerance 1e-8")


def check_equilibrium_steady(res: Resolution | None = None) -> CheckResult:
    p = ModelParams(n=2, b=4.0, kappa=kappa_zero(), horizon=1.0)
    prob = FPFProblem(params=p, f0=f0_equilibrium(p), resolution=res or Resolution())
    _, report = solve_fpf(prob)
    drift = float(np.max(np.abs(report.norm_f - report.norm_f[0])) / report.norm_f[0])
    return CheckResult("equilibrium steadiness", drift < 1e-8,
                       {"rel_drift": drift}, "tolerance 1e-8")


def check_uniqueness(res: Resolution | None = None) -> CheckResult:
    """Zero data in the boundary-vanishing basis stays identically zero."""
    p = ModelParams(n=2, b=4.0, kappa=kappa_shear(1.0), horizon=1.0)
    res = res or Resolution()
    cache = RuleCache(p, res.n_radial, res.n_angular)
    bs = build_basis(p, p.beta, res.K_r, res.K_theta, cache)
    op = assemble(bs, cache)
    traj = crank_nicolson(op, np.zeros(bs.size), p.horizon, res.n_timesteps)
    norms = traj.l2_beta_norms(op.M)
    final = float(norms[-1])
    return CheckResult("uniqueness under the sharp boundary condition",
                       final < 1e-12, {"final_norm": final}, "tolerance 1e-12")


def check_nonuniqueness(res: Resolution | None = None) -> CheckResult:
    p = ModelParams(n=2, b=4.0, kappa=kappa_zero(), horizon=1.0)
    res = res or Resolution(32, 4, 96, 64, 200)
    pair = []
    for spec in ("t_r2", "2*t_r2"):
        prob = NonUniqueProblem(params=p, g=boundary_forcing(spec),
                                gamma=0.75, resolution=res)
        pair.append(solve_nonunique(prob))
    sep = interior_separation(pair[0][0], pair[1][0])
    traces = [rep.trace_limit for _, rep in pair]
    interiors = [float(rep.norm_f_interior[-1]) for _, rep in pair]
    ok = (sep > 1e3 * SOLVER_TOL
          and all(t > 0.1 * s for t, s in zip(traces, interiors)))
    return CheckResult("non-uniqueness under the relaxed boundary condition", ok,
                       {"separation": sep, "trace_limit_1": traces[0],
                        "trace_limit_2": traces[1]},
                       f"separation threshold {1e3 * SOLVER_TOL:g}")


def check_picard(res: Resolution | None = None) -> CheckResult:
    """Fixed-point solve agrees with the direct march; contraction < 0.9."""
    p = ModelParams(n=2, b=4.0, kappa=kappa_shear(1.0), horizon=1.0)
    res = res or Resolution(10, 6, 64, 64, 100)
    cache = RuleCache(p, res.n_radial, res.n_angular)
    bs = build_basis(p, p.beta, res.K_r, res.K_theta, cache)
    op = assemble(bs, cache)
    from .scenarios import _w0_from_f0, f0_bump
    d0 = project(bs, _w0_from_f0(p, f0_bump(p)), op.M, cache)
    direct = crank_nicolson(op, d0, p.horizon, res.n_timesteps)
    fixed, rep = picard_solve(op, d0, p.horizon, res.n_timesteps)
    diff = fixed.coeffs - direct.coeffs
    sup = float(np.sqrt(np.max(np.einsum("ki,ij,kj->k", diff, op.M, diff))))
    scale = float(np.sqrt(d0 @ op.M @ d0))
    factor = max(rep.contraction_factors) if rep.contraction_factors else 0.0
    ok = sup / scale < 1e-8 and factor < 0.9
    return CheckResult("fixed-point / direct agreement", ok,
                       {"sup_rel_diff": sup / scale, "contraction": factor,
                        "iterations": rep.iterations}, "tolerance 1e-8")


ALL_CHECKS = (
    check_quadrature,
    check_embedding,
    check_trace_decay,
    check_equivalence,
    check_garding,
    check_rev1_sign,
    check_conservation,
    check_equilibrium_steady,
    check_uniqueness,
    check_nonuniqueness,
    check_picard,
)


def run_all_checks() -> list[CheckResult]:
    return [fn() for fn in ALL_CHECKS]
