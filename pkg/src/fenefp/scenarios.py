"""End-to-end problem drivers.

solve_fpf runs the density evolution through the w = f/rho transformation;
solve_nonunique builds the relaxed-boundary construction that produces
distinct solutions from zero initial data; the remaining routines provide
the positivity certificate, the weak-residual harness, and the extension
parameter threshold sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from .basis import BasisSet, build_basis
from .evolve import SolutionTrajectory, crank_nicolson, project
from .geometry import ConditionBError, ModelParams
from .operators import AssembledOperator, assemble, garding_constants
from .quadrature import RuleCache, disk_rule, integrate_weighted
from .spaces import boundary_limit, radius_ladder, trace_profile

SOLVER_TOL = 1e-10


class AdmissibilityError(ValueError):
    pass


@dataclass
class Resolution:
    K_r: int = 16
    K_theta: int = 10
    n_radial: int = 64
    n_angular: int = 64
    n_timesteps: int = 200

    def refined(self, factor: int = 2) -> "Resolution":
        return Resolution(self.K_r * factor, self.K_theta * factor,
                          min(self.n_radial * factor, 256),
                          min(self.n_angular * factor, 256),
                          self.n_timesteps * factor)


@dataclass
class FPFProblem:
    params: ModelParams
    f0: Callable[[np.ndarray], np.ndarray]
    resolution: Resolution = field(default_factory=Resolution)


# --- initial data library ----------------------------------------------------

def f0_equilibrium(p: ModelParams) -> Callable:
    return geo.equilibrium(p)


def f0_perturbed_equilibrium(p: ModelParams, eps: float = 0.3) -> Callable:
    feq = geo.equilibrium(p)
    rb = p.radius

    def f0(nodes):
        nodes = np.asarray(nodes, dtype=float)
        return feq(nodes) * (1.0 + eps * nodes[:, 0] / rb)

    return f0


def f0_bump(p: ModelParams, center_frac: float = 0.3, width_frac: float = 0.35,
            amplitude: float = 1.0) -> Callable:
    """Nonnegative gaussian bump times rho^2, so w0 = f0/rho vanishes on the boundary."""
    m0 = np.array([center_frac * p.radius, 0.0])
    s2 = (width_frac * p.radius) ** 2

    def f0(nodes):
        nodes = np.asarray(nodes, dtype=float)
        d2 = np.sum((nodes - m0) ** 2, axis=1)
        rho = p.b - np.sum(nodes * nodes, axis=1)
        return amplitude * np.exp(-d2 / s2) * rho ** 2

    return f0


# --- helpers -----------------------------------------------------------------

def _w0_from_f0(p: ModelParams, f0) -> Callable:
    def w0(nodes):
        nodes = np.asarray(nodes, dtype=float)
        rho = p.b - np.sum(nodes * nodes, axis=1)
        return np.asarray(f0(nodes), dtype=float) / rho

    return w0


def _check_admissible(p: ModelParams, f0, cache: RuleCache) -> float:
    """||f0||^2_{L^2_{-b/2}} = int w0^2 rho^beta; reject if it does not converge."""
    w0 = _w0_from_f0(p, f0)
    vals = []
    for nr in (cache.n_radial, 2 * cache.n_radial):
        from .quadrature import ball_rule
        q = ball_rule(p, p.beta, nr, cache.n_angular)
        v = np.asarray(w0(q.nodes), dtype=float)
        vals.append(integrate_weighted(v * v, q))
    if not np.isfinite(vals[-1]) or vals[-1] > 2.0 * vals[0] + 1e-12:
        raise AdmissibilityError(
            "initial density has a non-convergent weighted norm "
            f"(||f0||^2 at two resolutions: {vals[0]:.6e}, {vals[1]:.6e})")
    return float(np.sqrt(vals[-1]))


def mass_vector(bs: BasisSet, cache: RuleCache) -> np.ndarray:
    """v_i = int phi_i rho dm, so mass(t) = v . d(t)."""
    out = np.zeros(bs.size)
    for (s, _), idx in bs.power_groups.items():
        q = cache.rule(1.0 + s)
        vals, _ = bs.tabulate(q)
        out[idx] = vals[:, idx].T @ (q.weights * q.rho ** (-s))
    return out


def _f_norms_independent(bs: BasisSet, coeffs: np.ndarray,
                         cache: RuleCache) -> np.ndarray:
    """||f||_{L^2_{-b/2}} per step via the f-side route.

    The rule is built at the exponent carried by the lowest prefactor
    family; exact for a single-family basis, spectrally accurate otherwise.
    """
    p = bs.params
    s_min = float(bs.powers.min())
    mu = -p.b / 2.0 + 2.0 * (1.0 + s_min)
    q = cache.rule(mu)
    vals, _ = bs.tabulate(q)
    P = vals / q.rho[:, None] ** s_min
    out = P @ coeffs.T
    return np.sqrt(np.maximum(q.weights @ (out * out), 0.0))


@dataclass
class FPFReport:
    times: np.ndarray
    mass: np.ndarray
    min_f: np.ndarray
    norm_f: np.ndarray        # ||f||_{L^2_{-b/2}}, independent quadrature route
    norm_w_l2: np.ndarray     # ||w||_{L^2_beta}
    norm_w_h1: np.ndarray     # ||w||_{H^1_beta}
    trace_radii: np.ndarray   # equilibrium-style profile of f d^{-1} at final time
    trace_values: np.ndarray
    garding: tuple            # (C1, C2) certified at t = 0
    extras: dict = field(default_factory=dict)

    @property
    def mass_drift(self) -> float:
        scale = abs(self.mass[0]) if self.mass[0] != 0 else 1.0
        return float(np.max(np.abs(self.mass - self.mass[0])) / scale)


def solve_fpf(prob: FPFProblem) -> tuple[SolutionTrajectory, FPFReport]:
    p = prob.params
    res = prob.resolution
    cache = RuleCache(p, res.n_radial, res.n_angular)
    _check_admissible(p, prob.f0, cache)
    bs = build_basis(p, p.beta, res.K_r, res.K_theta, cache)
    op = assemble(bs, cache)
    w0 = _w0_from_f0(p, prob.f0)
    d0 = project(bs, w0, op.M, cache)
    traj = crank_nicolson(op, d0, p.horizon, res.n_timesteps)
    report = _diagnose(traj, op, cache)
    return traj, report


def _diagnose(traj: SolutionTrajectory, op: AssembledOperator,
              cache: RuleCache) -> FPFReport:
    bs = traj.basis
    p = bs.params
    v = mass_vector(bs, cache)
    mass = traj.coeffs @ v
    sample = cache.rule(1.0)
    node_vals = bs.tabulate(sample)[0] @ traj.coeffs.T   # w at sample nodes
    f_nodes = sample.rho[:, None] * node_vals
    min_f = f_nodes.min(axis=0)
    norm_w_l2 = traj.l2_beta_norms(op.M)
    norm_w_h1 = np.sqrt(np.maximum(
        np.einsum("ki,ij,kj->k", traj.coeffs, op.gram_H1, traj.coeffs), 0.0))
    norm_f = _f_norms_independent(bs, traj.coeffs, cache)

    dT = traj.coeffs[-1]

    def f_over_d(nodes):
        nodes = np.asarray(nodes, dtype=float)
        rho = p.b - np.sum(nodes * nodes, axis=1)
        dist = p.radius - np.sqrt(np.sum(nodes * nodes, axis=1))
        return rho * (bs.evaluate(nodes) @ dT) / dist

    radii, trace = trace_profile(f_over_d, p.b)
    c1, c2 = garding_constants(op, 0.0)
    return FPFReport(times=traj.times, mass=mass, min_f=min_f, norm_f=norm_f,
                     norm_w_l2=norm_w_l2, norm_w_h1=norm_w_h1,
                     trace_radii=radii, trace_values=trace, garding=(c1, c2))


def check_positivity(traj: SolutionTrajectory, tol_pos: float = 1e-6,
                     n_radial: int = 64, n_angular: int = 64) -> dict:
    bs = traj.basis
    from .quadrature import ball_rule
    sample = ball_rule(bs.params, 1.0, n_radial, n_angular)
    node_vals = sample.rho[:, None] * (bs.tabulate(sample)[0] @ traj.coeffs.T)
    min_f = float(node_vals.min())
    k_min = int(np.unravel_index(np.argmin(node_vals), node_vals.shape)[1])
    return {"min_f": min_f, "t_argmin": float(traj.times[k_min]),
            "passed": bool(min_f >= -tol_pos), "tol": tol_pos}


# --- positivity certificate --------------------------------------------------

@dataclass
class MaximumPrincipleCert:
    alpha: float
    K: float
    max_c: float

    @property
    def certified(self) -> bool:
        return self.max_c < 0.0


def _max_c(p: ModelParams, alpha: float, K: float, n_u: int = 4097) -> float:
    """sup over B (and sampled t) of the transformed zeroth-order coefficient."""
    u = np.linspace(0.0, p.b, n_u)
    rho = p.b - u
    base = -K * rho ** 2 + alpha * (p.n * p.b + (2 * alpha + 2 - p.n - p.b) * u)
    lam_max = 0.0
    for t in np.linspace(0.0, p.horizon, 9):
        k = p.kappa_at(t)
        lam = np.linalg.eigvalsh(0.5 * (k + k.T)).max()
        lam_max = max(lam_max, lam)
    vals = base + (p.b - 2 * alpha) * rho * u * max(lam_max, 0.0)
    sup = float(vals.max())
    # vertex of the kappa=0 quadratic -K u^2 + (2Kb + alpha(2a+2-n-b)) u + const
    a2 = -K
    a1 = 2 * K * p.b + alpha * (2 * alpha + 2 - p.n - p.b)
    if a2 < 0:
        u_star = -a1 / (2 * a2)
        if 0.0 <= u_star <= p.b:
            quad = a2 * u_star ** 2 + a1 * u_star - K * p.b ** 2 + alpha * p.n * p.b
            kap_term = (p.b - 2 * alpha) * (p.b - u_star) * u_star * max(lam_max, 0.0)
            sup = max(sup, float(quad + kap_term))
    return sup


def positivity_certificate(p: ModelParams, alpha: float | None = None,
                           K: float | None = None) -> MaximumPrincipleCert:
    """Find (alpha < b/2 - 1, K > 0) with sup c < 0; grid plus vertex bound."""
    if alpha is not None and alpha >= p.b / 2.0 - 1.0:
        raise ValueError(f"alpha must satisfy alpha < b/2 - 1 = {p.b / 2 - 1}")
    alphas = [alpha] if alpha is not None else list(
        np.linspace(0.05, p.b / 2.0 - 1.0, 24, endpoint=False)[1:])
    Ks = [K] if K is not None else [0.25 * 2.0 ** j for j in range(14)]
    best = None
    for a in alphas:
        for k in Ks:
            m = _max_c(p, a, k)
            if m < 0.0:
                return MaximumPrincipleCert(alpha=float(a), K=float(k), max_c=m)
            if best is None or m < best.max_c:
                best = MaximumPrincipleCert(alpha=float(a), K=float(k), max_c=m)
    raise RuntimeError(
        f"no maximum-principle certificate found (closest: alpha={best.alpha}, "
        f"K={best.K}, sup c = {best.max_c:.3e})")


# --- non-uniqueness construction ---------------------------------------------

@dataclass(frozen=True)
class BoundaryForcing:
    """g(t, m), W^{2,inf}, zero at t = 0, nonzero on the boundary for t > 0."""

    name: str
    value: Callable
    grad: Callable
    dt: Callable
    scale: float = 1.0

    def scaled(self, s: float) -> "BoundaryForcing":
        return BoundaryForcing(
            name=f"{s:g}*{self.name}" if s != 1.0 else self.name,
            value=lambda t, x: s * self.value(t, x),
            grad=lambda t, x: s * self.grad(t, x),
            dt=lambda t, x: s * self.dt(t, x),
            scale=self.scale * s)


def _r2(nodes):
    nodes = np.asarray(nodes, dtype=float)
    return np.sum(nodes * nodes, axis=1)


G_LIBRARY: dict[str, BoundaryForcing] = {
    "t_r2": BoundaryForcing(
        "t_r2",
        value=lambda t, x: t * _r2(x),
        grad=lambda t, x: 2.0 * t * np.asarray(x, dtype=float),
        dt=lambda t, x: _r2(x)),
    "t2_r2": BoundaryForcing(
        "t2_r2",
        value=lambda t, x: t * t * _r2(x),
        grad=lambda t, x: 2.0 * t * t * np.asarray(x, dtype=float),
        dt=lambda t, x: 2.0 * t * _r2(x)),
    "t_r4": BoundaryForcing(
        "t_r4",
        value=lambda t, x: t * _r2(x) ** 2,
        grad=lambda t, x: 4.0 * t * _r2(x)[:, None] * np.asarray(x, dtype=float),
        dt=lambda t, x: _r2(x) ** 2),
    "t_harmonic": BoundaryForcing(
        "t_harmonic",
        value=lambda t, x: t * (np.asarray(x, float)[:, 0] ** 2 - np.asarray(x, float)[:, 1] ** 2),
        grad=lambda t, x: t * np.stack(
            [2.0 * np.asarray(x, float)[:, 0], -2.0 * np.asarray(x, float)[:, 1]], axis=1),
        dt=lambda t, x: np.asarray(x, float)[:, 0] ** 2 - np.asarray(x, float)[:, 1] ** 2),
}


def boundary_forcing(spec: str) -> BoundaryForcing:
    """Parse 'name' or 'scale*name' against the shipped g-library."""
    spec = spec.strip()
    if "*" in spec:
        s, name = spec.split("*", 1)
        return G_LIBRARY[name.strip()].scaled(float(s))
    return G_LIBRARY[spec]


def default_gamma(p: ModelParams) -> float:
    lo = max(p.beta, -1.0)
    return 0.5 * (lo + 1.0)


def nonunique_resolution() -> Resolution:
    """Relaxed-problem default: the forcing's 1/rho term demands far more
    radial than angular resolution."""
    return Resolution(K_r=48, K_theta=6, n_radial=96, n_angular=64,
                      n_timesteps=200)


@dataclass
class NonUniqueProblem:
    params: ModelParams
    g: BoundaryForcing
    gamma: float | None = None
    resolution: Resolution = field(default_factory=nonunique_resolution)

    def __post_init__(self):
        if self.gamma is None:
            self.gamma = default_gamma(self.params)
        lo = max(self.params.beta, -1.0)
        if not (lo < self.gamma < 1.0):
            raise ValueError(
                f"gamma = {self.gamma} outside the window ({lo}, 1)")


@dataclass
class NonUniqueReport:
    times: np.ndarray
    norm_f_interior: np.ndarray   # ||f(t)||_{L^2(B_{0.9 sqrt b})}
    trace_radii: np.ndarray
    trace_values: np.ndarray      # ||f d^{-1}|| profile at final time
    trace_limit: float
    trace_converged: bool
    extras: dict = field(default_factory=dict)


class NonUniqueSolution(SolutionTrajectory):
    """Trajectory of w plus the boundary forcing; f = (w + g) rho."""

    def __init__(self, base: SolutionTrajectory, g: BoundaryForcing):
        super().__init__(basis=base.basis, times=base.times, coeffs=base.coeffs)
        self.g = g

    def f_at(self, k, nodes):
        nodes = np.asarray(nodes, dtype=float)
        rho = self.basis.params.b - np.sum(nodes * nodes, axis=1)
        return rho * (self.w_at(k, nodes) + self.g.value(self.times[k], nodes))


def _gamma_forcing_vector(bs: BasisSet, cache: RuleCache,
                          g: BoundaryForcing, beta: float):
    """Time-dependent load vector of the relaxed problem.

    Integration by parts moved 1/2 div(grad g rho^gamma) onto the test
    function, so only g, grad g and dt g are needed:
      F_j(t) = int [ -dt g rho^g phi - 1/2 grad g . grad phi rho^g
                     - (beta-g) m.grad g phi rho^{g-1}
                     - kappa m . grad g phi rho^g + c g phi rho^{g-1} ] dm.

    Each prefactor family s and each rho power in the integrand gets its
    own Gauss-Jacobi rule, so all integrals are exact for polynomial g.
    """
    p = bs.params
    gamma = bs.exponent
    blocks = []
    for (s, _), idx in bs.power_groups.items():
        q0 = cache.rule(gamma + s)            # value terms against rho^gamma
        qg = cache.rule(gamma + s - 1.0)      # gradient terms against rho^gamma
        qm = cache.rule(gamma + s - 1.0)      # value terms against rho^{gamma-1}
        v0 = bs.tabulate(q0)[0][:, idx] * (q0.rho ** (-s))[:, None]
        gg = bs.tabulate(qg)[1][:, idx, :] * (qg.rho ** (1.0 - s))[:, None, None]
        vm = bs.tabulate(qm)[0][:, idx] * (qm.rho ** (-s))[:, None]
        blocks.append((idx, q0, qg, qm, v0, gg, vm))

    def forcing(t: float) -> np.ndarray:
        kap = p.kappa_at(t)
        vec = np.zeros(bs.size)
        for idx, q0, qg, qm, v0, gg, vm in blocks:
            gdt = np.asarray(g.dt(t, q0.nodes), dtype=float)
            ggrad0 = np.asarray(g.grad(t, q0.nodes), dtype=float)
            kmg = np.einsum("ij,nj,ni->n", kap, q0.nodes, ggrad0)
            vec[idx] = v0.T @ (q0.weights * (-gdt - kmg))

            ggradg = np.asarray(g.grad(t, qg.nodes), dtype=float)
            vec[idx] -= 0.5 * np.einsum("nlc,nc->l", gg,
                                        qg.weights[:, None] * ggradg)

            gval = np.asarray(g.value(t, qm.nodes), dtype=float)
            ggradm = np.asarray(g.grad(t, qm.nodes), dtype=float)
            c = (2.0 * np.einsum("ni,ij,nj->n", qm.nodes, kap, qm.nodes)
                 + p.n * (p.b / 2.0 - 1.0))
            mdg = np.einsum("ni,ni->n", qm.nodes, ggradm)
            vec[idx] += vm.T @ (qm.weights * (c * gval - (beta - gamma) * mdg))
        return vec

    return forcing


def solve_nonunique(prob: NonUniqueProblem) -> tuple[NonUniqueSolution, NonUniqueReport]:
    p = prob.params
    res = prob.resolution
    # g must vanish at t = 0
    probe = np.array([[0.1 * p.radius, 0.2 * p.radius], [0.5 * p.radius, 0.0]])
    if np.max(np.abs(prob.g.value(0.0, probe))) > 1e-14:
        raise ValueError("boundary forcing g must vanish at t = 0")
    cache = RuleCache(p, res.n_radial, res.n_angular)
    bs = build_basis(p, prob.gamma, res.K_r, res.K_theta, cache)
    op = assemble(bs, cache, beta=p.beta, gamma_mode=True)
    forcing = _gamma_forcing_vector(bs, cache, prob.g, p.beta)
    base = crank_nicolson(op, np.zeros(bs.size), p.horizon, res.n_timesteps,
                          forcing=forcing)
    traj = NonUniqueSolution(base, prob.g)

    r0 = 0.9 * p.radius
    dr = disk_rule(p, r0, res.n_radial, res.n_angular)
    interior = np.empty(len(traj.times))
    Vd = bs.evaluate(dr.nodes)
    for k in range(len(traj.times)):
        f = dr.rho * (Vd @ traj.coeffs[k] + prob.g.value(traj.times[k], dr.nodes))
        interior[k] = np.sqrt(max(integrate_weighted(f * f, dr), 0.0))

    kT = len(traj.times) - 1

    def f_over_d(nodes):
        nodes = np.asarray(nodes, dtype=float)
        rho = p.b - np.sum(nodes * nodes, axis=1)
        dist = p.radius - np.sqrt(np.sum(nodes * nodes, axis=1))
        return (rho / dist) * (bs.evaluate(nodes) @ traj.coeffs[kT]
                               + prob.g.value(traj.times[kT], nodes))

    radii, trace = trace_profile(f_over_d, p.b)
    lim = boundary_limit(radii, trace)
    report = NonUniqueReport(times=traj.times, norm_f_interior=interior,
                             trace_radii=radii, trace_values=trace,
                             trace_limit=lim.value, trace_converged=lim.converged)
    return traj, report


def interior_separation(t1: NonUniqueSolution | SolutionTrajectory,
                        t2: NonUniqueSolution | SolutionTrajectory,
                        radius_frac: float = 0.9,
                        n_radial: int = 64, n_angular: int = 64) -> float:
    """||f1(T) - f2(T)||_{L^2(B_{radius_frac sqrt b})}."""
    p = t1.basis.params
    dr = disk_rule(p, radius_frac * p.radius, n_radial, n_angular)
    k1, k2 = len(t1.times) - 1, len(t2.times) - 1
    diff = t1.f_at(k1, dr.nodes) - t2.f_at(k2, dr.nodes)
    return float(np.sqrt(max(integrate_weighted(diff * diff, dr), 0.0)))


# --- weak residual harness ---------------------------------------------------

def _bump_test_set(p: ModelParams, support_frac: float = 0.9):
    """Compactly supported tests: mollifier bump times low polynomials."""
    r0 = support_frac * p.radius
    r02 = r0 * r0

    def bump(nodes):
        u = _r2(nodes)
        out = np.zeros(len(u))
        inside = u < r02 * (1 - 1e-12)
        out[inside] = np.exp(1.0 - r02 / (r02 - u[inside]))
        return out

    def bump_grad(nodes):
        nodes = np.asarray(nodes, dtype=float)
        u = _r2(nodes)
        out = np.zeros_like(nodes)
        inside = u < r02 * (1 - 1e-12)
        fac = np.exp(1.0 - r02 / (r02 - u[inside])) * (-r02 / (r02 - u[inside]) ** 2)
        out[inside] = (2.0 * fac)[:, None] * nodes[inside]
        return out

    polys = [
        (lambda x: np.ones(len(x)), lambda x: np.zeros_like(np.asarray(x, float))),
        (lambda x: np.asarray(x, float)[:, 0],
         lambda x: np.stack([np.ones(len(x)), np.zeros(len(x))], axis=1)),
        (lambda x: np.asarray(x, float)[:, 1],
         lambda x: np.stack([np.zeros(len(x)), np.ones(len(x))], axis=1)),
        (lambda x: np.asarray(x, float)[:, 0] * np.asarray(x, float)[:, 1],
         lambda x: np.stack([np.asarray(x, float)[:, 1], np.asarray(x, float)[:, 0]], axis=1)),
        (lambda x: np.asarray(x, float)[:, 0] ** 2 - np.asarray(x, float)[:, 1] ** 2,
         lambda x: np.stack([2 * np.asarray(x, float)[:, 0], -2 * np.asarray(x, float)[:, 1]], axis=1)),
    ]
    tests = []
    for pv, pg in polys:
        tests.append((
            lambda x, pv=pv: bump(x) * pv(x),
            lambda x, pv=pv, pg=pg: bump_grad(x) * pv(x)[:, None] + bump(x)[:, None] * pg(x),
        ))
    return r0, tests


def weak_residual(traj: SolutionTrajectory, g: BoundaryForcing | None = None,
                  support_frac: float = 0.9,
                  n_radial: int = 96, n_angular: int = 96) -> float:
    """Max discrete residual of the distributional form over bump tests.

    Evaluated at step midpoints with the time derivative consistent with
    the Crank-Nicolson update; test functions are normalized in H^1.
    """
    p = traj.basis.params
    bs = traj.basis
    r0, tests = _bump_test_set(p, support_frac)
    dr = disk_rule(p, r0 * (1 + 1e-9), n_radial, n_angular)
    nodes = dr.nodes
    rho = dr.rho
    V = bs.evaluate(nodes)
    G = bs.gradients(nodes)
    grad_rho = -2.0 * nodes

    phi_vals, phi_grads, phi_norms = [], [], []
    for pv, pg in tests:
        val = pv(nodes)
        grd = pg(nodes)
        nrm = np.sqrt(integrate_weighted(val * val + np.sum(grd * grd, axis=1), dr))
        phi_vals.append(val / nrm)
        phi_grads.append(grd / nrm)

    times = traj.times
    worst = 0.0
    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        tm = 0.5 * (times[k] + times[k + 1])
        dmid = 0.5 * (traj.coeffs[k] + traj.coeffs[k + 1])
        ddot = (traj.coeffs[k + 1] - traj.coeffs[k]) / dt
        w = V @ dmid
        gw = np.einsum("nlc,l->nc", G, dmid)
        f = rho * w
        grad_f = rho[:, None] * gw + w[:, None] * grad_rho
        dt_f = rho * (V @ ddot)
        if g is not None:
            gv = np.asarray(g.value(tm, nodes), dtype=float)
            gg = np.asarray(g.grad(tm, nodes), dtype=float)
            f = f + rho * gv
            grad_f = grad_f + rho[:, None] * gg + gv[:, None] * grad_rho
            dt_f = dt_f + rho * np.asarray(g.dt(tm, nodes), dtype=float)
        kap = p.kappa_at(tm)
        km = nodes @ kap.T
        for val, grd in zip(phi_vals, phi_grads):
            integrand = (dt_f * val
                         - f * np.sum(km * grd, axis=1)
                         + (p.b / (2.0 * rho)) * f * np.sum(nodes * grd, axis=1)
                         + 0.5 * np.sum(grad_f * grd, axis=1))
            worst = max(worst, abs(integrate_weighted(integrand, dr)))
    return worst


# --- threshold sweep ---------------------------------------------------------

def threshold_sweep(b_list, n: int = 2) -> list[dict]:
    """Equilibrium boundary-trace decay per b; b <= 2 rows are rejected."""
    rows = []
    for b in b_list:
        if b <= 2.0:
            rows.append({"b": float(b), "status": "rejected: condition b>2",
                         "exponent_fit": float("nan"),
                         "exponent_expected": float("nan"),
                         "trace_first": float("nan"),
                         "trace_last": float("nan")})
            continue
        p = ModelParams(n=n, b=float(b))
        feq = geo.equilibrium(p)

        def feq_over_d(nodes, p=p, feq=feq):
            nodes = np.asarray(nodes, dtype=float)
            dist = p.radius - np.sqrt(np.sum(nodes * nodes, axis=1))
            return feq(nodes) / dist

        radii = radius_ladder(p.b, 3, 14)
        _, trace = trace_profile(feq_over_d, p.b, 3, 14)
        d = p.radius - radii
        mask = trace > 1e-250
        slope = np.polyfit(np.log(d[mask]), np.log(trace[mask]), 1)[0]
        rows.append({"b": float(b), "status": "ok",
                     "exponent_fit": float(slope),
                     "exponent_expected": float(b / 2.0 - 1.0),
                     "trace_first": float(trace[0]),
                     "trace_last": float(trace[-1])})
    return rows
