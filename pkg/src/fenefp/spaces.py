"""Weighted Sobolev norms, trace norms, boundary limits, and the
embedding / norm-equivalence checks on the ball.

Fields are callables taking an (N, n) array of points; gradients return
(N, n) arrays.  Integrals against rho^mu with mu <= -1 are rewritten
using the known vanishing order of the field so the quadrature rule
exponent stays admissible (and exact for basis-type fields).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ModelParams
from .quadrature import RuleCache, integrate_weighted, trace_rule


@dataclass(frozen=True)
class LimitResult:
    """Outcome of a boundary-limit extrapolation along the radius ladder."""

    value: float
    converged: bool
    radii: np.ndarray
    history: np.ndarray


def radius_ladder(b: float, k_min: int = 3, k_max: int = 18) -> np.ndarray:
    """Geometric ladder r_k = sqrt(b) (1 - 2^{-k}) approaching the boundary."""
    k = np.arange(k_min, k_max + 1)
    return np.sqrt(b) * (1.0 - 0.5 ** k)


def boundary_limit(radii, values, rel_tol: float = 1e-6) -> LimitResult:
    """Extrapolated boundary limit from the geometric radius ladder.

    The ladder halves the boundary distance each rung, so a first-order
    tail is removed by Richardson extrapolation e_i = 2 v_{i+1} - v_i;
    the limit is declared when three successive extrapolants agree to
    rel_tol (against the value scale).
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    extr = 2.0 * values[1:] - values[:-1]
    scale = max(float(np.max(np.abs(values))), 1.0)
    for i in range(2, len(extr)):
        d1 = abs(extr[i] - extr[i - 1])
        d2 = abs(extr[i - 1] - extr[i - 2])
        if d1 < rel_tol * scale and d2 < rel_tol * scale:
            return LimitResult(float(extr[i]), True, radii, values)
    return LimitResult(float(extr[-1]), False, radii, values)


def richardson_limit(fn_of_d, ds=None) -> float:
    """Extrapolate fn(d) to d -> 0 assuming a first-order error term."""
    if ds is None:
        ds = 10.0 ** -np.arange(2, 7, dtype=float)
    ds = np.asarray(ds, dtype=float)
    vals = np.array([fn_of_d(d) for d in ds])
    # pairwise first-order Richardson, keep the finest pair
    d1, d2 = ds[-2], ds[-1]
    v1, v2 = vals[-2], vals[-1]
    return float((d1 * v2 - d2 * v1) / (d1 - d2))


# --- weighted integrals and norms ------------------------------------------

def weighted_sq_integral(F, mu: float, cache: RuleCache, vanish: float = 0.0) -> float:
    """int_B F^2 rho^mu dm, with F vanishing like rho^vanish at the boundary.

    The rule is built at exponent mu + 2*vanish (> -1 required) and the
    integrand divided by rho^{2*vanish}, which is exact for polynomial
    F / rho^vanish.
    """
    mu_eff = mu + 2.0 * vanish
    q = cache.rule(mu_eff)
    vals = np.asarray(F(q.nodes), dtype=float)
    if vanish != 0.0:
        vals = vals / q.rho ** vanish
    return integrate_weighted(vals * vals, q)


def norm_L2_mu(F, mu: float, cache: RuleCache, vanish: float = 0.0) -> float:
    return float(np.sqrt(max(weighted_sq_integral(F, mu, cache, vanish), 0.0)))


def norm_H1_mu(F, grad_F, mu: float, cache: RuleCache,
               vanish: float = 0.0, grad_vanish: float | None = None) -> float:
    """(int (|grad F|^2 + F^2) rho^mu dm)^{1/2}."""
    if grad_vanish is None:
        grad_vanish = max(vanish - 1.0, 0.0)
    sq = weighted_sq_integral(F, mu, cache, vanish)
    mu_eff = mu + 2.0 * grad_vanish
    q = cache.rule(mu_eff)
    g = np.asarray(grad_F(q.nodes), dtype=float)
    if grad_vanish != 0.0:
        g = g / q.rho[:, None] ** grad_vanish
    sq += integrate_weighted(np.sum(g * g, axis=1), q)
    return float(np.sqrt(max(sq, 0.0)))


def embedding_defect(F, grad_F, mu: float, cache: RuleCache,
                     vanish: float = 0.0) -> tuple[float, float]:
    """Pair (||F||_{L^2_{mu-2}}, ||F||_{H^1_mu}) for the embedding check.

    For mu < 1 the field must vanish at the boundary (pass its vanishing
    order); for mu > 1 no vanishing is needed.
    """
    lhs = norm_L2_mu(F, mu - 2.0, cache, vanish)
    rhs = norm_H1_mu(F, grad_F, mu, cache, vanish)
    return lhs, rhs


def circle_trace_norm(F, r: float, n_angular: int = 256) -> float:
    """(int_{partial B_r} F^2 dS)^{1/2} on the circle of radius r (n = 2)."""
    tr = trace_rule(r, n_angular)
    vals = np.asarray(F(tr.nodes), dtype=float)
    return float(np.sqrt(np.dot(tr.weights, vals * vals)))


def trace_profile(F, b: float, k_min: int = 3, k_max: int = 18,
                  n_angular: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Circle-trace norms of F along the radius ladder."""
    radii = radius_ladder(b, k_min, k_max)
    vals = np.array([circle_trace_norm(F, r, n_angular) for r in radii])
    return radii, vals


def t0_trace_norm(F, gamma: float, b: float,
                  k_min: int = 3, k_max: int = 18,
                  n_angular: int = 256) -> LimitResult:
    """Boundary limit of the circle-trace norm of F rho^{(gamma-1)/2}."""
    if gamma >= 1.0:
        raise ValueError("T0 trace requires gamma < 1")

    def weighted(nodes):
        rho = b - np.sum(nodes * nodes, axis=1)
        return np.asarray(F(nodes), dtype=float) * rho ** ((gamma - 1.0) / 2.0)

    radii, vals = trace_profile(weighted, b, k_min, k_max, n_angular)
    return boundary_limit(radii, vals)


def equivalence_ratio(F, grad_F, p: ModelParams, cache: RuleCache,
                      vanish: float = 1.0) -> tuple[float, float]:
    """Norms (||F||_{H^1_{-b/2}}, ||F/rho^{b/2}||_{H^1_{b/2}}).

    F is an f-space field vanishing like rho^vanish; over a family of such
    fields both ratios a/c and c/a stay bounded when b > 2.
    """
    b = p.b
    a = norm_H1_mu(F, grad_F, -b / 2.0, cache, vanish=vanish,
                   grad_vanish=max(vanish - 1.0, 0.0))

    # psi = F rho^{-b/2}; grad psi = rho^{-b/2} (grad F + b m F / rho)
    sq = weighted_sq_integral(F, -b / 2.0, cache, vanish=vanish)  # = int psi^2 rho^{b/2}
    mu_eff = -b / 2.0 + 2.0 * max(vanish - 1.0, 0.0)
    q = cache.rule(mu_eff)
    g = np.asarray(grad_F(q.nodes), dtype=float)
    vals = np.asarray(F(q.nodes), dtype=float)
    combo = g + b * q.nodes * (vals / q.rho)[:, None]
    gv = max(vanish - 1.0, 0.0)
    if gv != 0.0:
        combo = combo / q.rho[:, None] ** gv
    sq += integrate_weighted(np.sum(combo * combo, axis=1), q)
    c = float(np.sqrt(max(sq, 0.0)))
    return a, c
