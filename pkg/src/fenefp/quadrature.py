"""Quadrature on the ball B(0, sqrt(b)) against singular weights rho^mu.

The radial direction is handled by Gauss-Jacobi rules after the
substitution u = r^2, which turns the weight (b - r^2)^mu r^{n-1} dr into
a Jacobi weight: integration of rho^mu times a polynomial in m is then
exact up to the design order.  Rules store the weight for the measure
rho^mu dm, plus rho at the nodes so integer extra powers of rho can be
folded in without losing exactness.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .geometry import ModelParams

DEFAULT_RADIAL = 64
DEFAULT_ANGULAR = 64


class IntegrationError(RuntimeError):
    """Non-finite values met during quadrature."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights on the ball for the measure rho^mu dm."""

    b: float
    n: int
    mu: float
    nodes: np.ndarray    # (N, n) cartesian coordinates
    weights: np.ndarray  # (N,) weights for rho^mu dm
    rho: np.ndarray      # (N,) rho at the nodes
    order: int           # polynomial exactness degree in |m|^2

    @property
    def x(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.nodes[:, 1]


def ball_rule(p: ModelParams, mu: float,
              n_radial: int = DEFAULT_RADIAL,
              n_angular: int = DEFAULT_ANGULAR) -> QuadratureRule:
    """Tensor Gauss-Jacobi x trigonometric rule for int_B F rho^mu dm."""
    if mu <= -1.0:
        raise IntegrationError(f"rho^mu is not integrable for mu = {mu} <= -1")
    b = p.b
    if p.n == 2:
        # u = r^2 in [0, b]; int_B F rho^mu dm
        #   = 1/2 int_0^b (b-u)^mu [int_0^{2pi} F dtheta] du
        x, wu = roots_jacobi(n_radial, mu, 0.0)
        u = b * (x + 1.0) / 2.0
        wu = wu * 0.5 * (b / 2.0) ** (mu + 1.0)
        r = np.sqrt(u)
        theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
        wt = np.full(n_angular, 2.0 * np.pi / n_angular)
        R, TH = np.meshgrid(r, theta, indexing="ij")
        W = np.outer(wu, wt)
        nodes = np.stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()], axis=1)
        weights = W.ravel()
    else:
        # n = 3: u = r^2 gives weight (b-u)^mu u^{1/2}; angular part is a
        # product Gauss-Legendre (cos phi) x equispaced (azimuth) sphere rule.
        x, wu = roots_jacobi(n_radial, mu, 0.5)
        u = b * (x + 1.0) / 2.0
        wu = wu * 0.5 * (b / 2.0) ** (mu + 1.5)
        r = np.sqrt(u)
        nc = max(n_angular // 2, 4)
        c, wc = roots_legendre(nc)
        phi = 2.0 * np.pi * np.arange(n_angular) / n_angular
        wp = np.full(n_angular, 2.0 * np.pi / n_angular)
        s = np.sqrt(1.0 - c ** 2)
        R, C, PH = np.meshgrid(r, c, phi, indexing="ij")
        S = np.sqrt(1.0 - C ** 2)
        W = wu[:, None, None] * wc[None, :, None] * wp[None, None, :]
        nodes = np.stack([
            (R * S * np.cos(PH)).ravel(),
            (R * S * np.sin(PH)).ravel(),
            (R * C).ravel(),
        ], axis=1)
        weights = W.ravel()
    rho_nodes = b - np.sum(nodes * nodes, axis=1)
    return QuadratureRule(b=b, n=p.n, mu=mu, nodes=nodes, weights=weights,
                          rho=rho_nodes, order=2 * n_radial - 1)


def disk_rule(p: ModelParams, radius: float,
              n_radial: int = DEFAULT_RADIAL,
              n_angular: int = DEFAULT_ANGULAR) -> QuadratureRule:
    """Plain Lebesgue rule on the concentric disk B(0, radius), n = 2 only."""
    if p.n != 2:
        raise IntegrationError("disk_rule is n=2 only")
    x, wu = roots_legendre(n_radial)
    u = radius ** 2 * (x + 1.0) / 2.0
    wu = wu * 0.5 * radius ** 2 / 2.0
    r = np.sqrt(u)
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    wt = np.full(n_angular, 2.0 * np.pi / n_angular)
    R, TH = np.meshgrid(r, theta, indexing="ij")
    W = np.outer(wu, wt)
    nodes = np.stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()], axis=1)
    rho_nodes = p.b - np.sum(nodes * nodes, axis=1)
    return QuadratureRule(b=p.b, n=2, mu=0.0, nodes=nodes, weights=W.ravel(),
                          rho=rho_nodes, order=2 * n_radial - 1)


@dataclass(frozen=True)
class TraceRule:
    """Circle rule for int_{partial B_r} . dS (n = 2)."""

    radius: float
    nodes: np.ndarray
    weights: np.ndarray


def trace_rule(r: float, n_angular: int = DEFAULT_ANGULAR) -> TraceRule:
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    nodes = r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    weights = np.full(n_angular, 2.0 * np.pi * r / n_angular)
    return TraceRule(radius=r, nodes=nodes, weights=weights)


def integrate_weighted(values, q: QuadratureRule, extra_rho_power: float = 0.0) -> float:
    """sum_i w_i rho_i^extra F_i, i.e. int F rho^{mu+extra} dm.

    ``extra_rho_power`` should keep mu+extra > -1; integer extras preserve
    polynomial exactness.
    """
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise IntegrationError("non-finite integrand values")
    if extra_rho_power == 0.0:
        return float(np.dot(q.weights, values))
    return float(np.dot(q.weights * q.rho ** extra_rho_power, values))


def integrate_field(F, q: QuadratureRule, extra_rho_power: float = 0.0) -> float:
    """Integrate a callable field F(nodes) against rho^{mu+extra} dm."""
    return integrate_weighted(np.asarray(F(q.nodes), dtype=float), q, extra_rho_power)


class RuleCache:
    """Per-exponent ball rules sharing one resolution setting."""

    def __init__(self, p: ModelParams, n_radial: int = DEFAULT_RADIAL,
                 n_angular: int = DEFAULT_ANGULAR):
        self.params = p
        self.n_radial = n_radial
        self.n_angular = n_angular
        self._rules: dict[float, QuadratureRule] = {}

    def rule(self, mu: float) -> QuadratureRule:
        mu = float(mu)
        if mu not in self._rules:
            self._rules[mu] = ball_rule(self.params, mu, self.n_radial, self.n_angular)
        return self._rules[mu]


@lru_cache(maxsize=None)
def closed_form_rho_moment(b: float, mu: float, k: int = 0, n: int = 2) -> float:
    """int_B |m|^{2k} rho^mu dm in closed form (Beta function)."""
    from scipy.special import beta as beta_fn

    if n == 2:
        return float(np.pi * b ** (mu + k + 1) * beta_fn(k + 1.0, mu + 1.0))
    return float(2.0 * np.pi * b ** (mu + k + 1.5) * beta_fn(k + 1.5, mu + 1.0))
