"""Galerkin basis on the disk vanishing on the boundary.

Each function is rho^s times a polynomial: a radial Jacobi polynomial in
t = 2 r^2 / b - 1 carried by the harmonic factor r^|j| (cos/sin)(j theta).
The rho^s prefactor enforces the Dirichlet condition exactly, and because
values (gradients) are exactly rho^s (rho^{s-1}) times polynomials, every
assembly integral can be sent to a Gauss-Jacobi rule whose weight absorbs
the full fractional power of rho - quadrature stays exact.

A basis may carry several prefactor families rho^s log(rho/b)^l.  The
evolution problems need s large enough that gradients stay
square-integrable against the weight.  Degenerate problems whose forcing
carries a 1/rho term produce solutions behaving like rho^{1-beta} at the
boundary, with a logarithm when 1-beta collides with the integer powers
already in the basis; an extra family matching that behavior restores
fast convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_jacobi

from .geometry import ModelParams
from .quadrature import QuadratureRule, RuleCache


class BasisError(RuntimeError):
    pass


def rho_prefactor_power(exponent: float) -> int:
    """Smallest integer s >= 1 with 2(s-1) + exponent > -1."""
    s = 1
    while 2 * (s - 1) + exponent <= -1.0:
        s += 1
    return s


def _jacobi_deriv(k: int, a: float, b: float, s: np.ndarray) -> np.ndarray:
    if k == 0:
        return np.zeros_like(s)
    return 0.5 * (k + a + b + 1) * eval_jacobi(k - 1, a + 1, b + 1, s)


@dataclass(frozen=True)
class BasisSet:
    """Boundary-vanishing basis; modes are (k, j, s, l) with j < 0 the
    sine branch, rho^s the prefactor power and l the log(rho/b) power."""

    params: ModelParams
    exponent: float                  # weight exponent (beta or gamma)
    modes: tuple                     # ((k, j, s, l), ...)
    _tab_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def powers(self) -> np.ndarray:
        """Prefactor power per mode."""
        return np.array([s for _, _, s, _ in self.modes])

    @property
    def power_groups(self) -> dict[tuple, np.ndarray]:
        """Mode indices grouped by prefactor family (s, l)."""
        groups: dict[tuple, list[int]] = {}
        for i, (_, _, s, l) in enumerate(self.modes):
            groups.setdefault((float(s), int(l)), []).append(i)
        return {f: np.array(ix) for f, ix in groups.items()}

    def evaluate(self, nodes: np.ndarray) -> np.ndarray:
        return _evaluate(self.params.b, self.modes, np.asarray(nodes, float))[0]

    def gradients(self, nodes: np.ndarray) -> np.ndarray:
        return _evaluate(self.params.b, self.modes, np.asarray(nodes, float))[1]

    def tabulate(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Values and gradients at a rule's nodes, memoized per rule."""
        key = (rule.mu, len(rule.weights))
        if key not in self._tab_cache:
            self._tab_cache[key] = _evaluate(self.params.b, self.modes, rule.nodes)
        return self._tab_cache[key]

    def function(self, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        return lambda nodes: self.evaluate(nodes) @ coeffs

    def gradient_function(self, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        return lambda nodes: np.einsum("nlc,l->nc", self.gradients(nodes), coeffs)


def _evaluate(b: float, modes, nodes: np.ndarray):
    x, y = nodes[:, 0], nodes[:, 1]
    r2 = x * x + y * y
    rho = b - r2
    t = 2.0 * r2 / b - 1.0
    z = x + 1j * y
    logfac = np.log(rho / b)
    max_a = max(abs(j) for _, j, _, _ in modes)
    zpow = np.empty((max_a + 1, len(x)), dtype=complex)
    zpow[0] = 1.0
    for a in range(1, max_a + 1):
        zpow[a] = zpow[a - 1] * z

    rho_pows: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    for _, _, s, _ in modes:
        if s not in rho_pows:
            rho_pows[s] = (rho ** s, rho ** (s - 1.0))

    jac: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    for k, j, _, _ in modes:
        a = abs(j)
        if (k, a) not in jac:
            jac[(k, a)] = (eval_jacobi(k, 2.0, float(a), t),
                           _jacobi_deriv(k, 2.0, float(a), t))

    L = len(modes)
    vals = np.empty((len(x), L))
    grads = np.empty((len(x), L, 2))
    for idx, (k, j, s, ell) in enumerate(modes):
        a = abs(j)
        P, dP = jac[(k, a)]
        if j >= 0:
            H = zpow[a].real
            Hx = a * zpow[a - 1].real if a > 0 else np.zeros_like(x)
            Hy = -a * zpow[a - 1].imag if a > 0 else np.zeros_like(x)
        else:
            H = zpow[a].imag
            Hx = a * zpow[a - 1].imag
            Hy = a * zpow[a - 1].real
        rq, rqm1 = rho_pows[s]
        if ell:
            pre = rq * logfac ** ell
            # d(rho^s log^l)/dm = -2 m rho^{s-1} (s log^l + l log^{l-1})
            dpre = rqm1 * (s * logfac ** ell + ell * logfac ** (ell - 1))
        else:
            pre = rq
            dpre = s * rqm1
        vals[:, idx] = pre * H * P
        common = -2.0 * dpre * H * P
        radial = pre * H * dP * (4.0 / b)       # dP/dm = (4/b) P'(t) m
        grads[:, idx, 0] = common * x + pre * Hx * P + radial * x
        grads[:, idx, 1] = common * y + pre * Hy * P + radial * y
    return vals, grads


def build_basis(p: ModelParams, exponent: float, K_r: int, K_theta: int,
                cache: RuleCache, extra_powers: tuple = ()) -> BasisSet:
    """K_r (2 K_theta + 1) functions per prefactor family (n = 2).

    ``extra_powers`` adds families with other boundary behavior; entries
    are powers s or pairs (s, l) for rho^s log(rho/b)^l.  Families closer
    than 1e-9 to an existing one are dropped as duplicates.
    """
    if p.n != 2:
        raise BasisError("Galerkin basis is implemented for n = 2 only")
    if K_r < 1 or K_theta < 0:
        raise BasisError("need K_r >= 1 and K_theta >= 0")
    base = float(rho_prefactor_power(exponent))
    families = [(base, 0)]
    for entry in extra_powers:
        s, ell = entry if isinstance(entry, tuple) else (entry, 0)
        s, ell = float(s), int(ell)
        if 2 * (s - 1) + exponent <= -1.0:
            raise BasisError(
                f"family power {s} leaves the weighted H^1 space at exponent {exponent}")
        if all(abs(s - t) > 1e-9 or ell != le for t, le in families):
            families.append((s, ell))
    modes = tuple((k, j, s, ell) for s, ell in families
                  for j in range(-K_theta, K_theta + 1)
                  for k in range(K_r))
    bs = BasisSet(params=p, exponent=exponent, modes=modes)
    from .operators import gram_L2
    g = gram_L2(bs, cache)
    if np.linalg.eigvalsh(g).min() <= 0:
        raise BasisError(
            f"rank-deficient basis, Gram condition number {np.linalg.cond(g):.3e}")
    object.__setattr__(bs, "_gram_cond", float(np.linalg.cond(g)))
    return bs


def gram_condition_number(bs: BasisSet) -> float:
    return getattr(bs, "_gram_cond")
