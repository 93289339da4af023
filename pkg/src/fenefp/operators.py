"""Assembly of the weighted bilinear forms and the Garding certificate.

All matrices are laid out as A[test, trial]; applying A to a coefficient
vector produces the weak-form rows.  Time dependence enters only through
kappa(t), so the drift and reaction blocks are precomputed as
kappa-component matrices and recombined per time step.

Basis functions are rho^s times polynomials, with possibly several
prefactor powers s.  Every matrix entry is an integral of
(polynomial) x rho^E with E = weight_exponent + s_test' + s_trial',
where s' is s for a value factor and s - 1 for a gradient factor, so
each block of a matrix is computed exactly with a Gauss-Jacobi rule
built at its own exponent E.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .basis import BasisSet
from .quadrature import RuleCache


class CoercivityError(RuntimeError):
    """Could not certify a positive Garding constant."""


def _pair_rule(bs: BasisSet, cache: RuleCache, fA: tuple, fB: tuple,
               wexp: float, gA: int, gB: int):
    """Rule and effective weights for one block.

    gA/gB flag whether the test/trial factor is a gradient (one power of
    rho fewer).  The returned weights fold rho^{wexp - E} so that
    sum(w * test * trial) equals the integral against rho^wexp dm.
    The rule is exact for log-free families; for log-carrying families
    the endpoint singularity is mild and Gauss-Jacobi still converges
    far below the solver tolerances.
    """
    E = wexp + (fA[0] - gA) + (fB[0] - gB)
    rule = cache.rule(E)
    extra = wexp - E
    w = rule.weights if extra == 0.0 else rule.weights * rule.rho ** extra
    return rule, w


def _blocks(bs: BasisSet):
    groups = bs.power_groups
    for fA, ia in groups.items():
        for fB, ib in groups.items():
            yield fA, ia, fB, ib


def gram_L2(bs: BasisSet, cache: RuleCache, rho_power_shift: int = 0) -> np.ndarray:
    """Gram matrix of int phi_i phi_j rho^{exponent + shift} dm."""
    out = np.zeros((bs.size, bs.size))
    for fA, ia, fB, ib in _blocks(bs):
        rule, w = _pair_rule(bs, cache, fA, fB, bs.exponent + rho_power_shift, 0, 0)
        vals, _ = bs.tabulate(rule)
        out[np.ix_(ia, ib)] = vals[:, ia].T @ (w[:, None] * vals[:, ib])
    return out


def stiffness(bs: BasisSet, cache: RuleCache) -> np.ndarray:
    """S[j,i] = 1/2 int grad phi_i . grad phi_j rho^exponent dm."""
    out = np.zeros((bs.size, bs.size))
    for fA, ia, fB, ib in _blocks(bs):
        rule, w = _pair_rule(bs, cache, fA, fB, bs.exponent, 1, 1)
        _, grads = bs.tabulate(rule)
        gA = grads[:, ia, :]
        gB = grads[:, ib, :]
        out[np.ix_(ia, ib)] = 0.5 * (
            gA[:, :, 0].T @ (w[:, None] * gB[:, :, 0])
            + gA[:, :, 1].T @ (w[:, None] * gB[:, :, 1]))
    return out


def drift_components(bs: BasisSet, cache: RuleCache) -> np.ndarray:
    """Dab[a,b][j,i] = int m_b  d_a phi_i  phi_j rho^exponent dm.

    kappa m . grad u = sum_ab kappa[a,b] m_b d_a u.
    """
    out = np.zeros((2, 2, bs.size, bs.size))
    for fA, ia, fB, ib in _blocks(bs):
        rule, w = _pair_rule(bs, cache, fA, fB, bs.exponent, 0, 1)
        vals, grads = bs.tabulate(rule)
        for a in range(2):
            for b_idx in range(2):
                integ = rule.nodes[:, b_idx][:, None] * grads[:, ib, a]
                out[a, b_idx][np.ix_(ia, ib)] = vals[:, ia].T @ (w[:, None] * integ)
    return out


def reaction_components(bs: BasisSet, cache: RuleCache) -> tuple[np.ndarray, np.ndarray]:
    """Constant part R0 and quadratic parts Rab of the reaction block.

    R(t) = n(b/2 - 1) R0 + 2 sum_ab kappa[a,b](t) Rab, with
    R0[j,i] = int phi_i phi_j rho^{exponent-1} dm and
    Rab[j,i] = int m_a m_b phi_i phi_j rho^{exponent-1} dm.
    """
    r0 = np.zeros((bs.size, bs.size))
    rab = np.zeros((2, 2, bs.size, bs.size))
    for fA, ia, fB, ib in _blocks(bs):
        rule, w = _pair_rule(bs, cache, fA, fB, bs.exponent - 1.0, 0, 0)
        vals, _ = bs.tabulate(rule)
        vA, vB = vals[:, ia], vals[:, ib]
        r0[np.ix_(ia, ib)] = vA.T @ (w[:, None] * vB)
        for a in range(2):
            for b_idx in range(2):
                fac = rule.nodes[:, a] * rule.nodes[:, b_idx]
                rab[a, b_idx][np.ix_(ia, ib)] = vA.T @ ((w * fac)[:, None] * vB)
    return r0, rab


def degenerate_drift(bs: BasisSet, cache: RuleCache, beta: float) -> np.ndarray:
    """D0[j,i] = (beta - gamma) int m . grad phi_i  phi_j rho^{gamma-1} dm.

    Only used when the basis exponent is the relaxed gamma.
    """
    gamma = bs.exponent
    out = np.zeros((bs.size, bs.size))
    for fA, ia, fB, ib in _blocks(bs):
        rule, w = _pair_rule(bs, cache, fA, fB, gamma - 1.0, 0, 1)
        vals, grads = bs.tabulate(rule)
        integ = np.einsum("nc,nlc->nl", rule.nodes, grads[:, ib, :])
        out[np.ix_(ia, ib)] = vals[:, ia].T @ (w[:, None] * integ)
    return (beta - gamma) * out


@dataclass
class AssembledOperator:
    """Mass/stiffness/drift/reaction blocks for the W- or gamma-problem."""

    basis: BasisSet
    cache: RuleCache
    M: np.ndarray
    S: np.ndarray
    Dab: np.ndarray
    R0: np.ndarray
    Rab: np.ndarray
    D0: np.ndarray | None = None

    def drift(self, t: float) -> np.ndarray:
        kap = self.basis.params.kappa_at(t)
        out = np.zeros_like(self.M)
        for a in range(2):
            for b_idx in range(2):
                if kap[a, b_idx] != 0.0:
                    out += kap[a, b_idx] * self.Dab[a, b_idx]
        return out

    def reaction(self, t: float) -> np.ndarray:
        p = self.basis.params
        kap = p.kappa_at(t)
        out = p.n * (p.b / 2.0 - 1.0) * self.R0
        for a in range(2):
            for b_idx in range(2):
                if kap[a, b_idx] != 0.0:
                    out = out + 2.0 * kap[a, b_idx] * self.Rab[a, b_idx]
        return out

    def bilinear(self, t: float) -> np.ndarray:
        """Matrix of L[., .; t] (or L0 with the degenerate drift block)."""
        out = self.S + self.drift(t)
        if self.D0 is not None:
            out = out + self.D0
        return out

    def evolution_matrix(self, t: float) -> np.ndarray:
        """A(t) with M d' + A(t) d = forcing; reaction folded in."""
        return self.bilinear(t) - self.reaction(t)

    @property
    def gram_H1(self) -> np.ndarray:
        return 2.0 * self.S + self.M


def assemble(bs: BasisSet, cache: RuleCache, beta: float | None = None,
             gamma_mode: bool = False) -> AssembledOperator:
    """Assemble all blocks; with gamma_mode the degenerate drift D0 is added."""
    r0, rab = reaction_components(bs, cache)
    d0 = None
    if gamma_mode:
        if beta is None:
            beta = bs.params.beta
        d0 = degenerate_drift(bs, cache, beta)
    return AssembledOperator(basis=bs, cache=cache, M=gram_L2(bs, cache),
                             S=stiffness(bs, cache),
                             Dab=drift_components(bs, cache), R0=r0, Rab=rab, D0=d0)


def garding_constants(op: AssembledOperator, t: float = 0.0,
                      max_c2: float = 2.0 ** 24) -> tuple[float, float]:
    """Certify C1 ||w||^2_{H^1} <= L[w,w;t] + C2 ||w||^2_{L^2} on the basis.

    Returns the smallest doubling-ladder C2 for which the generalized
    eigenproblem against the H^1 Gram certifies C1 > 0.
    """
    q = op.bilinear(t)
    q_sym = 0.5 * (q + q.T)
    gram = op.gram_H1
    c2 = 0.0
    while True:
        lam = eigh(q_sym + c2 * op.M, gram, eigvals_only=True,
                   subset_by_index=(0, 0))[0]
        if lam > 1e-12:
            return float(lam), float(c2)
        c2 = 1.0 if c2 == 0.0 else 2.0 * c2
        if c2 > max_c2:
            raise CoercivityError(
                f"no positive Garding constant found up to C2 = {max_c2}")
