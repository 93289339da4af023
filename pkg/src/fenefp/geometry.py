"""Domain geometry for the FENE configuration ball B(0, sqrt(b)).

Everything here is a pure function of the model parameters: the weight
rho = b - |m|^2, the distance to the boundary, the FENE spring potential,
the equilibrium density, the reaction coefficient of the transformed
equation, and the radial probability flux.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TRACE_TOL = 1e-12


class DomainError(ValueError):
    """Point outside the closed ball, or parameters off the admissible range."""


class ConditionBError(ValueError):
    """Raised when b <= 2; the analysis requires condition b > 2."""


def _as_matrix_fn(kappa) -> Callable[[float], np.ndarray]:
    if callable(kappa):
        return kappa
    mat = np.asarray(kappa, dtype=float)
    return lambda t, _m=mat: _m


@dataclass(frozen=True)
class ModelParams:
    """Problem instance: dimension, extension parameter, flow schedule, horizon.

    ``kappa`` is the (traceless) velocity-gradient matrix as a function of
    time; a constant matrix may be passed directly.
    """

    n: int = 2
    b: float = 4.0
    kappa: Callable[[float], np.ndarray] | Sequence = field(default=None)  # type: ignore[assignment]
    horizon: float = 1.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError(f"dimension n must be 2 or 3, got {self.n}")
        if not self.b > 2.0:
            raise ConditionBError(
                f"condition b > 2 violated: b = {self.b}"
            )
        if self.horizon <= 0:
            raise DomainError("horizon T must be positive")
        kap = self.kappa
        if kap is None:
            kap = np.zeros((self.n, self.n))
        object.__setattr__(self, "kappa", _as_matrix_fn(kap))
        for t in np.linspace(0.0, self.horizon, 7):
            k = self.kappa_at(t)
            if k.shape != (self.n, self.n):
                raise DomainError(f"kappa(t) must be {self.n}x{self.n}")
            if abs(np.trace(k)) > TRACE_TOL:
                raise DomainError(
                    f"kappa must be traceless: |tr kappa({t})| = {abs(np.trace(k)):.3e}"
                )

    def kappa_at(self, t: float) -> np.ndarray:
        return np.asarray(self.kappa(t), dtype=float)

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.b))

    @property
    def beta(self) -> float:
        """Weight exponent of the transformed problem, 2 - b/2."""
        return 2.0 - self.b / 2.0


# --- flow schedules ---------------------------------------------------------

def kappa_zero(n: int = 2) -> np.ndarray:
    return np.zeros((n, n))


def kappa_shear(rate: float = 1.0, n: int = 2) -> np.ndarray:
    k = np.zeros((n, n))
    k[0, 1] = rate
    return k


def kappa_corotational(rate: float = 1.0, n: int = 2) -> np.ndarray:
    k = np.zeros((n, n))
    k[0, 1] = rate
    k[1, 0] = -rate
    return k


def kappa_table(times: Sequence[float], matrices: Sequence) -> Callable[[float], np.ndarray]:
    """Piecewise-linear interpolation of a (t, matrix) table."""
    times = np.asarray(times, dtype=float)
    mats = np.asarray(matrices, dtype=float)
    if times.ndim != 1 or len(times) != len(mats):
        raise DomainError("kappa table needs matching times and matrices")
    if np.any(np.diff(times) <= 0):
        raise DomainError("kappa table times must be strictly increasing")

    def fn(t: float) -> np.ndarray:
        t = float(np.clip(t, times[0], times[-1]))
        i = int(np.searchsorted(times, t, side="right") - 1)
        i = min(i, len(times) - 2)
        s = (t - times[i]) / (times[i + 1] - times[i])
        return (1 - s) * mats[i] + s * mats[i + 1]

    return fn


# --- pointwise fields -------------------------------------------------------

def _check_inside(p: ModelParams, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    r2 = np.sum(m * m, axis=-1)
    if np.any(r2 > p.b * (1 + 1e-14)):
        raise DomainError("point outside the closed ball |m|^2 <= b")
    return m


def rho(p: ModelParams, m) -> np.ndarray | float:
    """Weight rho = b - |m|^2, in [0, b]."""
    m = _check_inside(p, m)
    val = p.b - np.sum(m * m, axis=-1)
    return np.maximum(val, 0.0)


def dist(p: ModelParams, m) -> np.ndarray | float:
    """Euclidean distance to the boundary: sqrt(b) - |m|."""
    m = _check_inside(p, m)
    return np.maximum(p.radius - np.sqrt(np.sum(m * m, axis=-1)), 0.0)


def fene_potential(p: ModelParams, m, H: float = 1.0) -> np.ndarray | float:
    """FENE spring potential -(H b / 2) log(1 - |m|^2 / b); diverges at |m| = sqrt(b)."""
    m = np.asarray(m, dtype=float)
    r2 = np.sum(m * m, axis=-1)
    if np.any(r2 >= p.b):
        raise DomainError("FENE potential is singular at |m|^2 = b")
    return -(H * p.b / 2.0) * np.log1p(-r2 / p.b)


def reaction_coefficient(p: ModelParams, t: float, m) -> np.ndarray | float:
    """c(t, m) = 2 m . kappa(t) m + n (b/2 - 1)."""
    m = _check_inside(p, m)
    k = p.kappa_at(t)
    quad = np.einsum("...i,ij,...j->...", m, k, m)
    return 2.0 * quad + p.n * (p.b / 2.0 - 1.0)


def flux(p: ModelParams, f, grad_f, t: float, m) -> np.ndarray | float:
    """Radial probability flux J = (b m f / (2 rho) - kappa m f + grad f / 2) . m/|m|."""
    m = np.asarray(m, dtype=float)
    grad_f = np.asarray(grad_f, dtype=float)
    r = np.sqrt(np.sum(m * m, axis=-1))
    if np.any(r == 0.0):
        raise DomainError("radial flux undefined at m = 0")
    rh = rho(p, m)
    k = p.kappa_at(t)
    nu = m / r[..., None]
    spring = p.b * r * np.asarray(f) / (2.0 * rh)
    drift = np.einsum("...i,ij,...j->...", nu, k, m) * np.asarray(f)
    diffusion = 0.5 * np.sum(grad_f * nu, axis=-1)
    return spring - drift + diffusion


# --- equilibrium ------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumField:
    """Normalized equilibrium density f^eq = Z^{-1} rho^{b/2}."""

    params: ModelParams
    Z: float

    def __call__(self, m) -> np.ndarray | float:
        return rho(self.params, m) ** (self.params.b / 2.0) / self.Z

    def gradient(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        rh = np.asarray(rho(self.params, m))
        pref = -(self.params.b / self.Z) * rh ** (self.params.b / 2.0 - 1.0)
        return pref[..., None] * m


def equilibrium_normalization(p: ModelParams) -> float:
    """Z = int_B rho^{b/2} dm, in closed form.

    n=2: 2 pi b^{b/2+1} / (b+2); n=3 via the Beta function.
    """
    from scipy.special import beta as beta_fn

    if p.n == 2:
        return 2.0 * np.pi * p.b ** (p.b / 2.0 + 1.0) / (p.b + 2.0)
    # n=3: 4 pi int_0^sqrt(b) r^2 (b - r^2)^{b/2} dr = 2 pi b^{(b+3)/2} B(3/2, b/2+1)
    return 2.0 * np.pi * p.b ** ((p.b + 3.0) / 2.0) * beta_fn(1.5, p.b / 2.0 + 1.0)


def equilibrium(p: ModelParams) -> EquilibriumField:
    return EquilibriumField(p, equilibrium_normalization(p))
