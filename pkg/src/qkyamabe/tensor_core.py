"""
Curvature kernels for conformally flat metrics ``g = phi**-2 * delta``.

All matrices are returned in Euclidean coordinate components.  The mixed
Schouten endomorphism ``g^-1 A_g`` is what the sigma_k curvature is built
from; for a conformally flat metric it reduces to

    g^-1 A_g = phi * Hess(phi) - 0.5 * |grad phi|^2 * I

so every quantity here only needs phi together with its first and second
Euclidean derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, factorial
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .linalg import jacobi_eigenvalues

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite-difference"
DEFAULT_FD_STEP = 1e-4


def elem_sym(eigenvalues: Sequence[float], k: int) -> float:
    """k-th elementary symmetric polynomial of ``eigenvalues``.

    Uses the one-pass recurrence e_j <- e_j + x * e_{j-1} (j descending),
    which is O(n k) and avoids the cancellation of Newton power sums.
    """
    values = [float(v) for v in eigenvalues]
    n = len(values)
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    e = [1.0] + [0.0] * k
    for x in values:
        for j in range(k, 0, -1):
            e[j] += x * e[j - 1]
    return e[k]


def sigma_k_two_eig(theta: float, mu: float, n: int, k: int) -> float:
    """sigma_k of the spectrum [theta] * (n - 1) + [mu] in closed form."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    coef = factorial(n - 1) / (factorial(k) * factorial(n - k))
    return coef * ((n - k) * theta + k * mu) * theta ** (k - 1)


@dataclass(frozen=True)
class DirectionVector:
    """Nonzero translation direction; ``xi = alpha . x``."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).reshape(-1)
        if a.size == 0 or not np.any(a != 0.0):
            raise ValueError("direction vector must be nonzero")
        object.__setattr__(self, "alpha", a)

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.alpha, self.alpha))

    def xi(self, x) -> float:
        return float(np.dot(self.alpha, np.asarray(x, dtype=float)))

    def scaled(self, c: float) -> "DirectionVector":
        return DirectionVector(c * self.alpha)

    @classmethod
    def unit(cls, n: int, axis: int = -1) -> "DirectionVector":
        a = np.zeros(n)
        a[axis] = 1.0
        return cls(a)

    @classmethod
    def diagonal(cls, n: int, normalize: bool = False) -> "DirectionVector":
        a = np.ones(n)
        if normalize:
            a /= np.sqrt(n)
        return cls(a)


@dataclass(frozen=True)
class SchoutenSpectrum:
    """Eigenvalues of ``g^-1 A_g`` at a point, ascending.

    In the translation-invariant case ``structured`` is set and ``theta``
    is the eigenvalue of multiplicity n - 1, ``mu`` the simple one.
    """

    eigenvalues: np.ndarray
    structured: bool = False
    theta: Optional[float] = None
    mu: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", np.sort(np.asarray(self.eigenvalues, dtype=float)))

    @classmethod
    def from_two(cls, theta: float, mu: float, n: int) -> "SchoutenSpectrum":
        return cls(np.array([theta] * (n - 1) + [mu]), structured=True, theta=float(theta), mu=float(mu))

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def sigma(self, k: int) -> float:
        if self.structured:
            return sigma_k_two_eig(self.theta, self.mu, self.n, k)
        return elem_sym(self.eigenvalues, k)


def _fd_step(x: np.ndarray, h: float) -> float:
    return h * max(1.0, float(np.linalg.norm(x)))


@dataclass
class ScalarField:
    """Smooth scalar field on a Euclidean domain with derivative access.

    If ``gradient``/``hessian`` are not supplied (or ``derivative_mode`` is
    ``"finite-difference"``) derivatives come from 2nd-order central
    differences of ``value`` with step ``h * max(1, |x|)``.
    """

    dimension: int
    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    derivative_mode: str = ANALYTIC
    h: float = DEFAULT_FD_STEP
    name: str = field(default="field", compare=False)

    def __post_init__(self):
        if self.derivative_mode not in (ANALYTIC, FINITE_DIFFERENCE):
            raise ValueError(f"unknown derivative mode {self.derivative_mode!r}")
        if self.derivative_mode == ANALYTIC and (self.gradient is None or self.hessian is None):
            self.derivative_mode = FINITE_DIFFERENCE

    def _point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dimension:
            raise ValueError(f"{self.name}: expected a point in R^{self.dimension}, got {x.size} coordinates")
        return x

    def __call__(self, x) -> float:
        return float(self.value(self._point(x)))

    def grad(self, x) -> np.ndarray:
        x = self._point(x)
        if self.derivative_mode == ANALYTIC:
            return np.asarray(self.gradient(x), dtype=float).reshape(self.dimension)
        step = _fd_step(x, self.h)
        out = np.empty(self.dimension)
        for i in range(self.dimension):
            e = np.zeros(self.dimension)
            e[i] = step
            out[i] = (self.value(x + e) - self.value(x - e)) / (2.0 * step)
        return out

    def hess(self, x) -> np.ndarray:
        x = self._point(x)
        if self.derivative_mode == ANALYTIC:
            return np.asarray(self.hessian(x), dtype=float).reshape(self.dimension, self.dimension)
        step = _fd_step(x, self.h)
        n = self.dimension
        f0 = self.value(x)
        out = np.empty((n, n))
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = step
            out[i, i] = (self.value(x + ei) - 2.0 * f0 + self.value(x - ei)) / step**2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = step
                v = (self.value(x + ei + ej) - self.value(x + ei - ej)
                     - self.value(x - ei + ej) + self.value(x - ei - ej)) / (4.0 * step**2)
                out[i, j] = out[j, i] = v
        return out

    def with_mode(self, mode: str, h: Optional[float] = None) -> "ScalarField":
        """Copy of this field with a different derivative mode (keeps the analytic maps)."""
        clone = type(self)(self.dimension, self.value, self.gradient, self.hessian,
                           ANALYTIC, self.h if h is None else h, self.name)
        clone.derivative_mode = mode
        return clone


class ConformalFactor(ScalarField):
    """Positive scalar field phi defining the metric ``phi**-2 * delta``.

    Evaluating at a point where phi <= 0 raises :class:`DomainError`.
    """

    def __post_init__(self):
        if self.dimension < 3:
            raise ValueError(f"conformal factor needs dimension >= 3, got {self.dimension}")
        super().__post_init__()

    def __call__(self, x) -> float:
        v = super().__call__(x)
        if not v > 0.0:
            raise DomainError(f"conformal factor is non-positive ({v!r})", np.asarray(x, dtype=float))
        return v

    def jet(self, x):
        """``(phi, grad phi, Hess phi)`` at x, checking positivity."""
        return self(x), self.grad(x), self.hess(x)

    @classmethod
    def constant(cls, n: int, c: float = 1.0) -> "ConformalFactor":
        if c <= 0:
            raise ValueError("constant conformal factor must be positive")
        return cls(n, lambda x: c, lambda x: np.zeros(n), lambda x: np.zeros((n, n)), name="const")

    @classmethod
    def profile(cls, direction: DirectionVector, p0, p1, p2, name: str = "profile") -> "ConformalFactor":
        """phi(x) = P(alpha . x) from a 1-D profile and its first two derivatives."""
        a = direction.alpha
        outer = np.outer(a, a)
        return cls(
            direction.n,
            lambda x: p0(float(a @ x)),
            lambda x: p1(float(a @ x)) * a,
            lambda x: p2(float(a @ x)) * outer,
            name=name,
        )


def schouten_matrix(phi: ConformalFactor, x) -> np.ndarray:
    """Matrix of ``g^-1 A_g`` at x: ``phi Hess(phi) - |grad phi|^2 / 2 * I``."""
    p, dp, ddp = phi.jet(x)
    return p * ddp - 0.5 * float(dp @ dp) * np.eye(phi.dimension)


def schouten_spectrum(phi: ConformalFactor, x) -> SchoutenSpectrum:
    """General path: assemble the Schouten matrix and diagonalise it by Jacobi rotations."""
    return SchoutenSpectrum(jacobi_eigenvalues(schouten_matrix(phi, x)))


def schouten_eigs_translation(p: float, dp: float, ddp: float, direction: DirectionVector) -> SchoutenSpectrum:
    """Two-eigenvalue spectrum for a profile phi(alpha . x).

    theta = -dp^2 |alpha|^2 / 2 (multiplicity n - 1) and
    mu = (p ddp - dp^2 / 2) |alpha|^2.
    """
    if not p > 0.0:
        raise DomainError(f"conformal factor is non-positive ({p!r})")
    a2 = direction.norm_sq
    theta = -0.5 * dp * dp * a2
    mu = (p * ddp - 0.5 * dp * dp) * a2
    return SchoutenSpectrum.from_two(theta, mu, direction.n)


def conformal_scalar(phi: ConformalFactor, x) -> float:
    """Scalar curvature ``(n - 1)(2 phi Lap(phi) - n |grad phi|^2)``."""
    n = phi.dimension
    p, dp, ddp = phi.jet(x)
    return (n - 1) * (2.0 * p * np.trace(ddp) - n * float(dp @ dp))


def conformal_ricci(phi: ConformalFactor, x) -> np.ndarray:
    """Ricci tensor (covariant, Euclidean components) of ``phi**-2 delta``."""
    n = phi.dimension
    p, dp, ddp = phi.jet(x)
    iso = p * np.trace(ddp) - (n - 1) * float(dp @ dp)
    return ((n - 2) * p * ddp + iso * np.eye(n)) / p**2


def hessian_conformal(du, ddu, p: float, dp) -> np.ndarray:
    """Hessian of a scalar u with respect to ``phi**-2 delta``.

    ``u_ij + (phi_i u_j + phi_j u_i) / phi - delta_ij (grad phi . grad u) / phi``

    Parameters
    ----------
    du, ddu : Euclidean gradient and Hessian of u.
    p, dp : phi and its Euclidean gradient at the same point.
    """
    du = np.asarray(du, dtype=float).reshape(-1)
    ddu = np.asarray(ddu, dtype=float)
    dp = np.asarray(dp, dtype=float).reshape(-1)
    n = du.size
    if ddu.shape != (n, n) or dp.size != n:
        raise ValueError(f"dimension mismatch: grad u {du.shape}, Hess u {ddu.shape}, grad phi {dp.shape}")
    if not p > 0.0:
        raise DomainError(f"conformal factor is non-positive ({p!r})")
    cross = np.outer(dp, du)
    return ddu + (cross + cross.T) / p - (float(dp @ du) / p) * np.eye(n)


def sphere_sigma_k(n: int, k: int) -> float:
    """sigma_k of the round unit sphere (Schouten tensor g/2): C(n, k) / 2^k."""
    return comb(n, k) / 2**k
