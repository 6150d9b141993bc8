"""
Pointwise and lattice verification of quasi k-Yamabe gradient solitons.

A candidate ``(phi, f, m, lambda, k)`` on a Euclidean domain is a soliton
for the metric ``g = phi**-2 delta`` when

    Hess_g f - (1/m) df (x) df = (sigma_k - lambda) g,

or equivalently, with ``u = exp(-f/m)``,

    Hess_g u = -(u/m) (sigma_k - lambda) g.

Both forms are evaluated here, together with the trace identity
``Lap_g f - |df|_g^2 / m = n (sigma_k - lambda)``.
"""
from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._io import atomic_write, fmt
from .errors import DomainError
from .tensor_core import (
    ConformalFactor,
    DirectionVector,
    ScalarField,
    SchoutenSpectrum,
    hessian_conformal,
    schouten_eigs_translation,
    schouten_spectrum,
)

BOUNDARY_MARGIN = 1e-6
POTENTIAL_MATCH_TOL = 1e-10


@dataclass(frozen=True)
class HalfSpace:
    """Open half-space ``{x : normal . x + offset > 0}``."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float).reshape(-1))

    def distance(self, x) -> float:
        """Signed Euclidean distance to the boundary hyperplane (positive inside)."""
        return (float(self.normal @ np.asarray(x, dtype=float)) + self.offset) / float(np.linalg.norm(self.normal))


@dataclass
class SolitonCandidate:
    """A metric ``phi**-2 delta`` plus potential and constants to be tested.

    Exactly one of ``f`` and ``u`` is needed; the other is derived through
    ``u = exp(-f/m)``.  If ``direction`` is given the candidate is declared
    translation invariant along it and sigma_k uses the two-eigenvalue
    formulas instead of a general eigensolve.
    """

    n: int
    k: int
    m: float
    lam: float
    phi: ConformalFactor
    f: Optional[ScalarField] = None
    u: Optional[ScalarField] = None
    domain: tuple = ()
    direction: Optional[DirectionVector] = None
    name: str = "candidate"
    box: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= n = {self.n}, got {self.k}")
        if self.m == 0:
            raise ValueError("m must be nonzero")
        if self.f is None and self.u is None:
            raise ValueError("either f or u must be supplied")
        if self.phi.dimension != self.n:
            raise ValueError("conformal factor dimension does not match n")
        if self.direction is not None and self.direction.n != self.n:
            raise ValueError("direction dimension does not match n")
        self.domain = tuple(self.domain)

    def with_lambda(self, lam: float) -> "SolitonCandidate":
        return SolitonCandidate(self.n, self.k, self.m, lam, self.phi, self.f, self.u,
                                self.domain, self.direction, self.name, self.box)

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise ValueError(f"expected a point in R^{self.n}, got {x.size} coordinates")
        for half in self.domain:
            d = half.distance(x)
            if d < BOUNDARY_MARGIN:
                raise DomainError(f"{self.name}: point is outside or within {BOUNDARY_MARGIN} of the domain boundary", x)
        return x

    def potential_jet(self, x):
        """``(f, df, ddf, u, du, ddu)`` at x (Euclidean derivatives)."""
        m = self.m
        if self.f is not None:
            f, df, ddf = self.f(x), self.f.grad(x), self.f.hess(x)
            u = math.exp(-f / m)
            du = -(u / m) * df
            ddu = (u / m**2) * np.outer(df, df) - (u / m) * ddf
            if self.u is not None:
                uu = self.u(x)
                if abs(uu - u) > POTENTIAL_MATCH_TOL:
                    raise ValueError(f"{self.name}: supplied u and exp(-f/m) disagree by {abs(uu - u):.3e}")
        else:
            u = self.u(x)
            if not u > 0.0:
                raise DomainError(f"{self.name}: u is non-positive ({u!r})", x)
            du, ddu = self.u.grad(x), self.u.hess(x)
            f = -m * math.log(u)
            df = -m * du / u
            ddf = -m * (ddu / u - np.outer(du, du) / u**2)
        if not u > 0.0:
            raise DomainError(f"{self.name}: u is non-positive ({u!r})", x)
        return f, df, ddf, u, du, ddu

    def spectrum(self, x) -> SchoutenSpectrum:
        """Schouten spectrum at x; structured when the candidate is translation invariant."""
        if self.direction is None:
            return schouten_spectrum(self.phi, x)
        p, dp, ddp = self.phi.jet(x)
        a = self.direction.alpha
        a2 = self.direction.norm_sq
        return schouten_eigs_translation(p, float(dp @ a) / a2, float(a @ ddp @ a) / a2**2, self.direction)


@dataclass
class PointEvaluation:
    point: np.ndarray
    spectrum: SchoutenSpectrum
    sigma_k: float
    residual_f: np.ndarray
    residual_u: np.ndarray
    trace_check: float
    density: float


def evaluate(c: SolitonCandidate, x) -> PointEvaluation:
    """All soliton quantities at one point, sharing the derivative evaluations."""
    x = c.check_point(x)
    p, dp, _ = c.phi.jet(x)
    f, df, ddf, u, du, ddu = c.potential_jet(x)
    spec = c.spectrum(x)
    sk = spec.sigma(c.k)
    g = np.eye(c.n) / p**2
    hess_f = hessian_conformal(df, ddf, p, dp)
    hess_u = hessian_conformal(du, ddu, p, dp)
    res_f = hess_f - np.outer(df, df) / c.m - (sk - c.lam) * g
    res_u = hess_u + (u / c.m) * (sk - c.lam) * g
    # g-trace of a covariant 2-tensor is phi^2 times its Euclidean trace
    weighted_lap = p**2 * (np.trace(hess_f) - float(df @ df) / c.m)
    trace = weighted_lap - c.n * (sk - c.lam)
    return PointEvaluation(x, spec, sk, res_f, res_u, trace, u * p ** (-c.n))


def residual_f(c: SolitonCandidate, x) -> np.ndarray:
    """``Hess_g f - df(x)df/m - (sigma_k - lambda) g`` at x; zero iff soliton at x."""
    return evaluate(c, x).residual_f


def residual_u(c: SolitonCandidate, x) -> np.ndarray:
    """``Hess_g u + (u/m)(sigma_k - lambda) g`` at x, with ``u = exp(-f/m)``."""
    return evaluate(c, x).residual_u


def trace_check(c: SolitonCandidate, x) -> float:
    """``L(f) - n(sigma_k - lambda)`` where ``L(f) = Lap_g f - |df|_g^2 / m``."""
    return evaluate(c, x).trace_check


def weighted_density(c: SolitonCandidate, x) -> float:
    """Density of ``exp(-f/m) dv_g`` against Lebesgue measure: ``u * phi**-n``."""
    return evaluate(c, x).density


@dataclass
class CurvatureReport:
    point: np.ndarray
    eigenvalues: np.ndarray
    theta: float
    mu: float
    sigma_k: float
    residual_f_norm: float
    residual_u_norm: float
    trace_defect: float

    @classmethod
    def from_evaluation(cls, ev: PointEvaluation) -> "CurvatureReport":
        spec = ev.spectrum
        theta = spec.theta if spec.structured else math.nan
        mu = spec.mu if spec.structured else math.nan
        return cls(ev.point, spec.eigenvalues, theta, mu, ev.sigma_k,
                   float(np.linalg.norm(ev.residual_f)), float(np.linalg.norm(ev.residual_u)),
                   float(abs(ev.trace_check)))


def csv_header(n: int) -> list:
    return [f"x{i + 1}" for i in range(n)] + [
        "theta", "mu", "sigma_k", "residual_f_norm", "residual_u_norm", "trace_defect"]


@dataclass
class GridVerification:
    candidate: SolitonCandidate
    reports: list = field(default_factory=list)

    @property
    def max_residual_f(self) -> float:
        return max(r.residual_f_norm for r in self.reports)

    @property
    def max_residual_u(self) -> float:
        return max(r.residual_u_norm for r in self.reports)

    @property
    def max_trace_defect(self) -> float:
        return max(r.trace_defect for r in self.reports)

    @property
    def max_residual(self) -> float:
        return max(self.max_residual_f, self.max_residual_u, self.max_trace_defect)

    def passed(self, threshold: float = 1e-8) -> bool:
        return bool(self.max_residual <= threshold)

    def summary(self) -> dict:
        s = [r.sigma_k for r in self.reports]
        c = self.candidate
        return {
            "family": c.name,
            "n": c.n,
            "k": c.k,
            "m": c.m,
            "lambda": c.lam,
            "points": len(self.reports),
            "max_residual_f_norm": float(self.max_residual_f),
            "max_residual_u_norm": float(self.max_residual_u),
            "max_trace_defect": float(self.max_trace_defect),
            "sigma_k_min": float(min(s)),
            "sigma_k_max": float(max(s)),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        n = self.candidate.n
        buf.write(",".join(csv_header(n)) + "\n")
        for r in self.reports:
            row = [fmt(v) for v in r.point] + [fmt(r.theta), fmt(r.mu), fmt(r.sigma_k),
                                              fmt(r.residual_f_norm), fmt(r.residual_u_norm),
                                              fmt(r.trace_defect)]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        # floats printed through fmt so the summary round-trips exactly
        summary = {k: (float(fmt(v)) if isinstance(v, float) else v) for k, v in self.summary().items()}
        return json.dumps(summary, indent=2) + "\n"

    def write_csv(self, path):
        atomic_write(path, self.to_csv())

    def write_json(self, path):
        atomic_write(path, self.to_json())


def lattice(region, samples: int, n: int):
    """Lexicographic lattice over an axis-aligned box (last axis varies fastest).

    ``region`` is either one ``(lo, hi)`` pair applied to every axis or a
    sequence of n pairs.
    """
    if samples < 1:
        raise ValueError("samples per axis must be >= 1")
    region = list(region)
    if len(region) == 2 and np.isscalar(region[0]):
        region = [tuple(region)] * n
    if len(region) != n:
        raise ValueError(f"region needs {n} (lo, hi) pairs")
    axes = [np.linspace(lo, hi, samples) if samples > 1 else np.array([0.5 * (lo + hi)])
            for lo, hi in region]
    for coords in itertools.product(*axes):
        yield np.array(coords)


def verify_on_grid(c: SolitonCandidate, region: Sequence, samples: int = 5) -> GridVerification:
    """Evaluate both residual forms and the trace identity on a box lattice."""
    result = GridVerification(c)
    for x in lattice(region, samples, c.n):
        result.reports.append(CurvatureReport.from_evaluation(evaluate(c, x)))
    return result
