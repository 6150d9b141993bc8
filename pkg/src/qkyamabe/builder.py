"""
Translation-invariant soliton construction.

For ``phi = phi(xi)`` and ``u = u(xi)`` with ``xi = alpha . x`` the soliton
equation for ``g = phi**-2 delta`` and ``f = -m log u`` reduces to

    u'' + 2 u' phi' / phi = 0
    b_nk [k phi phi'' - (n/2) phi'^2] phi'^(2(k-1)) |alpha|^(2k)
        - m phi phi' (u'/u) |alpha|^2 = lambda

The second relation is solved for phi'' and the pair is integrated as a
first-order system in (phi, phi', u, u') with fixed-step RK4.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import comb, factorial
from typing import Optional

import numpy as np

from ._io import atomic_write, fmt
from .errors import SingularSlopeError
from .soliton import HalfSpace, SolitonCandidate
from .tensor_core import ConformalFactor, DirectionVector, ScalarField, sphere_sigma_k

SLOPE_FLOOR = 1e-10
POSITIVITY_FLOOR = 1e-12
DEFAULT_STEP = 1e-3

SINGULAR_SLOPE = "singular-slope"
BOUNDARY = "boundary"

FAMILIES = ("trivial", "1.2", "1.4", "1.5", "1.6", "3.1", "3.2", "3.3", "3.4", "3.5")

# (family, n, k, m, constants): at least two well-conditioned parameter sets per family
REFERENCE_CASES = [
    ("trivial", 3, 1, 1.0, {}),
    ("1.2", 4, 2, 1.0, {}),
    ("1.4", 3, 2, 1.0, {"k0": 1.0, "k1": 1.0}),
    ("1.4", 5, 3, -2.0, {"k0": 0.8, "k1": 2.0}),
    ("1.5", 3, 2, 2.0, {}),
    ("1.5", 4, 4, -1.0, {}),
    ("1.6", 3, 2, 1.0, {}),
    ("1.6", 4, 3, 0.5, {}),
    ("3.1", 3, 2, 1.0, {"k0": 1.5, "k1": 0.5}),
    ("3.1", 4, 1, 3.0, {"k0": 0.7, "k1": 2.0}),
    ("3.2", 3, 2, 1.0, {"k0": 1.3, "k1": 0.7}),
    ("3.2", 5, 4, -1.5, {"k0": 1.0, "k1": 1.0}),
    ("3.3", 3, 3, 1.0, {"k0": 1.2, "k1": 0.9}),
    ("3.3", 4, 2, 2.0, {"k0": 0.6, "k1": 1.4}),
    ("3.4", 4, 2, 1.0, {"k0": 0.5, "k1": 1.2}),
    ("3.4", 6, 3, -1.0, {"k0": 2.0, "k1": 0.8}),
    ("3.5", 3, 1, 1.0, {"k0": 1.0, "k1": 1.0, "k2": 1.0}),
    ("3.5", 4, 1, 2.0, {"k0": 0.5, "k1": 1.0, "k2": 0.7}),
    ("3.5", 3, 2, -1.0, {"k0": 1.0, "k1": 0.5, "k2": 1.0}),
]


def bnk(n: int, k: int) -> float:
    """(n-1)! / (k! (n-k)!) * (-1)^(k-1) / 2^(k-1), exact integer arithmetic first."""
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    num = factorial(n - 1) * (-1) ** (k - 1)
    den = factorial(k) * factorial(n - k) * 2 ** (k - 1)
    return num / den


@dataclass(frozen=True)
class ProfileState:
    xi: float
    phi: float
    dphi: float
    u: float
    du: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.dphi, self.u, self.du])

    @classmethod
    def from_array(cls, xi: float, y) -> "ProfileState":
        return cls(float(xi), float(y[0]), float(y[1]), float(y[2]), float(y[3]))


@dataclass(frozen=True)
class BuilderParams:
    n: int
    k: int
    m: float
    lam: float
    direction: DirectionVector
    step: float = DEFAULT_STEP
    xi_range: tuple = (1.0, 2.0)
    slope_floor: float = SLOPE_FLOOR
    positivity_floor: float = POSITIVITY_FLOOR

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= n = {self.n}, got {self.k}")
        if self.m == 0:
            raise ValueError("m must be nonzero")
        if self.step == 0:
            raise ValueError("step must be nonzero")
        if self.direction.n != self.n:
            raise ValueError("direction dimension does not match n")
        a, b = self.xi_range
        if not a < b:
            raise ValueError(f"empty xi range {self.xi_range}")


def second_derivatives(phi: float, dphi: float, u: float, du: float, p: BuilderParams):
    """``(phi'', u'')`` implied by the profile equations at one state.

    Raises :class:`SingularSlopeError` when k >= 2, phi' ~ 0 and lambda != 0.
    On that locus with lambda == 0 the curvature bracket is taken to vanish,
    i.e. ``phi'' = (n/2) phi'^2 / (k phi)``.
    """
    n, k, a2 = p.n, p.k, p.direction.norm_sq
    ddu = -2.0 * du * dphi / phi
    if k >= 2 and abs(dphi) < p.slope_floor:
        if p.lam != 0:
            raise SingularSlopeError(
                f"phi' = {dphi:.3e} below slope floor with lambda = {p.lam}: phi'' is undetermined")
        return 0.5 * n * dphi * dphi / (k * phi), ddu
    coef = bnk(n, k) * dphi ** (2 * (k - 1)) * a2**k
    bracket = (p.lam + p.m * phi * dphi * (du / u) * a2) / coef
    ddphi = (bracket + 0.5 * n * dphi * dphi) / (k * phi)
    return ddphi, ddu


def _rhs(y: np.ndarray, p: BuilderParams) -> np.ndarray:
    ddphi, ddu = second_derivatives(y[0], y[1], y[2], y[3], p)
    return np.array([y[1], ddphi, y[3], ddu])


def ode_step(s: ProfileState, p: BuilderParams, step: Optional[float] = None) -> ProfileState:
    """One classical RK4 step of size ``step`` (default ``p.step``; may be negative)."""
    h = p.step if step is None else step
    y = s.as_array()
    k1 = _rhs(y, p)
    k2 = _rhs(y + 0.5 * h * k1, p)
    k3 = _rhs(y + 0.5 * h * k2, p)
    k4 = _rhs(y + h * k3, p)
    return ProfileState.from_array(s.xi + h, y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


@dataclass
class ProfileTable:
    params: BuilderParams
    states: list = field(default_factory=list)
    event: Optional[str] = None
    event_xi: Optional[float] = None
    event_message: str = ""

    def __len__(self):
        return len(self.states)

    @property
    def xi(self) -> np.ndarray:
        return np.array([s.xi for s in self.states])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])

    def residuals(self):
        return table_residuals(self)

    def to_csv(self, with_residuals: bool = True) -> str:
        buf = io.StringIO()
        cols = ["xi", "phi", "dphi", "u", "du"] + (["r1", "r2"] if with_residuals else [])
        buf.write(",".join(cols) + "\n")
        r1, r2 = self.residuals() if with_residuals else (None, None)
        for i, s in enumerate(self.states):
            row = [s.xi, s.phi, s.dphi, s.u, s.du] + ([r1[i], r2[i]] if with_residuals else [])
            buf.write(",".join(fmt(v) for v in row) + "\n")
        if self.event is not None:
            buf.write(f"# event={self.event} xi={fmt(self.event_xi)}\n")
        return buf.getvalue()

    def write_csv(self, path, with_residuals: bool = True):
        atomic_write(path, self.to_csv(with_residuals))


def integrate_profile(p: BuilderParams, initial: ProfileState) -> ProfileTable:
    """Integrate from ``initial`` to the end of ``p.xi_range`` in the direction of ``p.step``.

    The step is shrunk uniformly (never grown) so that the last node lands
    exactly on the range end.  Boundary or singular-slope events stop the
    integration and are recorded on the table instead of raised.
    """
    start = initial.xi
    end = p.xi_range[1] if p.step > 0 else p.xi_range[0]
    table = ProfileTable(p, [initial])
    if not (initial.phi > p.positivity_floor and initial.u > p.positivity_floor):
        table.event, table.event_xi = BOUNDARY, start
        table.event_message = "initial state violates positivity"
        return table
    span = end - start
    if span * p.step <= 0:
        return table
    ratio = abs(span) / abs(p.step)
    nsteps = max(1, math.ceil(ratio - 1e-9 * ratio))
    h = span / nsteps
    s = initial
    for i in range(nsteps):
        try:
            nxt = ode_step(s, p, h)
        except SingularSlopeError as exc:
            table.event, table.event_xi, table.event_message = SINGULAR_SLOPE, s.xi, str(exc)
            break
        except (ZeroDivisionError, FloatingPointError) as exc:
            table.event, table.event_xi, table.event_message = BOUNDARY, s.xi, str(exc)
            break
        # land exactly on the grid node to keep tables reproducible
        nxt = replace(nxt, xi=start + (i + 1) * h)
        if not (nxt.phi > p.positivity_floor and nxt.u > p.positivity_floor) or not np.all(np.isfinite(nxt.as_array())):
            table.event, table.event_xi = BOUNDARY, nxt.xi
            table.event_message = "phi or u crossed the positivity floor"
            break
        table.states.append(nxt)
        s = nxt
    return table


def eq_residuals(s: ProfileState, p: BuilderParams, ddphi: Optional[float] = None,
                 ddu: Optional[float] = None):
    """``(r1, r2)`` of the two profile equations at a state.

    Second derivatives default to the values the integrator would use;
    pass them explicitly (closed forms or finite differences) for an
    independent check.
    """
    if ddphi is None or ddu is None:
        rphi, ru = second_derivatives(s.phi, s.dphi, s.u, s.du, p)
        ddphi = rphi if ddphi is None else ddphi
        ddu = ru if ddu is None else ddu
    n, k, a2 = p.n, p.k, p.direction.norm_sq
    r1 = ddu + 2.0 * s.du * s.dphi / s.phi
    curv = bnk(n, k) * (k * s.phi * ddphi - 0.5 * n * s.dphi**2) * s.dphi ** (2 * (k - 1)) * a2**k
    r2 = curv - p.m * s.phi * s.dphi * (s.du / s.u) * a2 - p.lam
    return r1, r2


_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_FORWARD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D1_FORWARD2 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def _fd4_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """4th-order derivative of uniformly spaced samples (one-sided at the ends)."""
    n = y.size
    d = np.empty(n)
    for i in range(2, n - 2):
        d[i] = _D1_CENTRAL @ y[i - 2:i + 3]
    d[0] = _D1_FORWARD @ y[:5]
    d[1] = _D1_FORWARD2 @ y[:5]
    d[-1] = -(_D1_FORWARD @ y[::-1][:5])
    d[-2] = -(_D1_FORWARD2 @ y[::-1][:5])
    return d / h


def table_residuals(table: ProfileTable):
    """``(r1, r2)`` arrays with phi'' and u'' differenced from the table's phi', u' columns.

    Uses 4th-order stencils on the uniform table; tables shorter than five
    rows fall back to the integrator's own second derivatives (NaN where
    those are undetermined).
    """
    p = table.params
    if len(table) < 5:
        pairs = []
        for s in table.states:
            try:
                pairs.append(eq_residuals(s, p))
            except SingularSlopeError:
                pairs.append((math.nan, math.nan))
        return np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])
    h = table.states[1].xi - table.states[0].xi
    ddphi = _fd4_derivative(table.column("dphi"), h)
    ddu = _fd4_derivative(table.column("du"), h)
    r1 = np.empty(len(table))
    r2 = np.empty(len(table))
    for i, s in enumerate(table.states):
        r1[i], r2[i] = eq_residuals(s, p, ddphi[i], ddu[i])
    return r1, r2


class ProfileEvaluator:
    """Dense evaluation of an integrated profile.

    State at an arbitrary xi comes from one RK4 sub-step off the nearest
    table node at or before it, so it carries the integrator's accuracy.
    """

    def __init__(self, table: ProfileTable):
        if table.event is not None:
            raise ValueError(f"profile integration stopped early ({table.event}) at xi={table.event_xi}")
        self.table = table
        self.params = table.params
        self._xi = table.xi
        self._state = lru_cache(maxsize=4096)(self._state_uncached)

    @property
    def xi_range(self):
        return float(self._xi.min()), float(self._xi.max())

    def _state_uncached(self, xi: float) -> ProfileState:
        order = np.argsort(self._xi)
        xs = self._xi[order]
        j = int(np.searchsorted(xs, xi, side="right")) - 1
        j = min(max(j, 0), len(xs) - 1)
        node = self.table.states[int(order[j])]
        if xi == node.xi:
            return node
        return ode_step(node, self.params, xi - node.xi)

    def jet(self, xi: float):
        """``(phi, phi', phi'', u, u', u'')`` at xi."""
        s = self._state(float(xi))
        ddphi, ddu = second_derivatives(s.phi, s.dphi, s.u, s.du, self.params)
        return s.phi, s.dphi, ddphi, s.u, s.du, ddu


def profile_candidate(table: ProfileTable, name: str = "profile") -> SolitonCandidate:
    """Soliton candidate on R^n whose phi and u are the integrated profile composed with xi."""
    ev = ProfileEvaluator(table)
    p = table.params
    d = p.direction
    a = d.alpha
    outer = np.outer(a, a)
    lo, hi = ev.xi_range

    def xi(x):
        return float(a @ x)

    phi = ConformalFactor(p.n, lambda x: ev.jet(xi(x))[0], lambda x: ev.jet(xi(x))[1] * a,
                          lambda x: ev.jet(xi(x))[2] * outer, name=f"{name}:phi")
    u = ScalarField(p.n, lambda x: ev.jet(xi(x))[3], lambda x: ev.jet(xi(x))[4] * a,
                    lambda x: ev.jet(xi(x))[5] * outer, name=f"{name}:u")
    domain = (HalfSpace(a, -lo), HalfSpace(-a, hi))
    box = _box_around(d, 0.5 * (lo + hi), 0.25 * (hi - lo))
    return SolitonCandidate(p.n, p.k, p.m, p.lam, phi, u=u, domain=domain, direction=d, name=name, box=box)


# ---------------------------------------------------------------------------
# closed-form families


def lambda_linear_profile(n: int, k: int, m: float, k0: float, alpha_norm_sq: float = 1.0) -> float:
    """Soliton constant for phi = k0 xi, u = k1 / xi (independent of k1)."""
    return -comb(n, k) * (-1) ** (k - 1) * (k0 * k0 * alpha_norm_sq / 2.0) ** k + m * k0 * k0 * alpha_norm_sq


def _box_around(d: DirectionVector, xi_center: float, xi_halfwidth: float):
    """Axis-aligned box on which xi = alpha . x stays within xi_center +- xi_halfwidth."""
    a = d.alpha
    center = a * (xi_center / d.norm_sq)
    w = min(0.5, xi_halfwidth / float(np.sum(np.abs(a))))
    return tuple((float(c - w), float(c + w)) for c in center)


def _log_field(n, d: DirectionVector, scale: float, sign: float, m: float, name: str) -> ScalarField:
    """f = -m log(scale * xi**sign) for xi = alpha . x > 0."""
    a = d.alpha
    outer = np.outer(a, a)
    return ScalarField(
        n,
        lambda x: -m * (math.log(scale) + sign * math.log(float(a @ x))),
        lambda x: (-m * sign / float(a @ x)) * a,
        lambda x: (m * sign / float(a @ x) ** 2) * outer,
        name=name,
    )


def _constant_field(n, c: float, name: str) -> ScalarField:
    return ScalarField(n, lambda x: c, lambda x: np.zeros(n), lambda x: np.zeros((n, n)), name=name)


def closed_form_family(family: str, n: int = 3, k: int = 1, m: float = 1.0, *, k0: float = 1.0,
                       k1: float = 1.0, k2: float = 1.0, alpha=None) -> SolitonCandidate:
    """Candidate for one of the closed-form families, lambda included.

    Family ids
    ----------
    ``trivial``  flat metric, constant potential, lambda = 0.
    ``1.2``      round sphere via stereographic phi = (1 + |x|^2)/2, constant potential, lambda = C(n,k)/2^k.
    ``1.4``      phi = k0 x_n, f = -m log(k1 / x_n) on x_n > 0.
    ``1.5``      flat, f = -m log(x_1 + ... + x_n), lambda = 0.
    ``1.6``      phi = x_1 + ... + x_n, f = -m log(1 / (x_1 + ... + x_n)).
    ``3.1``      phi = k0, f = -m log(k1 xi), lambda = 0.
    ``3.2``      phi = k0 xi, f = -m log(k1 / xi).
    ``3.3``      3.2 with alpha = (0, ..., 0, 1).
    ``3.4``      n = 2k, phi = k1 exp(xi), f = k0, lambda = 0.
    ``3.5``      n != 2k, phi = k2 (k1 k + (2k - n) xi)^(2k/(2k - n)), f = k0, lambda = 0.

    ``alpha`` defaults to the normalised diagonal direction for the 3.x families.
    The returned candidate carries a ``box`` inside its domain suitable for
    :func:`qkyamabe.soliton.verify_on_grid`.
    """
    family = str(family)
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    for label, v in (("k0", k0), ("k1", k1), ("k2", k2)):
        if not v > 0:
            raise ValueError(f"constant {label} must be positive, got {v}")
    name = f"family-{family}" if family != "trivial" else "trivial"
    unit_box = tuple((1.0, 2.0) for _ in range(n))

    if family == "trivial":
        return SolitonCandidate(n, k, m, 0.0, ConformalFactor.constant(n), f=_constant_field(n, k0, "f"),
                                direction=DirectionVector.unit(n), name=name, box=unit_box)

    if family == "1.2":
        phi = ConformalFactor(n, lambda x: 0.5 * (1.0 + float(x @ x)), lambda x: np.array(x, dtype=float),
                              lambda x: np.eye(n), name="stereographic")
        box = tuple((-1.0, 1.0) for _ in range(n))
        return SolitonCandidate(n, k, m, sphere_sigma_k(n, k), phi, f=_constant_field(n, k0, "f"),
                                name=name, box=box)

    if family in ("1.4", "3.3"):
        d = DirectionVector.unit(n)
        lam = lambda_linear_profile(n, k, m, k0)
        phi = ConformalFactor.profile(d, lambda t: k0 * t, lambda t: k0, lambda t: 0.0, name="k0*x_n")
        f = _log_field(n, d, k1, -1.0, m, "f")
        return SolitonCandidate(n, k, m, lam, phi, f=f, domain=(HalfSpace(d.alpha),), direction=d,
                                name=name, box=_box_around(d, 1.5, 0.5))

    if family == "1.5":
        d = DirectionVector.diagonal(n)
        f = _log_field(n, d, 1.0, 1.0, m, "f")
        return SolitonCandidate(n, k, m, 0.0, ConformalFactor.constant(n), f=f, domain=(HalfSpace(d.alpha),),
                                direction=d, name=name, box=unit_box)

    if family == "1.6":
        d = DirectionVector.diagonal(n)
        lam = -comb(n, k) * (-1) ** (k - 1) * (n / 2.0) ** k + m * n
        phi = ConformalFactor.profile(d, lambda t: t, lambda t: 1.0, lambda t: 0.0, name="sum(x)")
        f = _log_field(n, d, 1.0, -1.0, m, "f")
        return SolitonCandidate(n, k, m, lam, phi, f=f, domain=(HalfSpace(d.alpha),), direction=d,
                                name=name, box=unit_box)

    d = DirectionVector(alpha) if alpha is not None else DirectionVector.diagonal(n, normalize=True)
    if d.n != n:
        raise ValueError(f"alpha has {d.n} components, expected {n}")
    a2 = d.norm_sq

    if family == "3.1":
        f = _log_field(n, d, k1, 1.0, m, "f")
        return SolitonCandidate(n, k, m, 0.0, ConformalFactor.constant(n, k0), f=f,
                                domain=(HalfSpace(d.alpha),), direction=d, name=name,
                                box=_box_around(d, 1.5, 1.0))

    if family == "3.2":
        lam = lambda_linear_profile(n, k, m, k0, a2)
        phi = ConformalFactor.profile(d, lambda t: k0 * t, lambda t: k0, lambda t: 0.0, name="k0*xi")
        f = _log_field(n, d, k1, -1.0, m, "f")
        return SolitonCandidate(n, k, m, lam, phi, f=f, domain=(HalfSpace(d.alpha),), direction=d,
                                name=name, box=_box_around(d, 1.5, 1.0))

    if family == "3.4":
        if n != 2 * k:
            raise ValueError(f"family 3.4 requires n = 2k, got n={n}, k={k}")
        phi = ConformalFactor.profile(d, lambda t: k1 * math.exp(t), lambda t: k1 * math.exp(t),
                                      lambda t: k1 * math.exp(t), name="k1*exp(xi)")
        return SolitonCandidate(n, k, m, 0.0, phi, f=_constant_field(n, k0, "f"), direction=d, name=name,
                                box=tuple((-0.5, 0.5) for _ in range(n)))

    # family 3.5
    if n == 2 * k:
        raise ValueError("family 3.5 requires n != 2k (the exponent 2k/(2k-n) is singular)")
    c = 2 * k - n
    expo = 2.0 * k / c

    def base(t):
        return k1 * k + c * t

    phi = ConformalFactor.profile(
        d,
        lambda t: k2 * base(t) ** expo,
        lambda t: k2 * expo * c * base(t) ** (expo - 1.0),
        lambda t: k2 * expo * (expo - 1.0) * c * c * base(t) ** (expo - 2.0),
        name="power-profile",
    )
    # keep base(xi) within [k1 k / 2, 3 k1 k / 2] on the box
    box = _box_around(d, 0.0, 0.5 * k1 * k / abs(c))
    return SolitonCandidate(n, k, m, 0.0, phi, f=_constant_field(n, k0, "f"),
                            domain=(HalfSpace(c * d.alpha, k1 * k),), direction=d, name=name, box=box)


def closed_form_profile(family: str, n: int, k: int, m: float, *, k0: float = 1.0, k1: float = 1.0,
                        k2: float = 1.0):
    """Exact 1-D profile ``xi -> (phi, phi', phi'', u, u', u'')`` for the 3.x families.

    u is reported up to the family's constant factor (f constant gives u = exp(-k0/m)).
    """
    family = str(family)
    if family == "3.1":
        return lambda t: (k0, 0.0, 0.0, k1 * t, k1, 0.0)
    if family in ("3.2", "3.3", "1.4"):
        return lambda t: (k0 * t, k0, 0.0, k1 / t, -k1 / t**2, 2.0 * k1 / t**3)
    uc = math.exp(-k0 / m)
    if family == "3.4":
        return lambda t: (k1 * math.exp(t), k1 * math.exp(t), k1 * math.exp(t), uc, 0.0, 0.0)
    if family == "3.5":
        c = 2 * k - n
        e = 2.0 * k / c

        def prof(t):
            b = k1 * k + c * t
            return (k2 * b**e, k2 * e * c * b ** (e - 1), k2 * e * (e - 1) * c * c * b ** (e - 2), uc, 0.0, 0.0)
        return prof
    raise ValueError(f"no 1-D profile for family {family!r}")
