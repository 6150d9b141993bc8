"""
Discrete flat torus [0, 2pi)^n for Hodge decomposition experiments.

Fields live on a periodic N^n lattice.  Scalars have shape ``(N,)*n``;
vector fields have shape ``(n,) + (N,)*n`` with the component axis first.
All differences are 2nd-order central, so ``div`` is exactly minus the
adjoint of ``grad`` under the plain ``h^n`` sum and the discrete Laplacian
is ``div(grad(.))``.  That wide stencil annihilates every field that only
depends on index parities (2^n modes, constants included); the Poisson
solve works on the complement of those modes.
"""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._io import atomic_write, fmt
from .errors import SolvabilityError, SolverError

BINARY_MAGIC = b"QKTF"


@dataclass(frozen=True)
class TorusGrid:
    n: int
    N: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"torus dimension must be 2 or 3, got {self.n}")
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError(f"resolution must be a power of two >= 16, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * math.pi / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def coords(self):
        """Meshgrid of coordinates, ``ij`` indexing."""
        x = np.arange(self.N) * self.h
        return np.meshgrid(*([x] * self.n), indexing="ij")

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_volume)


@dataclass
class TorusField:
    """Samples of a scalar or vector field on a :class:`TorusGrid`."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        g = self.grid
        if self.values.shape not in (g.shape, (g.n,) + g.shape):
            raise ValueError(f"field shape {self.values.shape} does not fit grid {g.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == self.grid.n + 1

    @property
    def components(self) -> int:
        return self.grid.n if self.is_vector else 1

    def sup_norm(self) -> float:
        if self.is_vector:
            return float(np.sqrt(np.max(np.sum(self.values**2, axis=0))))
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.integrate(self.values**2))

    def integral(self):
        if self.is_vector:
            return np.array([self.grid.integrate(c) for c in self.values])
        return self.grid.integrate(self.values)

    def norm_sq(self) -> np.ndarray:
        """Pointwise |X|^2 of a vector field."""
        return np.sum(self.values**2, axis=0)

    def __add__(self, other: "TorusField") -> "TorusField":
        _same_grid(self, other)
        return TorusField(self.grid, self.values + other.values)

    def __sub__(self, other: "TorusField") -> "TorusField":
        _same_grid(self, other)
        return TorusField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "TorusField":
        return TorusField(self.grid, c * self.values)

    __rmul__ = __mul__


def _same_grid(a: TorusField, b: TorusField):
    if a.grid != b.grid or a.values.shape != b.values.shape:
        raise ValueError("fields live on different grids or have different ranks")


def _d(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)


def grad(s: TorusField) -> TorusField:
    """Central-difference gradient of a scalar field."""
    if s.is_vector:
        raise ValueError("grad expects a scalar field")
    g = s.grid
    return TorusField(g, np.stack([_d(s.values, i, g.h) for i in range(g.n)]))


def div(X: TorusField) -> TorusField:
    """Central-difference divergence of a vector field."""
    if not X.is_vector:
        raise ValueError("div expects a vector field")
    g = X.grid
    return TorusField(g, sum(_d(X.values[i], i, g.h) for i in range(g.n)))


def hessian(s: TorusField) -> np.ndarray:
    """Symmetrised Hessian ``(n, n) + grid.shape`` by differencing the gradient."""
    g = s.grid
    first = grad(s).values
    H = np.empty((g.n, g.n) + g.shape)
    for i in range(g.n):
        for j in range(g.n):
            H[i, j] = _d(first[j], i, g.h)
    return 0.5 * (H + H.transpose(1, 0, *range(2, H.ndim)))


def laplacian(s: TorusField) -> TorusField:
    return div(grad(s))


def _parity_means(values: np.ndarray, n: int) -> dict:
    """Mean over each parity sub-lattice (the kernel of the central-difference gradient)."""
    out = {}
    for bits in np.ndindex(*(2,) * n):
        sl = tuple(slice(b, None, 2) for b in bits)
        out[bits] = float(np.mean(values[sl]))
    return out


def _remove_parity_modes(values: np.ndarray, n: int) -> np.ndarray:
    v = values.copy()
    for bits, mean in _parity_means(values, n).items():
        v[tuple(slice(b, None, 2) for b in bits)] -= mean
    return v


def poisson_solve(rho: TorusField, rtol: float = 1e-10, maxiter: Optional[int] = None) -> TorusField:
    """Solve ``div(grad(h)) = rho`` on the torus with mean-zero h.

    Jacobi-preconditioned conjugate gradients on ``-div grad``.  The right
    side must have zero mean (and no component on the other parity modes,
    which is automatic when ``rho`` is itself a divergence).  The returned h
    is orthogonal to all parity modes, so in particular has zero mean.

    Raises
    ------
    SolvabilityError
        ``rho`` has a component in the kernel above ``1e-10 * max(1, |rho|_inf)``.
    SolverError
        CG did not reach ``rtol`` within ``maxiter`` (default ``10 N^(n/2)``).
    """
    if rho.is_vector:
        raise ValueError("poisson_solve expects a scalar field")
    g = rho.grid
    b = rho.values
    scale = max(1.0, float(np.max(np.abs(b))))
    for bits, mean in _parity_means(b, g.n).items():
        if abs(mean) > 1e-10 * scale:
            what = "mean" if not any(bits) else f"parity mode {bits}"
            raise SolvabilityError(f"right-hand side has nonzero {what} ({mean:.3e}); no periodic solution")
    b = _remove_parity_modes(b, g.n)
    if maxiter is None:
        maxiter = int(10 * g.N ** (g.n / 2))
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return TorusField(g, np.zeros(g.shape))

    def apply(v):
        return -laplacian(TorusField(g, v)).values

    inv_diag = 2.0 * g.h**2 / g.n  # diagonal of -div grad is n / (2 h^2)
    # -div grad h = -rho keeps the operator positive semidefinite
    rhs = -b
    x = np.zeros(g.shape)
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(np.vdot(r, z))
    rel = 1.0
    for _ in range(maxiter):
        Ap = apply(p)
        alpha = rz / float(np.vdot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= rtol:
            break
        z = inv_diag * r
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        raise SolverError(f"CG stopped after {maxiter} iterations at relative residual {rel:.3e}", rel)
    return TorusField(g, _remove_parity_modes(x, g.n))


def hodge_decompose(X: TorusField, rtol: float = 1e-10):
    """Split ``X = grad(h) + Y`` with ``div(Y) = 0`` (to solver tolerance)."""
    h = poisson_solve(div(X), rtol=rtol)
    return h, X - grad(h)


def t8_criterion(X: TorusField, rtol: float = 1e-10):
    """``(I1, I2) = (integral <grad h, X>, integral |grad h|^2)``.

    The decomposition is L2-orthogonal, so the two agree up to solver
    tolerance.
    """
    h, _ = hodge_decompose(X, rtol)
    gh = grad(h).values
    g = X.grid
    return g.integrate(np.sum(gh * X.values, axis=0)), g.integrate(np.sum(gh * gh, axis=0))


def t2_terms(X: TorusField, m: float, lam: float, rtol: float = 1e-10) -> dict:
    """Integrated summands of the gradient-ness criterion on the flat torus.

    Ricci vanishes and sigma_k = 0 there, so ``sigma_k - lambda = -lambda``
    and the Ricci term is dropped.
    """
    if m == 0:
        raise ValueError("m must be nonzero")
    g = X.grid
    n = g.n
    h, _ = hodge_decompose(X, rtol)
    H = hessian(h)
    gh = grad(h).values
    Xv = X.values
    x2 = np.sum(Xv * Xv, axis=0)
    gh2 = np.sum(gh * gh, axis=0)
    hxx = np.einsum("ij...,i...,j...->...", H, Xv, Xv)
    hgg = np.einsum("ij...,i...,j...->...", H, gh, gh)
    shift = -lam
    return {
        "hess_XX": g.integrate(hxx) / m,
        "hess_dhdh": -2.0 * g.integrate(hgg) / m,
        "dh4": g.integrate(gh2 * gh2) / m**2,
        "X2": n / (2.0 * m) * shift * g.integrate(x2),
        "grad_h2": 2.0 / m * shift * g.integrate(gh2),
        "X4": 1.5 / m**2 * g.integrate(x2 * x2),
    }


def t2_integrand(X: TorusField, m: float, lam: float, rtol: float = 1e-10) -> float:
    """Total value of the flat-torus gradient-ness integral (see :func:`t2_terms`)."""
    return float(sum(t2_terms(X, m, lam, rtol).values()))


def div_norm_identity(X: TorusField) -> float:
    """``integral div(|X|^2 X)``; vanishes by periodic telescoping."""
    return div(TorusField(X.grid, X.norm_sq() * X.values)).integral()


# ---------------------------------------------------------------------------
# test fields


def sine(grid: TorusGrid) -> TorusField:
    return TorusField(grid, np.sin(grid.coords()[0]))


def grad_sine(grid: TorusGrid) -> TorusField:
    """Sampled exact gradient of sin(x1): (cos x1, 0, ...)."""
    x = grid.coords()
    v = np.zeros((grid.n,) + grid.shape)
    v[0] = np.cos(x[0])
    return TorusField(grid, v)


def discrete_grad_sine(grid: TorusGrid) -> TorusField:
    """Central-difference gradient of sin(x1) (an exact discrete gradient)."""
    return grad(sine(grid))


def div_free(grid: TorusGrid) -> TorusField:
    """(-sin x2, sin x1, 0): each component is constant along its own axis."""
    x = grid.coords()
    v = np.zeros((grid.n,) + grid.shape)
    v[0] = -np.sin(x[1])
    v[1] = np.sin(x[0])
    return TorusField(grid, v)


def mixed(grid: TorusGrid) -> TorusField:
    return grad_sine(grid) + div_free(grid)


def random_trig_field(grid: TorusGrid, rng: np.random.Generator, max_freq: int = 3,
                      terms: int = 6) -> TorusField:
    """Vector field whose components are random trigonometric polynomials."""
    x = grid.coords()
    v = np.zeros((grid.n,) + grid.shape)
    for c in range(grid.n):
        for _ in range(terms):
            freq = rng.integers(-max_freq, max_freq + 1, size=grid.n)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            amp = rng.normal()
            v[c] += amp * np.cos(sum(int(f) * xi for f, xi in zip(freq, x)) + phase)
    return TorusField(grid, v)


NAMED_FIELDS = {
    "grad-sine": grad_sine,
    "discrete-grad-sine": discrete_grad_sine,
    "div-free": div_free,
    "mixed": mixed,
}


def named_field(name: str, grid: TorusGrid) -> TorusField:
    try:
        return NAMED_FIELDS[name](grid)
    except KeyError:
        raise ValueError(f"unknown field {name!r}; expected one of {', '.join(NAMED_FIELDS)}") from None


# ---------------------------------------------------------------------------
# import / export


def _point_major(f: TorusField) -> np.ndarray:
    """(N^n, components) array in lexicographic point order (last axis fastest)."""
    if f.is_vector:
        return f.values.reshape(f.grid.n, -1).T
    return f.values.reshape(-1, 1)


def _from_point_major(grid: TorusGrid, data: np.ndarray) -> TorusField:
    if data.shape[1] == 1:
        return TorusField(grid, data[:, 0].reshape(grid.shape))
    if data.shape[1] != grid.n:
        raise ValueError(f"vector field needs {grid.n} components, got {data.shape[1]}")
    return TorusField(grid, data.T.reshape((grid.n,) + grid.shape))


def field_to_csv(f: TorusField) -> str:
    """CSV text: ``# n=.. N=.. components=..`` line, header, one row per lattice point."""
    data = _point_major(f)
    buf = io.StringIO()
    buf.write(f"# n={f.grid.n} N={f.grid.N} components={data.shape[1]}\n")
    buf.write(",".join(["index"] + [f"c{j + 1}" for j in range(data.shape[1])]) + "\n")
    for i, row in enumerate(data):
        buf.write(",".join([str(i)] + [fmt(v) for v in row]) + "\n")
    return buf.getvalue()


def field_from_csv(text: str) -> TorusField:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing '# n=.. N=.. components=..' metadata line")
    meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    try:
        grid = TorusGrid(int(meta["n"]), int(meta["N"]))
        comps = int(meta["components"])
    except KeyError as exc:
        raise ValueError(f"metadata line lacks {exc}") from None
    rows = lines[2:]
    if len(rows) != grid.N**grid.n:
        raise ValueError(f"expected {grid.N ** grid.n} rows, got {len(rows)}")
    data = np.empty((len(rows), comps))
    for i, ln in enumerate(rows):
        parts = ln.split(",")
        if len(parts) != comps + 1 or int(parts[0]) != i:
            raise ValueError(f"malformed row {i}: {ln!r}")
        data[i] = [float(p) for p in parts[1:]]
    return _from_point_major(grid, data)


def field_to_bytes(f: TorusField) -> bytes:
    """Binary dump: magic ``QKTF``, uint32 n, N, components (LE), then float64 LE point-major."""
    data = _point_major(f)
    header = BINARY_MAGIC + struct.pack("<III", f.grid.n, f.grid.N, data.shape[1])
    return header + np.ascontiguousarray(data, dtype="<f8").tobytes()


def field_from_bytes(blob: bytes) -> TorusField:
    if len(blob) < 16 or blob[:4] != BINARY_MAGIC:
        raise ValueError("not a torus field dump (bad magic)")
    n, N, comps = struct.unpack("<III", blob[4:16])
    grid = TorusGrid(n, N)
    count = N**n * comps
    if len(blob) != 16 + 8 * count:
        raise ValueError(f"expected {16 + 8 * count} bytes, got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f8", offset=16).reshape(N**n, comps)
    return _from_point_major(grid, data.astype(float))


def save_field(f: TorusField, path):
    path = str(path)
    if path.endswith(".csv"):
        atomic_write(path, field_to_csv(f))
    else:
        atomic_write(path, field_to_bytes(f), mode="wb")


def load_field(path) -> TorusField:
    path = str(path)
    if path.endswith(".csv"):
        with open(path) as fh:
            return field_from_csv(fh.read())
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())
