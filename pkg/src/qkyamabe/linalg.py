"""Small dense symmetric eigenvalue solver (cyclic Jacobi rotations)."""
import numpy as np


def _off_norm(a):
    # summed directly; total minus diagonal cancels down to sqrt(eps) * |a|
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigenvalues(matrix, tol=1e-13, max_sweeps=50):
    """Eigenvalues of a real symmetric matrix, sorted ascending.

    Cyclic Jacobi: sweep over all (p, q) pairs annihilating the off-diagonal
    entry with a plane rotation until the off-diagonal Frobenius norm drops
    below ``tol * ||M||_F``.  Intended for n <= 16.

    Parameters
    ----------
    matrix : (n, n) array_like
        Symmetric input; only the symmetric part is used.
    tol : float
        Relative off-diagonal tolerance.
    max_sweeps : int
        Sweep cap; Jacobi converges quadratically so ~10 sweeps is typical.

    Returns
    -------
    numpy.ndarray
        Eigenvalues in ascending order.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.sort(np.diag(a).copy())
    target = tol * scale
    for _ in range(max_sweeps):
        if _off_norm(a) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # rotation angle from tan(2t) = 2 a_pq / (a_qq - a_pp), smaller root
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    else:
        off = _off_norm(a)
        if off > target:
            raise ArithmeticError(f"Jacobi did not converge: off-diagonal norm {off:.3e}")
    return np.sort(np.diag(a).copy())
