"""Schouten spectra and sigma_k for a few conformally flat metrics."""
import numpy as np

from qkyamabe import tensor_core as tc

# round sphere: every Schouten eigenvalue is 1/2
for n in range(3, 7):
    row = [tc.sigma_k_two_eig(0.5, 0.5, n, k) for k in range(1, n + 1)]
    print(n, np.round(row, 4))

# upper half space phi = x_n gives the hyperbolic spectrum -1/2
phi = tc.ConformalFactor.profile(tc.DirectionVector.unit(3), lambda t: t, lambda t: 1.0, lambda t: 0.0)
x = np.array([0.3, -1.0, 2.0])
print("half space:", tc.schouten_spectrum(phi, x).eigenvalues)
print("R =", tc.conformal_scalar(phi, x))  # -n(n-1)

# a non-symmetric factor goes through the Jacobi path
phi = tc.ConformalFactor(3, lambda x: 2 + x[0] ** 2 + x[0] * x[1])
spec = tc.schouten_spectrum(phi, np.array([0.4, 0.1, 0.0]))
print("generic eigenvalues:", spec.eigenvalues)
print("sigma_2:", spec.sigma(2))

# finite differences vs analytic derivatives
g = tc.ConformalFactor(3, lambda x: np.exp(x.sum()), lambda x: np.exp(x.sum()) * np.ones(3),
                       lambda x: np.exp(x.sum()) * np.ones((3, 3)))
fd = g.with_mode(tc.FINITE_DIFFERENCE)
print("FD Hessian error:", np.abs(g.hess(x) - fd.hess(x)).max())
