"""Hodge decomposition on the discrete flat torus and the integral criteria."""
import math

import numpy as np

from qkyamabe import torus

g = torus.TorusGrid(2, 64)
X = torus.mixed(g)  # grad(sin x1) + (-sin x2, sin x1)
h, Y = torus.hodge_decompose(X)
print("|div Y|_inf:", torus.div(Y).sup_norm())
print("gradient part error:", np.abs(torus.grad(h).values - torus.grad_sine(g).values).max())

# orthogonality makes the two integrals agree
I1, I2 = torus.t8_criterion(X)
print(f"I1 = {I1:.12f}, I2 = {I2:.12f}, 2 pi^2 = {2 * math.pi ** 2:.12f}")

# second order convergence of the discrete gradient field
for N in (32, 64, 128):
    _, I2 = torus.t8_criterion(torus.discrete_grad_sine(torus.TorusGrid(2, N)))
    print(N, abs(I2 - 2 * math.pi**2))

print("t2 integrand, grad sine:", torus.t2_integrand(torus.grad_sine(g), 1.0, 0.0), 15 * math.pi**2 / 4)

rng = np.random.default_rng(0)
Z = torus.random_trig_field(g, rng)
print("div closure:", torus.div_norm_identity(Z), torus.div(Z).integral())
