"""Brute-force Riemannian curvature of g = phi^-2 delta with sympy, for use as a test oracle.

Nothing here uses the conformal-change formulas: Christoffel symbols,
Riemann and Ricci tensors come straight from the metric components.
"""
import sympy as sp


def symbols(n):
    return sp.symbols(f"x1:{n + 1}", real=True)


def christoffel(g, ginv, xs):
    n = len(xs)
    return [[[sp.Rational(1, 2) * sum(ginv[k, l] * (sp.diff(g[l, i], xs[j]) + sp.diff(g[l, j], xs[i])
                                                      - sp.diff(g[i, j], xs[l])) for l in range(n))
              for j in range(n)] for i in range(n)] for k in range(n)]


def curvature(phi_expr, xs):
    """Return (Ric, R, Schouten mixed endomorphism, Gamma) as sympy objects."""
    n = len(xs)
    g = sp.eye(n) * phi_expr ** -2
    ginv = sp.eye(n) * phi_expr ** 2
    G = christoffel(g, ginv, xs)
    # Ric_bd = d_a G^a_bd - d_d G^a_ba + G^a_ae G^e_bd - G^a_de G^e_ba
    ric = sp.zeros(n, n)
    for b in range(n):
        for d in range(n):
            s = 0
            for a in range(n):
                s += sp.diff(G[a][b][d], xs[a]) - sp.diff(G[a][b][a], xs[d])
                for e in range(n):
                    s += G[a][a][e] * G[e][b][d] - G[a][d][e] * G[e][b][a]
            ric[b, d] = s
    R = sum(ginv[i, j] * ric[i, j] for i in range(n) for j in range(n))
    A = (ric - R / (2 * (n - 1)) * g) / (n - 2)
    return ric, R, ginv * A, G


def hessian(u_expr, G, xs):
    n = len(xs)
    return sp.Matrix(n, n, lambda i, j: sp.diff(u_expr, xs[i], xs[j])
                     - sum(G[k][i][j] * sp.diff(u_expr, xs[k]) for k in range(n)))
