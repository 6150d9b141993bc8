import itertools
import math
from math import comb

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import curvature_oracle as oracle
from qkyamabe.errors import DomainError
from qkyamabe.linalg import jacobi_eigenvalues
from qkyamabe.tensor_core import (
    FINITE_DIFFERENCE,
    ConformalFactor,
    DirectionVector,
    SchoutenSpectrum,
    conformal_ricci,
    conformal_scalar,
    elem_sym,
    hessian_conformal,
    schouten_eigs_translation,
    schouten_matrix,
    schouten_spectrum,
    sigma_k_two_eig,
)


def brute_elem_sym(values, k):
    return sum(math.prod(c) for c in itertools.combinations(values, k))


finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


# --- elementary symmetric functions -----------------------------------------

def test_elem_sym_round_sphere_value():
    assert elem_sym([0.5] * 4, 2) == pytest.approx(1.5, rel=1e-15)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_elem_sym_zero_spectrum(k):
    assert elem_sym([0.0, 0.0, 0.0], k) == 0.0


def test_elem_sym_subset_sum():
    assert elem_sym([1, 2, 3], 2) == 11.0
    assert elem_sym([1, 2, 3], 3) == 6.0


@pytest.mark.parametrize("k", [0, 4, -1])
def test_elem_sym_rejects_k_out_of_range(k):
    with pytest.raises(ValueError):
        elem_sym([1.0, 2.0, 3.0], k)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=8), st.data())
def test_elem_sym_matches_brute_force(values, data):
    k = data.draw(st.integers(1, len(values)))
    expected = brute_elem_sym(values, k)
    scale = brute_elem_sym([abs(v) for v in values], k)
    assert abs(elem_sym(values, k) - expected) <= 1e-12 * max(1.0, scale)


def test_elem_sym_integer_inputs_exact():
    vals = [3, -1, 4, 1, -5, 9, 2, 6]
    for k in range(1, 9):
        assert elem_sym(vals, k) == brute_elem_sym(vals, k)


# --- two-eigenvalue formula ----------------------------------------------------

def test_sigma_k_two_eig_hyperbolic_value():
    assert sigma_k_two_eig(-0.5, -0.5, 3, 2) == pytest.approx(0.75, rel=1e-15)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_sigma_k_two_eig_vanishes_for_zero_theta(k):
    assert sigma_k_two_eig(0.0, 7.3, 5, k) == 0.0


@settings(max_examples=300, deadline=None)
@given(finite, finite, st.integers(3, 10), st.data())
def test_sigma_k_two_eig_matches_elem_sym(theta, mu, n, data):
    k = data.draw(st.integers(1, n))
    direct = elem_sym([theta] * (n - 1) + [mu], k)
    scale = brute_elem_sym([abs(theta)] * (n - 1) + [abs(mu)], k) if n <= 8 else comb(n, k) * max(abs(theta), abs(mu), 1) ** k
    assert abs(sigma_k_two_eig(theta, mu, n, k) - direct) <= 1e-12 * max(1.0, scale)


def test_sigma_k_two_eig_range_checks():
    with pytest.raises(ValueError):
        sigma_k_two_eig(1.0, 1.0, 2, 1)
    with pytest.raises(ValueError):
        sigma_k_two_eig(1.0, 1.0, 3, 4)


# --- spectrum / direction types -----------------------------------------------

def test_structured_spectrum_layout():
    s = SchoutenSpectrum.from_two(2.0, -1.0, 4)
    assert list(s.eigenvalues) == [-1.0, 2.0, 2.0, 2.0]
    assert s.theta == 2.0 and s.mu == -1.0
    assert s.sigma(2) == pytest.approx(elem_sym([2, 2, 2, -1], 2))


def test_direction_vector():
    d = DirectionVector([1.0, -2.0, 2.0])
    assert d.norm_sq == 9.0
    with pytest.raises(ValueError):
        DirectionVector([0.0, 0.0, 0.0])


# --- Jacobi eigensolver ----------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
def test_jacobi_matches_lapack(rng, n):
    a = rng.normal(size=(n, n))
    a = a + a.T
    ev = jacobi_eigenvalues(a)
    assert np.all(np.diff(ev) >= 0)
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(a), atol=1e-12 * np.linalg.norm(a))


def test_jacobi_repeated_eigenvalues():
    q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(6, 6)))
    a = q @ np.diag([1.0, 1.0, 1.0, 1.0, 1.0, -4.0]) @ q.T
    np.testing.assert_allclose(jacobi_eigenvalues(a), [-4, 1, 1, 1, 1, 1], atol=1e-13)


# --- conformal factor and derivative modes ---------------------------------------

def poly_factor(n=3):
    # phi = 2 + x1^2 + x1 x2 - 0.3 x3^3 + x2 x3
    def val(x):
        return 2 + x[0] ** 2 + x[0] * x[1] - 0.3 * x[2] ** 3 + x[1] * x[2]

    def grad(x):
        return np.array([2 * x[0] + x[1], x[0] + x[2], -0.9 * x[2] ** 2 + x[1]])

    def hess(x):
        return np.array([[2.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, -1.8 * x[2]]])

    return ConformalFactor(n, val, grad, hess, name="poly")


def exp_factor():
    a = np.array([0.3, -0.2, 0.5])
    return ConformalFactor(3, lambda x: math.exp(a @ x), lambda x: math.exp(a @ x) * a,
                           lambda x: math.exp(a @ x) * np.outer(a, a), name="exp")


@pytest.mark.parametrize("factory", [poly_factor, exp_factor])
def test_fd_mode_agrees_with_analytic(factory):
    phi = factory()
    fd = phi.with_mode(FINITE_DIFFERENCE)
    h = fd.h
    for x in ([0.3, 0.2, 0.1], [0.5, -0.4, 0.7], [0.1, 0.9, -0.3]):
        g, gfd = phi.grad(x), fd.grad(x)
        H, Hfd = phi.hess(x), fd.hess(x)
        assert np.max(np.abs(g - gfd)) <= 10 * h**2 * max(1.0, np.max(np.abs(g)))
        assert np.max(np.abs(H - Hfd)) <= 10 * h**2 * max(1.0, np.max(np.abs(H)))


def test_missing_derivatives_fall_back_to_fd():
    phi = ConformalFactor(3, lambda x: 1.0 + x @ x)
    assert phi.derivative_mode == FINITE_DIFFERENCE
    np.testing.assert_allclose(phi.grad([1.0, 0.5, 0.0]), [2.0, 1.0, 0.0], atol=1e-8)


def test_nonpositive_factor_is_domain_error():
    phi = ConformalFactor(3, lambda x: x[2], lambda x: np.array([0, 0, 1.0]), lambda x: np.zeros((3, 3)))
    with pytest.raises(DomainError):
        phi([0.0, 0.0, -1.0])
    with pytest.raises(DomainError):
        schouten_matrix(phi, [1.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        conformal_scalar(phi, [1.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        conformal_ricci(phi, [1.0, 1.0, 0.0])


def test_conformal_factor_rejects_low_dimension():
    with pytest.raises(ValueError):
        ConformalFactor.constant(2)


# --- Schouten, Ricci, scalar: closed forms ---------------------------------------

def linear_factor(n, k0, alpha):
    d = DirectionVector(alpha)
    return ConformalFactor.profile(d, lambda t: k0 * t, lambda t: k0, lambda t: 0.0)


def test_schouten_of_constant_factor_vanishes():
    phi = ConformalFactor.constant(4, 2.5)
    assert np.all(schouten_matrix(phi, np.ones(4)) == 0.0)
    assert conformal_scalar(phi, np.ones(4)) == 0.0
    assert np.all(conformal_ricci(phi, np.ones(4)) == 0.0)


@pytest.mark.parametrize("k0", [0.5, 1.0, 2.0])
def test_schouten_half_space(k0):
    phi = linear_factor(3, k0, [0, 0, 1.0])
    np.testing.assert_allclose(schouten_matrix(phi, [0.3, -1.0, 2.0]), -0.5 * k0**2 * np.eye(3), atol=1e-15)
    assert conformal_scalar(phi, [0.0, 0.0, 2.0]) == pytest.approx(-6 * k0**2, rel=1e-14)


def test_schouten_linear_profile_general_vs_structured(rng):
    alpha = rng.normal(size=4)
    alpha /= np.linalg.norm(alpha)
    phi = linear_factor(4, 1.7, alpha)
    x = alpha * 2.0
    general = schouten_spectrum(phi, x).eigenvalues
    structured = schouten_eigs_translation(phi(x), 1.7, 0.0, DirectionVector(alpha)).eigenvalues
    np.testing.assert_allclose(general, structured, atol=1e-12)
    np.testing.assert_allclose(structured, [-0.5 * 1.7**2] * 4, atol=1e-14)


def test_translation_eigs_zero_slope():
    s = schouten_eigs_translation(2.0, 0.0, 3.0, DirectionVector([1.0, 1.0, 0.0]))
    assert s.theta == 0.0 and s.mu == 2.0 * 3.0 * 2.0


def test_translation_eigs_exponential_profile():
    k1 = 1.3
    s = schouten_eigs_translation(k1, k1, k1, DirectionVector.unit(3, 0))
    assert s.theta == pytest.approx(-k1**2 / 2) and s.mu == pytest.approx(k1**2 / 2)
    phi = ConformalFactor.profile(DirectionVector.unit(3, 0), lambda t: k1 * math.exp(t),
                                  lambda t: k1 * math.exp(t), lambda t: k1 * math.exp(t))
    np.testing.assert_allclose(schouten_spectrum(phi, np.zeros(3)).eigenvalues, s.eigenvalues, atol=1e-14)


def test_sigma_1_matches_scalar_curvature_over_2n_minus_2():
    for phi in (poly_factor(), exp_factor(), linear_factor(3, 1.2, [1.0, 1.0, 0.0])):
        for x in ([0.3, 0.2, 0.1], [0.7, 0.5, 0.2]):
            s1 = elem_sym(schouten_spectrum(phi, x).eigenvalues, 1)
            R = conformal_scalar(phi, x)
            assert s1 == pytest.approx(R / (2 * (3 - 1)), rel=1e-10, abs=1e-13)


def test_ricci_trace_is_scalar_curvature():
    for phi in (poly_factor(), linear_factor(3, 0.9, [0, 0, 1.0])):
        x = np.array([0.3, 0.4, 1.5])
        ric = conformal_ricci(phi, x)
        assert phi(x) ** 2 * np.trace(ric) == pytest.approx(conformal_scalar(phi, x), rel=1e-12)


def test_ricci_fd_mode_matches_analytic():
    phi = poly_factor()
    fd = phi.with_mode(FINITE_DIFFERENCE)
    x = [0.3, 0.2, 0.1]
    a, b = conformal_ricci(phi, x), conformal_ricci(fd, x)
    assert np.max(np.abs(a - b)) <= 10 * fd.h**2 * max(1.0, np.max(np.abs(a)))


# --- brute-force curvature oracle ---------------------------------------------------

@pytest.fixture(scope="module")
def sympy_fixture():
    xs = oracle.symbols(3)
    x1, x2, x3 = xs
    phi_expr = 2 + x1**2 + x1 * x2 - sp.Rational(3, 10) * x3**3 + x2 * x3
    u_expr = sp.exp(x1 - x2 / 2) + x3**2 * x1
    ric, R, schouten, G = oracle.curvature(phi_expr, xs)
    hess_u = oracle.hessian(u_expr, G, xs)
    return xs, phi_expr, u_expr, ric, R, schouten, hess_u


POINTS = ([0.3, 0.2, 0.1], [-0.4, 0.6, 0.8])


@pytest.mark.parametrize("x", POINTS)
def test_against_brute_force_curvature(sympy_fixture, x):
    xs, phi_expr, u_expr, ric, R, schouten, hess_u = sympy_fixture
    sub = dict(zip(xs, x))
    phi = poly_factor()
    ric_ref = np.array(ric.subs(sub).evalf(), dtype=float)
    np.testing.assert_allclose(conformal_ricci(phi, x), ric_ref, rtol=1e-12, atol=1e-12)
    assert conformal_scalar(phi, x) == pytest.approx(float(R.subs(sub).evalf()), rel=1e-12)
    sch_ref = np.array(schouten.subs(sub).evalf(), dtype=float)
    np.testing.assert_allclose(schouten_matrix(phi, x), sch_ref, rtol=1e-12, atol=1e-12)

    du = np.array([float(sp.diff(u_expr, v).subs(sub)) for v in xs])
    ddu = np.array([[float(sp.diff(u_expr, a, b).subs(sub)) for b in xs] for a in xs])
    got = hessian_conformal(du, ddu, phi(x), phi.grad(x))
    np.testing.assert_allclose(got, np.array(hess_u.subs(sub).evalf(), dtype=float), rtol=1e-12, atol=1e-12)


# --- conformal Hessian ------------------------------------------------------------

def test_hessian_flat_factor_is_euclidean(rng):
    du = rng.normal(size=4)
    ddu = rng.normal(size=(4, 4))
    ddu = ddu + ddu.T
    np.testing.assert_array_equal(hessian_conformal(du, ddu, 1.0, np.zeros(4)), ddu)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=6).filter(lambda a: sum(v * v for v in a) > 1e-3),
       st.floats(0.1, 4), finite, finite, finite)
def test_hessian_translation_reduced_form(alpha, p, dp, du, ddu):
    a = np.array(alpha)
    n = a.size
    got = hessian_conformal(du * a, ddu * np.outer(a, a), p, dp * a)
    ref = np.outer(a, a) * ddu + (2 * np.outer(a, a) - np.eye(n) * (a @ a)) * dp * du / p
    np.testing.assert_allclose(got, ref, atol=1e-12 * (1 + np.max(np.abs(ref))))
    assert np.array_equal(got, got.T)


def test_hessian_of_linear_potential_in_flat_metric():
    n = 4
    a = np.ones(n)
    assert np.all(hessian_conformal(a, np.zeros((n, n)), 1.0, np.zeros(n)) == 0.0)


def test_hessian_dimension_mismatch():
    with pytest.raises(ValueError):
        hessian_conformal(np.zeros(3), np.zeros((4, 4)), 1.0, np.zeros(3))
