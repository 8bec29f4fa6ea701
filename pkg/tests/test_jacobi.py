import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import eval_jacobi

from jactrans.jacobi import (
    DomainError,
    JacobiParams,
    Region,
    eigenvalue,
    envelope,
    envelope_values,
    jacobi_poly,
    jacobi_table,
    normalization,
    normalization_table,
    p_derivative_table,
    p_fn,
    p_fn_derivative,
    p_second_derivative_table,
    p_table,
)

params_st = st.tuples(st.floats(-0.95, 4.0), st.floats(-0.95, 4.0)).map(lambda t: JacobiParams(*t))
interior_x = st.floats(0.01, math.pi - 0.01)
X = np.linspace(0.02, math.pi - 0.02, 157)


def test_params_validation():
    with pytest.raises(DomainError):
        JacobiParams(-1.0, 0.0)
    with pytest.raises(DomainError):
        JacobiParams(0.0, float("nan"))
    assert JacobiParams(-0.5, -0.5).in_theorem_range
    assert not JacobiParams(-0.6, 0.0).in_theorem_range


def test_p0_is_one():
    assert jacobi_poly(JacobiParams(1.7, -0.3), 0, 0.3) == 1.0


def test_legendre_degree_two():
    z = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(jacobi_poly(JacobiParams(0, 0), 2, z), (3 * z**2 - 1) / 2, atol=1e-15)
    assert jacobi_poly(JacobiParams(0, 0), 2, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_chebyshev_ratio_constant_in_theta():
    theta = np.linspace(0.05, 3.0, 40)
    theta = theta[np.abs(np.cos(5 * theta)) > 0.1]
    ratio = jacobi_poly(JacobiParams(-0.5, -0.5), 5, np.cos(theta)) / np.cos(5 * theta)
    # P_5 = (2*5)!/(2^10 (5!)^2) T_5
    assert np.ptp(ratio) < 1e-13
    assert ratio[0] == pytest.approx(math.comb(10, 5) / 4**5, rel=1e-13)


@pytest.mark.parametrize("ab", [(0.3, 1.7), (2.5, 0.1), (-0.8, -0.7), (3.0, 3.0)])
def test_polynomial_matches_scipy(ab):
    z = np.linspace(-1, 1, 41)
    tab = jacobi_table(JacobiParams(*ab), 512, z)
    for n in (0, 1, 7, 64, 511, 512):
        ref = eval_jacobi(n, ab[0], ab[1], z)
        np.testing.assert_allclose(tab[n], ref, rtol=1e-11, atol=1e-12 * np.abs(ref).max())


def test_rejects_out_of_range_z():
    with pytest.raises(DomainError):
        jacobi_poly(JacobiParams(0, 0), 3, 1.0001)
    with pytest.raises(DomainError):
        jacobi_poly(JacobiParams(0, 0), -1, 0.0)


def test_w0_chebyshev():
    assert normalization(JacobiParams(-0.5, -0.5), 0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("ab,n", [((-0.5, -0.5), 4), ((0.3, 1.7), 3), ((2.5, 0.1), 6)])
def test_normalization_against_quadrature(ab, n):
    a, b = ab

    def unnormalized_sq(x):
        fac = math.sin(x / 2) ** (a + 0.5) * math.cos(x / 2) ** (b + 0.5)
        return (fac * eval_jacobi(n, a, b, math.cos(x))) ** 2

    mass, _ = integrate.quad(unnormalized_sq, 0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    assert normalization(JacobiParams(a, b), n) == pytest.approx(1 / math.sqrt(mass), rel=1e-10)


def test_normalization_no_overflow():
    w = normalization_table(JacobiParams(3, 3), 512)
    assert np.all(np.isfinite(w)) and np.all(w > 0)


def test_chebyshev_reductions():
    n = np.arange(0, 40)[:, None]
    T = p_table(JacobiParams(-0.5, -0.5), 39, X)
    np.testing.assert_allclose(T[0], 1 / math.sqrt(math.pi), atol=1e-14)
    np.testing.assert_allclose(T[1:], math.sqrt(2 / math.pi) * np.cos(n[1:] * X), atol=1e-10)
    U = p_table(JacobiParams(0.5, 0.5), 39, X)
    np.testing.assert_allclose(U, math.sqrt(2 / math.pi) * np.sin((n + 1) * X), atol=1e-10)


def test_p_fn_endpoints_rejected():
    for x in (0.0, math.pi, -0.1):
        with pytest.raises(DomainError):
            p_fn(JacobiParams(0, 0), 2, x)


def test_derivative_chebyshev_value():
    expected = -3 * math.sqrt(2 / math.pi) * math.sin(3.0)
    assert p_fn_derivative(JacobiParams(-0.5, -0.5), 3, 1.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-0.3378, abs=5e-5)


def test_derivative_n0_chebyshev_zero():
    assert np.all(p_fn_derivative(JacobiParams(-0.5, -0.5), 0, X) == 0.0)


def test_derivative_finite_difference():
    P, h = JacobiParams(0.3, 0.7), 1e-6
    fd = (p_fn(P, 6, 2.0 + h) - p_fn(P, 6, 2.0 - h)) / (2 * h)
    assert abs(p_fn_derivative(P, 6, 2.0) - fd) <= 1e-6


def test_second_derivative_finite_difference():
    P, h = JacobiParams(1.3, -0.2), 1e-4
    x = np.array([0.7, 1.9, 2.6])
    d1 = p_derivative_table(P, 9, x)
    fd = (p_derivative_table(P, 9, x + h) - p_derivative_table(P, 9, x - h)) / (2 * h)
    np.testing.assert_allclose(p_second_derivative_table(P, 9, x), fd, atol=1e-6 * (1 + np.abs(d1).max()))


@settings(max_examples=40, deadline=None)
@given(params_st, st.integers(1, 80), interior_x)
def test_lowering_identity(P, n, x):
    a, b = P.a, P.b
    g = (2 * a + 1) / 4 / math.tan(x / 2) - (2 * b + 1) / 4 * math.tan(x / 2)
    psi = p_fn_derivative(P, n, x) - g * p_fn(P, n, x)
    rhs = -math.sqrt(n * (n + a + b + 1)) * p_fn(P.shifted(), n - 1, x)
    assert abs(psi - rhs) <= 1e-9 * (1 + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(params_st, interior_x)
def test_lowering_n0(P, x):
    g = (2 * P.a + 1) / 4 / math.tan(x / 2) - (2 * P.b + 1) / 4 * math.tan(x / 2)
    assert abs(p_fn_derivative(P, 0, x) - g * p_fn(P, 0, x)) <= 1e-12 * (1 + abs(g))


@settings(max_examples=40, deadline=None)
@given(params_st, st.integers(0, 100), interior_x)
def test_reflection(P, n, x):
    assert abs(p_fn(P, n, math.pi - x) - (-1) ** n * p_fn(P.swapped(), n, x)) <= 1e-10


def test_eigenvalues():
    assert all(eigenvalue(JacobiParams(-0.5, -0.5), n) == n * n for n in range(50))
    assert eigenvalue(JacobiParams(0, 0), 0) == 0.25
    lam = [eigenvalue(JacobiParams(-0.9, -0.9), n) for n in range(30)]
    assert all(b > a for a, b in zip(lam, lam[1:]))


def test_envelope_branches():
    e = envelope(JacobiParams(0.7, 2.0), 3, math.pi / 2)
    assert e.region == Region.BULK and e.value == 1.0
    e = envelope(JacobiParams(-0.5, -0.5), 5, 1e-6)
    assert e.region == Region.LEFT_CAP and e.value == 1.0
    e = envelope(JacobiParams(0.5, 0.5), 9, 0.05)
    assert e.region == Region.LEFT_CAP and e.value == pytest.approx(10 * math.sin(0.025), rel=1e-14)
    assert e.value == pytest.approx(0.25, abs=1e-4)
    assert envelope(JacobiParams(0, 0), 3, math.pi - 0.2).region == Region.RIGHT_CAP


def test_envelope_cut_points():
    # cuts at exactly 1/(n+1) and pi - 1/(n+1): both belong to the bulk
    assert envelope(JacobiParams(0, 0), 3, 0.25).region == Region.BULK
    assert envelope(JacobiParams(0, 0), 3, math.nextafter(0.25, 0)).region == Region.LEFT_CAP
    assert envelope(JacobiParams(0, 0), 3, math.pi - 0.25).region == Region.BULK


@pytest.mark.parametrize("ab", [(0.0, 0.0), (1.5, 0.3), (-0.5, 2.0)])
def test_envelope_domination_stable(ab):
    P = JacobiParams(*ab)
    x = np.unique(np.concatenate([np.linspace(1e-3, math.pi - 1e-3, 4000),
                                  np.geomspace(1e-7, 1, 200), math.pi - np.geomspace(1e-7, 1, 200)]))
    n = np.arange(257)[:, None]
    R = np.abs(p_table(P, 256, x)) / envelope_values(P, n, x)
    c128, c256 = R[:129].max(), R.max()
    assert np.isfinite(c256) and (c256 - c128) / c128 < 0.05


@pytest.mark.parametrize("ab", [(0.0, 0.0), (0.3, 1.7), (-0.7, 2.0)])
def test_ratio_bound_bounded(ab):
    w = normalization_table(JacobiParams(*ab), 1026)
    n = np.arange(1025)
    r = (n + 1) * np.abs(w[2:] / w[:-2] - 1)
    assert r.max() < 10 and r[512:].max() <= 1.05 * r[256:512].max()
