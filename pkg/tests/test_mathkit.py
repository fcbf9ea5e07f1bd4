import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_jmatrix.mathkit import (
    ConvergenceError,
    derivative_matrix,
    dawson,
    gauss_hermite,
    hermite_eval,
    hermite_function_table,
    hermite_normalized,
    kummer_1f1,
    log_gamma_ratio,
    log_norm_constant,
)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 11])
@pytest.mark.parametrize("y", [-2.3, 0.0, 0.7, 3.1])
def test_hermite_eval_matches_mpmath(n, y):
    assert hermite_eval(n, y) == pytest.approx(float(mp.hermite(n, y)), rel=1e-12, abs=1e-12)


def test_hermite_low_orders():
    y = np.linspace(-2, 2, 9)
    assert np.allclose(hermite_eval(2, y), 4 * y**2 - 2)
    assert np.allclose(hermite_eval(3, y), 8 * y**3 - 12 * y)
    with pytest.raises(ValueError):
        hermite_eval(-1, 0.0)


@given(st.integers(0, 120), st.floats(-8, 8))
@settings(max_examples=60, deadline=None)
def test_hermite_normalized_against_mpmath(n, y):
    ref = mp.hermite(n, y) / mp.sqrt(mp.sqrt(mp.pi) * mp.mpf(2) ** n * mp.factorial(n))
    scale = max(1.0, abs(float(ref)))
    assert abs(hermite_normalized(n, y) - float(ref)) <= 1e-10 * scale


def test_hermite_function_table_large_order_no_overflow():
    y = np.array([0.0, 5.0, 20.0, 30.0])
    h = hermite_function_table(600, y)
    assert np.all(np.isfinite(h))
    ref = mp.exp(-mp.mpf(20) ** 2 / 2) * mp.hermite(600, 20) / mp.sqrt(mp.sqrt(mp.pi) * mp.mpf(2) ** 600 * mp.factorial(600))
    assert h[600, 2] == pytest.approx(float(ref), rel=1e-9)


def test_hermite_functions_orthonormal():
    rule = gauss_hermite(80)
    # h_i h_j integrated over y equals Hn_i Hn_j against exp(-y^2)
    table = hermite_function_table(30, rule.nodes) * np.exp(rule.nodes**2 / 2)
    gram = (table * rule.weights) @ table.T
    assert np.allclose(gram, np.eye(31), atol=1e-12)


def test_derivative_matrix_antisymmetric_and_exact():
    D = derivative_matrix(12)
    assert np.allclose(D, -D.T)
    y = np.linspace(-3, 3, 41)
    h = hermite_function_table(12, y)
    j = 5
    dh = math.sqrt(j / 2) * h[j - 1] - math.sqrt((j + 1) / 2) * h[j + 1]
    step = 1e-5
    fd = (hermite_function_table(12, y + step)[j] - hermite_function_table(12, y - step)[j]) / (2 * step)
    assert np.allclose(dh, fd, atol=1e-8)
    assert D[j - 1, j] == pytest.approx(math.sqrt(j / 2))


@pytest.mark.parametrize("order", [1, 2, 5, 20, 64])
def test_gauss_hermite_matches_numpy(order):
    rule = gauss_hermite(order)
    x, w = np.polynomial.hermite.hermgauss(order)
    assert np.allclose(rule.nodes, x, atol=1e-12)
    assert np.allclose(rule.weights, w, rtol=1e-10, atol=1e-300)


def test_gauss_hermite_structure():
    rule = gauss_hermite(16)
    assert np.allclose(rule.nodes, -rule.nodes[::-1], atol=0)
    assert rule.weights.sum() == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert np.all(rule.eigenvectors[0] > 0)
    # eigenvector components are normalized Hermite values times sqrt(weight)
    n = 7
    assert np.allclose(rule.eigenvectors[n], hermite_normalized(n, rule.nodes) * np.sqrt(rule.weights), atol=1e-12)
    with pytest.raises(ValueError):
        rule.nodes[0] = 1.0
    with pytest.raises(ValueError):
        gauss_hermite(0)


def test_gauss_hermite_exact_for_polynomials():
    rule = gauss_hermite(10)
    # exact up to degree 19
    assert rule.integrate(lambda y: y**18) == pytest.approx(float(mp.gamma(9.5)), rel=1e-12)
    assert abs(rule.integrate(lambda y: y**7)) < 1e-14


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 6.0, -1.2])
def test_dawson_against_mpmath(x):
    ref = mp.exp(-mp.mpf(x) ** 2) * mp.quad(lambda t: mp.exp(t * t), [0, x])
    assert dawson(x) == pytest.approx(float(ref), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize(
    "a,c,z",
    [(0.5, 1.5, 4.0), (-0.5, 0.5, 9.0), (-1.5, 1.5, 2.0), (-4.5, 1.5, 25.0), (1.0, 2.0, -3.0), (-7.0, 0.5, 10.0), (2.5, 3.5, 36.0)],
)
def test_kummer_against_mpmath(a, c, z):
    ref = float(mp.hyp1f1(a, c, z))
    assert kummer_1f1(a, c, z) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_kummer_special_cases():
    assert kummer_1f1(0.3, 1.7, 0.0) == 1.0
    # terminating series: 1F1(-2; 1/2; z) is proportional to H_4
    z = 1.3
    assert kummer_1f1(-2, 0.5, z) == pytest.approx(1 - 4 * z + 4 * z * z / 3, rel=1e-14)
    with pytest.raises(ValueError):
        kummer_1f1(1.0, -2.0, 1.0)
    with pytest.raises(ConvergenceError):
        kummer_1f1(0.5, 1.5, 40.0, max_terms=5)


def test_kummer_dawson_identity():
    # mu 1F1(1/2; 3/2; mu^2) = exp(mu^2) D(mu)
    for mu in (0.2, 1.0, 2.0, 3.0):
        assert mu * kummer_1f1(0.5, 1.5, mu * mu) == pytest.approx(math.exp(mu * mu) * dawson(mu), rel=1e-13)


def test_log_helpers():
    n = 4
    a_n = 1.0 / (math.pi**0.25 * 2**n * math.sqrt(math.factorial(2 * n)))
    assert math.exp(log_norm_constant(n)) == pytest.approx(a_n, rel=1e-14)
    a_half = 1.0 / (math.pi**0.25 * 2 ** (n + 0.5) * math.sqrt(math.factorial(2 * n + 1)))
    assert math.exp(log_norm_constant(n + 0.5)) == pytest.approx(a_half, rel=1e-14)
    assert math.isfinite(log_norm_constant(5000))
    assert log_gamma_ratio(5.0, 3.0) == pytest.approx(math.log(12.0))


def test_extended_hermite_table_is_nearly_correctly_rounded():
    mp.mp.dps = 40
    y = np.array([-3.7, 0.4, 2.0, 5.5])
    table = hermite_function_table(25, y, extended=True)
    plain = hermite_function_table(25, y)
    worst_ext = 0.0
    for j in (0, 7, 11, 25):
        for i, yy in enumerate(y):
            ref = mp.hermite(j, yy) * mp.exp(-mp.mpf(yy) ** 2 / 2) / mp.sqrt(2**j * mp.factorial(j) * mp.sqrt(mp.pi))
            ulp = np.spacing(abs(float(ref))) if ref != 0 else 5e-324
            worst_ext = max(worst_ext, abs(float(table[j, i] - ref)) / ulp)
    if np.finfo(np.longdouble).eps < np.finfo(float).eps:
        assert worst_ext <= 1.0
    assert np.allclose(table, plain, rtol=0, atol=1e-14)
    assert table.dtype == np.float64
