from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochmaxwell.wavelet_basis import (
    BasisError,
    central_difference_weights,
    connection_coefficients,
    dd_filter,
    diff_stencil,
    fd_stencil,
    refinement_operator,
)


def test_dd_filter_linear():
    a = dd_filter(1)
    assert a.taps == {-1: Fraction(1, 2), 0: Fraction(1), 1: Fraction(1, 2)}


def test_dd_filter_cubic_matches_vandermonde_solve():
    # symmetric taps a1, a3: reproduce q = 1 and q = x^2 (odd q hold by symmetry)
    #   a0 + 2 a1 + 2 a3 = 2,  2 a1 (1/2)^2 + 2 a3 (3/2)^2 = 0
    A = np.array([[2.0, 2.0], [0.5, 4.5]])
    a1, a3 = np.linalg.solve(A, [1.0, 0.0])
    a = dd_filter(2)
    assert float(a.tap(1)) == pytest.approx(a1, abs=1e-15)
    assert float(a.tap(3)) == pytest.approx(a3, abs=1e-15)
    assert a.tap(1) == Fraction(9, 16) and a.tap(-3) == Fraction(-1, 16)
    for q in (lambda x: 1, lambda x: x * x, lambda x: x**3):
        assert sum(al * q(Fraction(l, 2)) for l, al in a.taps.items()) == 2 * q(0)


@given(st.integers(min_value=1, max_value=7))
def test_dd_filter_invariants(p):
    a = dd_filter(p)
    assert a.tap(0) == 1
    for l, al in a.taps.items():
        assert a.tap(-l) == al
        if l % 2 == 0 and l != 0:
            assert al == 0
    for deg in range(2 * p):
        total = sum(al * Fraction(l, 2) ** deg for l, al in a.taps.items())
        assert total == 2 * (1 if deg == 0 else 0)


@pytest.mark.parametrize("p", [0, -1, 1.5])
def test_dd_filter_rejects_bad_order(p):
    with pytest.raises(BasisError):
        dd_filter(p)


@pytest.mark.parametrize("gamma", [3, 2, 0, 7, -4])
def test_connection_coefficients_reject_bad_gamma(gamma):
    with pytest.raises(BasisError):
        connection_coefficients(gamma)


@pytest.mark.parametrize("gamma", [4, 6, 8, 10, 12])
def test_connection_coefficient_invariants(gamma):
    cc = connection_coefficients(gamma)
    ks, v = cc.offsets, cc.values
    assert cc[0] == 0.0
    np.testing.assert_array_equal(v, -v[::-1])
    assert np.sum(ks * v) == pytest.approx(-1.0, abs=1e-13)
    _, T = refinement_operator(dd_filter(gamma // 2))
    assert np.max(np.abs(T @ v - v)) <= 1e-12


def test_gamma4_against_monomial_oracle():
    # exact derivative of x and x^3 at 0 from samples at -2..2:
    #   -sum k t(k) = 1, -sum k^3 t(k) = 0 with t antisymmetric
    A = np.array([[-2.0, -4.0], [-2.0, -16.0]])
    t1, t2 = np.linalg.solve(A, [1.0, 0.0])
    cc = connection_coefficients(4)
    assert abs(cc[1] - t1) <= 1e-12 and abs(cc[2] - t2) <= 1e-12
    assert abs(cc[-1] + t1) <= 1e-12 and abs(cc[-2] + t2) <= 1e-12


def test_gamma6_known_rational_values():
    # closed-form autocorrelation connection coefficients for 6-tap Daubechies
    expected = {1: -272 / 365, 2: 53 / 365, 3: -16 / 1095, 4: -1 / 2920}
    cc = connection_coefficients(6)
    for k, val in expected.items():
        assert cc[k] == pytest.approx(val, abs=1e-13)


@pytest.mark.parametrize("gamma", [4, 6, 8, 10])
def test_polynomial_exactness_degree_below_gamma(gamma):
    cc = connection_coefficients(gamma)
    n = np.arange(-20, 21, dtype=float)
    for deg in range(1, gamma):
        f = n**deg
        # derivative at n = 0 of x^deg
        approx = sum(cc[int(k)] * f[20 - int(k)] for k in cc.offsets)
        assert approx == pytest.approx(1.0 if deg == 1 else 0.0, abs=1e-13 * float(gamma) ** deg)


def test_stencil_structure(grid16):
    cc = connection_coefficients(10)
    s = diff_stencil(cc, 5, 32)
    B = s.matrix
    np.testing.assert_array_equal(B.T, -B)
    assert s.bandwidth == 9
    assert np.all(s.coeffs[np.abs(s.offsets) > 9] == 0)
    assert s.coefficient(3) == 32 * cc[3]
    np.testing.assert_allclose(B @ np.ones(32), 0.0, atol=1e-13)


def test_stencil_skew_with_aliasing():
    # 16 points with a 19-wide band: wrapped entries overlap but stay antisymmetric
    s = diff_stencil(connection_coefficients(10), 4, 16)
    np.testing.assert_array_equal(s.matrix.T, -s.matrix)


def test_stencil_rejects_small_grid():
    with pytest.raises(BasisError):
        diff_stencil(connection_coefficients(10), 3, 8)


def test_sin_to_cos():
    s = diff_stencil(connection_coefficients(10), 5, 32)
    x = np.arange(32) / 32
    err = np.max(np.abs(s.matrix @ np.sin(2 * np.pi * x) - 2 * np.pi * np.cos(2 * np.pi * x)))
    assert err <= 1e-6


@pytest.mark.parametrize("gamma", [4, 6, 8, 10])
def test_trig_error_decays_with_resolution(gamma):
    cc = connection_coefficients(gamma)
    errs = []
    for J in (4, 5, 6):
        N = 2**J
        x = np.arange(N) / N
        d = diff_stencil(cc, J, N).matrix @ np.sin(2 * np.pi * x)
        errs.append(np.max(np.abs(d - 2 * np.pi * np.cos(2 * np.pi * x))))
    # errors shrink at least like (2 pi / N)^(gamma - 2)
    assert errs[1] < errs[0] * 2.0 ** -(gamma - 2) * 1.5
    assert errs[2] < errs[1] * 2.0 ** -(gamma - 2) * 1.5 or errs[2] < 1e-12


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_banded_and_dense_application_agree(seed):
    s = diff_stencil(connection_coefficients(8), 5, 32)
    f = np.random.default_rng(seed).normal(size=(32, 3, 2))
    dense = np.einsum("ij,jkl->ikl", s.matrix, f)
    np.testing.assert_allclose(s.apply_banded(f, axis=0), dense, atol=1e-11)


def test_central_difference_weights():
    assert central_difference_weights(2) == {-1: Fraction(-1, 2), 0: 0, 1: Fraction(1, 2)}
    w4 = central_difference_weights(4)
    assert w4[1] == Fraction(2, 3) and w4[2] == Fraction(-1, 12)


def test_fd_stencil_orientation():
    s = fd_stencil(2, 4, 16)
    x = np.arange(16) / 16
    f = x.copy()
    d = s.matrix @ f
    # interior points differentiate the linear ramp exactly
    np.testing.assert_allclose(d[1:-1], 1.0, atol=1e-12)
    np.testing.assert_array_equal(s.matrix.T, -s.matrix)
