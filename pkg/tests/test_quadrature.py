import pytest
from hypothesis import given, strategies as st
from mpmath import mp

from dirichlet_heat.quadrature import (Pchip, composite_gauss_legendre, gauss_legendre,
                                       graded_gauss_legendre)


@pytest.mark.parametrize("n", [1, 4, 16, 32])
def test_gauss_legendre_polynomial_exactness(n):
    x, w = gauss_legendre(n, 0, 2)
    for p in range(2 * n):
        assert abs(mp.fsum(wi * xi ** p for xi, wi in zip(x, w)) - mp.mpf(2) ** (p + 1) / (p + 1)) \
            < mp.mpf(2) ** (p + 1) * 1e-70


def test_composite_rule_sums_to_length():
    x, w = composite_gauss_legendre(128, 0, 3)
    assert len(x) >= 128
    assert abs(mp.fsum(w) - 3) < 1e-70
    assert all(0 < a < b < 3 for a, b in zip(x, x[1:]))


@given(st.floats(0.5, 2000.0), st.sampled_from([0.5, 1.0, 2.0]))
def test_graded_rule_integrates_fast_exponentials(lam, T):
    x, w = graded_gauss_legendre(64, T, 2000)
    lam, T = mp.mpf(lam), mp.mpf(T)
    exact = -mp.expm1(-lam * T) / lam
    got = mp.fsum(wi * mp.exp(-lam * xi) for xi, wi in zip(x, w))
    assert abs(got - exact) <= exact * mp.mpf(10) ** -60


def test_pchip_reproduces_linear_data():
    t = [mp.mpf(i) / 10 for i in range(11)]
    f = Pchip(t, [3 * v - 1 for v in t])
    for s in (0.05, 0.33, 0.999):
        assert abs(f(s) - (3 * mp.mpf(s) - 1)) < 1e-60
