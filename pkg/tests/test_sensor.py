import pytest
from hypothesis import given, strategies as st
from mpmath import mp

from dirichlet_heat import kernels
from dirichlet_heat._kernels_py import sensor_scan as scan_py
from dirichlet_heat.errors import IllConditionedError, SensorError
from dirichlet_heat.forward import InitialDatum, heat_point
from dirichlet_heat.sensor import (amplification, fixed_point_ratio, mode_to_series,
                                   parse_expression, propose_point, series_to_mode, verify_point)
from dirichlet_heat.sequences import CoefficientSequence


def test_golden_position():
    pt = propose_point("golden")
    assert abs(pt.x0 - mp.mpf("1.94161103872546657734686562996")) < 1e-29


def test_golden_certificate():
    pt = verify_point(propose_point("golden"), 100_000)
    assert pt.verified and pt.d0_empirical > 0
    # k = 1 realises the minimum: sin(pi (sqrt5 - 1)/2)
    assert pt.argmin == 1
    assert pt.d0_empirical == pytest.approx(float(mp.sin(pt.x0)), rel=1e-15)


@pytest.mark.parametrize("expr,q", [("pi/2", 2), ("pi/3", 3), ("2*pi/7", 7), ("3*pi/11", 11)])
def test_rational_multiples_fail_at_denominator(expr, q):
    pt = verify_point(propose_point("explicit", 1, expr), 50)
    assert not pt.verified and pt.argmin == q


def test_rational_multiple_passes_below_denominator():
    assert verify_point(propose_point("explicit", 1, "pi/3"), 2).verified


@given(st.floats(0.01, 3.13))
def test_K_one_always_passes(x0):
    assert verify_point(propose_point("explicit", 1, x0), 1).verified


def test_unverified_point_refused():
    pt = propose_point("explicit", 1, "pi/2")
    with pytest.raises(SensorError):
        mode_to_series(InitialDatum((1,)), pt)
    with pytest.raises(SensorError):
        mode_to_series(InitialDatum((0, 1)), verify_point(pt, 4))


def test_point_outside_interval():
    with pytest.raises(SensorError):
        propose_point("explicit", 1, "4")


def test_mode_to_series_matches_heat_point():
    pt = verify_point(propose_point("golden"), 100)
    f = InitialDatum(CoefficientSequence((0.3, -1, 0.5, 0.25, 0.1, -0.2, 0.05, 0.7)))
    a = mode_to_series(f, pt)
    t = mp.mpf("0.2")
    direct = heat_point(f, 1, pt.x0, t)
    series = mp.fsum(a[k] * mp.exp(-k * k * t) for k in range(1, 9))
    assert abs(direct - series) < 1e-70


def test_unit_round_trip():
    pt = verify_point(propose_point("silver", 2), 10)
    a = mode_to_series(InitialDatum((1,), mu=2), pt)
    assert abs(a[1] - mp.sin(pt.x0 / 2)) < 1e-70
    assert abs(series_to_mode(a, pt).coeffs[1] - 1) < 1e-70


@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_round_trip_and_amplification(vals):
    pt = verify_point(propose_point("golden"), 1000)
    f = InitialDatum(CoefficientSequence(tuple(vals)))
    a = mode_to_series(f, pt)
    back = series_to_mode(a, pt)
    for k in range(1, 9):
        assert abs(back.coeffs[k] - f.coeffs[k]) <= 1e-60
        assert abs(back.coeffs[k]) <= amplification(pt, k) * abs(a[k]) * (1 + 1e-12) + 1e-300


def test_support_beyond_verified_range():
    pt = verify_point(propose_point("golden"), 3)
    with pytest.raises(SensorError):
        series_to_mode(CoefficientSequence((1, 0, 0, 1)), pt)


def test_reduction_width_guard():
    with pytest.raises(IllConditionedError):
        verify_point(propose_point("golden"), 100_000, bits=32)


def test_certificate_byte_reproducible():
    a = verify_point(propose_point("golden"), 20_000).to_json()
    b = verify_point(propose_point("golden"), 20_000).to_json()
    assert a == b


@given(st.integers(1, 2 ** 128 - 1), st.integers(1, 3000))
def test_compiled_scan_matches_fallback(r, K):
    if kernels._compiled is None:
        pytest.skip("extension not built")
    assert kernels.sensor_scan(r, 128, K, "compiled") == scan_py(r, 128, K)


def test_wide_reduction_matches_128_bits():
    r = propose_point("golden").ratio
    v128 = scan_py(fixed_point_ratio(r, 128), 128, 5000)
    v256 = scan_py(fixed_point_ratio(r, 256), 256, 5000)
    assert v128[1] == v256[1] and v128[0] == pytest.approx(v256[0], rel=1e-14)


def test_expression_parser():
    assert abs(parse_expression("pi*(sqrt(5)-1)/2") - propose_point("golden").x0) < 1e-70
    with pytest.raises(ValueError):
        parse_expression("__import__('os')")
