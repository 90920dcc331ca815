import pytest
from mpmath import mp

from dirichlet_heat.errors import RegimeError, SensorError
from dirichlet_heat.forward import (InitialDatum, TensorDatum, boundary_flux, heat_point,
                                    hyperplane_sample, quadrature_times, sample)
from dirichlet_heat.inverse_heat import (InversionConfig, MeasurementChannel,
                                         recover_initial_boundary, recover_initial_point,
                                         recover_tensor)
from dirichlet_heat.sensor import mode_to_series, propose_point, verify_point
from dirichlet_heat.sequences import CoefficientSequence

GOLDEN = verify_point(propose_point("golden"), 1000)


def _rule(n_max=12, alpha=1, mu=1):
    return quadrature_times(1, n_max, 2 * (mp.mpf(n_max) / mu) ** (2 * alpha))


def _point_sample(f, alpha=1, eps=0, seed=None, pt=GOLDEN):
    x, w = _rule()
    return sample(lambda s: heat_point(f, alpha, pt.x0, s), x, eps, seed=seed, horizon=1, weights=w)


def test_point_biortho_noiseless():
    f = InitialDatum(CoefficientSequence((1, -0.5, 0.3, 0.2, -0.1)))
    ch = MeasurementChannel("point", 1, _point_sample(f), GOLDEN)
    res = recover_initial_point(ch, 1, 2, "biortho", truth=f)
    assert res.diagnostics["relative_error"] < 1e-6
    assert res.theorem_tag == "log-point"
    assert res.theorem_bound >= 0


def test_point_noisy_error_below_bound_scale():
    f = InitialDatum(CoefficientSequence((1, -0.5, 0.3)))
    ch = MeasurementChannel("point", 1, _point_sample(f, eps=1e-6, seed=3), GOLDEN)
    res = recover_initial_point(ch, 1, 2, "biortho", truth=f)
    assert res.diagnostics["relative_error"] < 1e-2
    assert res.report.truncation < 12


def test_blind_spot_refused():
    pt = propose_point("explicit", 1, "pi/2")
    with pytest.raises(SensorError):
        MeasurementChannel("point", 1, lambda t: mp.zero, pt)
    with pytest.raises(SensorError):
        MeasurementChannel("point", 1, lambda t: mp.zero, verify_point(pt, 10))


def test_biortho_refused_below_half():
    f = InitialDatum((1,))
    ch = MeasurementChannel("point", 0.5, lambda s: heat_point(f, 0.5, GOLDEN.x0, s), GOLDEN)
    with pytest.raises(RegimeError):
        recover_initial_point(ch, 1, 1, "biortho")


def test_point_peeling_half_order_chain():
    f = InitialDatum(CoefficientSequence((1, -0.5, 0.3)))
    ev = lambda s: heat_point(f, 0.5, GOLDEN.x0, s)  # noqa: E731
    res = recover_initial_point(MeasurementChannel("point", 0.5, ev, GOLDEN), 0, 4, "peeling",
                                InversionConfig(n_max=4, noise_level=0), truth=f)
    a = mode_to_series(f, GOLDEN)
    trace = res.report.diagnostics["trace"]
    for k in range(1, res.report.truncation + 1):
        err = mp.fsum(abs(trace.estimates[i] - a[i]) for i in range(1, k + 1))
        assert err <= trace.cumulative_bounds[k - 1]
    assert res.diagnostics["relative_error"] < 1e-8


def test_methods_agree_on_noiseless_data():
    f = InitialDatum(CoefficientSequence((0.6, 0.2, -0.4, 0.1)))
    ev = lambda s: heat_point(f, 1, GOLDEN.x0, s)  # noqa: E731
    ch = MeasurementChannel("point", 1, ev, GOLDEN)
    bio = recover_initial_point(ch, 1, 2, "biortho", InversionConfig(noise_level=0))
    vdm = recover_initial_point(ch, 1, 2, "vandermonde", InversionConfig(noise_level=0, n_max=4))
    n = 4
    d = bio.estimate.coeffs.padded(n) - vdm.estimate.coeffs.padded(n)
    assert d.norm("l2") < 1e-6 * f.coeffs.norm("l2")


def test_flux_single_mode():
    f = InitialDatum((1,))
    x, w = _rule()
    S = sample(lambda s: boundary_flux(f, 1, s), x, horizon=1, weights=w)
    assert abs(S.values[3] - mp.exp(-x[3])) < 1e-70
    res = recover_initial_boundary(MeasurementChannel("flux", 1, S), 1, 1, 2, truth=f)
    assert res.diagnostics["l2_error"] < 1e-20
    assert res.theorem_tag == "log-flux"


def test_flux_four_modes():
    f = InitialDatum(CoefficientSequence((1, -0.5, 0.3, 0.2)))
    x, w = _rule()
    S = sample(lambda s: boundary_flux(f, 1, s), x, horizon=1, weights=w)
    res = recover_initial_boundary(MeasurementChannel("flux", 1, S), 1, 1, 5, truth=f)
    assert res.diagnostics["relative_error"] < 1e-6
    assert res.diagnostics["rate_exponent"] == 1.0


def _tensor_channels(F, sens, alpha=1, n_max=12):
    x, w = _rule(n_max)
    return [hyperplane_sample(F, alpha, j, sens[j].x0, x, w, transverse_nodes=16, horizon=1)
            for j in range(F.dim)]


MUS = [mp.one, mp.sqrt(2)]
SENS = [verify_point(propose_point("golden", mu), 1000) for mu in MUS]


def test_tensor_single_modes():
    F = TensorDatum((InitialDatum((1,), MUS[0]), InitialDatum((1,), MUS[1])))
    res = recover_tensor(_tensor_channels(F, SENS), 1, MUS, 0.1, 1, 3, SENS, truth=F)
    assert res.diagnostics["relative_error"] < 1e-15


def test_tensor_supports_three_two():
    F = TensorDatum((InitialDatum(CoefficientSequence((1, 0.3, -0.2)), MUS[0]),
                     InitialDatum(CoefficientSequence((0.8, -0.4)), MUS[1])))
    res = recover_tensor(_tensor_channels(F, SENS), 1, MUS, 0.1, 1, 3, SENS, truth=F)
    assert res.diagnostics["relative_error"] < 1e-4
    assert res.theorem_tag == "log-tensor"
    assert abs(res.estimate.l2_norm() - res.estimate.l2_norm_direct()) < mp.mpf(2) ** -200


def test_tensor_factor_below_eta_refused():
    F = TensorDatum((InitialDatum((1,), MUS[0]), InitialDatum((1e-4,), MUS[1])))
    with pytest.raises(RegimeError):
        recover_tensor(_tensor_channels(F, SENS), 1, MUS, 0.05, 1, 3, SENS)


def test_tensor_vanishing_first_coefficient_refused():
    F = TensorDatum((InitialDatum((0, 1), MUS[0]), InitialDatum((1,), MUS[1])))
    with pytest.raises(RegimeError):
        recover_tensor(_tensor_channels(F, SENS), 1, MUS, 0.01, 1, 3, SENS)


def test_result_json_has_decimal_strings():
    f = InitialDatum(CoefficientSequence((1, -0.5)))
    res = recover_initial_point(MeasurementChannel("point", 1, _point_sample(f), GOLDEN), 1, 2)
    obj = res.to_json()
    assert isinstance(obj["estimate"][0], str)
    assert mp.mpf(obj["estimate"][0]) == res.estimate.coeffs[1]
