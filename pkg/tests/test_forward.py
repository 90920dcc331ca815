import pytest
from hypothesis import given, strategies as st
from mpmath import mp

from dirichlet_heat.errors import DomainError
from dirichlet_heat.forward import (DirichletSample, InitialDatum, TensorDatum, boundary_flux,
                                    dirichlet_evaluator, eval_dirichlet, heat_point,
                                    hyperplane_sample, sample, tensor_eval)
from dirichlet_heat.sequences import CoefficientSequence, EigenvalueSequence

SQUARES = EigenvalueSequence.power(1, 1, 16)


def test_eval_dirichlet_closed_forms():
    assert eval_dirichlet(CoefficientSequence.unit(1), SQUARES, 0) == 1
    lam = EigenvalueSequence.explicit([1, 2])
    assert abs(eval_dirichlet(CoefficientSequence((1, -1)), lam, mp.log(2)) - mp.mpf(1) / 4) < 1e-70


def test_eval_dirichlet_against_doubled_precision():
    got = eval_dirichlet(CoefficientSequence((1, 1, 1)), SQUARES, 1)
    with mp.workprec(512):
        ref = mp.exp(-1) + mp.exp(-4) + mp.exp(-9)
    assert abs(got - ref) < mp.mpf(2) ** -250


def test_eval_dirichlet_rejects_negative_time():
    with pytest.raises(DomainError):
        eval_dirichlet(CoefficientSequence.unit(1), SQUARES, -1)


def test_heat_point_examples():
    assert heat_point(InitialDatum((1,)), 1, mp.pi / 2, 0) == 1
    assert abs(heat_point(InitialDatum((0, 1)), 1, mp.pi / 2, 0.7)) < 1e-70
    # alpha = 1/2, x0 = 1, t = 1; reference value summed at 512 bits
    v = heat_point(InitialDatum((1, 0.5)), 0.5, 1, 1)
    assert abs(v - mp.mpf("0.371089888056000566347838684838")) < 1e-29


def test_heat_point_domain():
    with pytest.raises(DomainError):
        heat_point(InitialDatum((1,)), 1, 4, 0)


def test_boundary_flux_examples():
    t = mp.mpf("0.3")
    assert abs(boundary_flux(InitialDatum((1,)), 1, t) - mp.exp(-t)) < 1e-70
    alpha = mp.mpf("0.7")
    assert abs(boundary_flux(InitialDatum((0, 1)), alpha, t) - 2 * mp.exp(-2 ** (2 * alpha) * t)) < 1e-70
    assert abs(boundary_flux(InitialDatum((1, 1)), 1, 1) - mp.mpf("0.404510718948910682182959812708")) < 1e-29


def test_tensor_eval_examples():
    e1 = InitialDatum((1,))
    assert abs(tensor_eval(TensorDatum((e1, e1)), 1, (mp.pi / 2, mp.pi / 2), 0) - 1) < 1e-70
    zero = InitialDatum((0, 0))
    assert tensor_eval(TensorDatum((e1, zero)), 1, (1, 2), 0.2) == 0
    f1 = InitialDatum((1, 1))
    v = tensor_eval(TensorDatum((f1, e1)), 1, (1, 1), 0.5)
    assert abs(v - heat_point(f1, 1, 1, 0.5) * heat_point(e1, 1, 1, 0.5)) < 1e-70


def test_product_norm_identity():
    F = TensorDatum((InitialDatum((1, -0.5, 0.25)), InitialDatum((0.3, 2), mu=mp.sqrt(2))))
    assert abs(F.l2_norm() - F.l2_norm_direct()) < mp.mpf(2) ** -240


def test_sample_noiseless_and_reproducible():
    F = dirichlet_evaluator(CoefficientSequence((1, 0.5)), SQUARES)
    times = [mp.mpf(j) / 20 for j in range(21)]
    S = sample(F, times)
    assert S.values == S.truth
    a = sample(F, times, 1e-3, seed=5)
    b = sample(F, times, 1e-3, seed=5)
    assert a.values == b.values


@given(st.floats(1e-8, 1.0), st.integers(0, 2 ** 31))
def test_sup_noise_bounded(eps, seed):
    F = dirichlet_evaluator(CoefficientSequence((1, -2, 0.5)), SQUARES)
    times = [mp.mpf(j) / 10 for j in range(11)]
    S = sample(F, times, eps, seed=seed)
    assert max(abs(v - F(t)) for v, t in zip(S.values, times)) <= mp.mpf(eps)


def test_sample_csv_round_trip(tmp_path):
    F = dirichlet_evaluator(CoefficientSequence((1, 0.5)), SQUARES)
    S = sample(F, [mp.mpf(j) / 8 for j in range(9)], 1e-4, seed=1, horizon=1)
    back = DirichletSample.from_csv(S.to_csv(tmp_path / "s.csv"))
    assert back.values == S.values and back.times == S.times
    assert back.noise_level == S.noise_level


def test_sample_rejects_unsorted_times():
    with pytest.raises(ValueError):
        DirichletSample((0.5, 0.1), (1, 2))


def test_hyperplane_sample_matches_tensor_eval():
    F = TensorDatum((InitialDatum((1, 0.2)), InitialDatum((0.5, 0.1), mu=2)))
    hs = hyperplane_sample(F, 1, 0, mp.mpf(1), [0, mp.mpf("0.5")], transverse_nodes=4)
    node = hs.nodes[2]
    assert abs(hs.values[2][1] - tensor_eval(F, 1, (1, node[0]), 0.5)) < 1e-70
