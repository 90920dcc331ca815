import math

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from dirichlet_heat.errors import MissingSampleError
from dirichlet_heat.forward import dirichlet_evaluator, sample
from dirichlet_heat.sequences import CoefficientSequence, EigenvalueSequence
from dirichlet_heat.vandermonde import (HolderConfig, build_system, calibrate_C,
                                        inverse_norm_bound, log_inverse_norm_bound,
                                        recover_holder, select_N_bound, select_N_holder,
                                        solve_primal)

LINEAR = EigenvalueSequence.power(0.5, 1, 32)


def test_trivial_system():
    sys = build_system(LINEAR, 1, lambda t: mp.mpf(3))
    assert sys.nodes == (mp.exp(-1),)
    assert solve_primal(sys)[1] == 3


def test_nodes_definition():
    sys = build_system(EigenvalueSequence.explicit([1, 2]), 2, lambda t: mp.one)
    assert sys.nodes == (mp.exp(-1), mp.exp(-2))


def test_inverse_norm_bound_against_explicit_inverse():
    # entrywise l1 sum of V^-1 for N = 6, lambda_k = k, from a 512-bit dense inverse
    sys = build_system(LINEAR, 6, lambda t: mp.one)
    got = inverse_norm_bound(sys.nodes)
    assert abs(got / mp.mpf("35593632.17772347185234947") - 1) < 1e-20
    W = mp.inverse(sys.matrix())
    colmax = max(mp.fsum(abs(W[i, j]) for i in range(6)) for j in range(6))
    assert colmax <= got
    assert got >= 1


def test_nodes_decreasing_in_unit_interval():
    sys = build_system(LINEAR, 10, lambda t: mp.one)
    assert all(0 < x < 1 for x in sys.nodes)
    assert all(b < a for a, b in zip(sys.nodes, sys.nodes[1:]))


def test_unit_vector_solved_exactly():
    sys = build_system(LINEAR, 5, dirichlet_evaluator(CoefficientSequence.unit(1), LINEAR))
    A = solve_primal(sys)
    assert abs(A[1] - 1) < 1e-60 and max(abs(v) for v in A.entries[1:]) < 1e-60


def test_two_by_two_closed_form():
    F = dirichlet_evaluator(CoefficientSequence((0.7, -0.4)), LINEAR)
    sys = build_system(LINEAR, 2, F)
    x1, x2 = sys.nodes
    a2 = (F(1) - x1 * F(0)) / (x2 - x1)
    A = solve_primal(sys)
    assert abs(A[2] - a2) < 1e-70 and abs(A[1] - (F(0) - a2)) < 1e-70


@settings(max_examples=15)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_round_trip_512_bits(vals):
    with mp.workprec(512):
        a = CoefficientSequence(tuple(vals))
        A = solve_primal(build_system(LINEAR, 8, dirichlet_evaluator(a, LINEAR)))
        assert (A - a).norm("l2") <= 1e-8 * max(a.norm("l2"), mp.mpf(1e-30))


@settings(max_examples=15)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_matches_dense_solve(vals):
    with mp.workprec(512):
        sys = build_system(LINEAR, 6, lambda t: mp.one)
        sys = type(sys)(sys.nodes, tuple(mp.mpf(v) for v in vals), sys.inv_norm_bound)
        dense = mp.lu_solve(sys.matrix(), mp.matrix(list(sys.rhs)))
        A = solve_primal(sys)
        assert max(abs(A[i + 1] - dense[i]) for i in range(6)) < mp.mpf(10) ** -100


def _holder_scan(eps, C, c, b1, b, m=1, N0=1, N_max=20):
    vals = [(math.exp(C * N ** b1) * eps + m * math.exp(-c * N ** b), N) for N in range(N0, N_max + 1)]
    return min(vals)[1]


def test_select_N_examples():
    assert select_N_holder(1, 1, 1, 1, 2, N0=1) == 1
    assert select_N_holder(2.5, 1, 1, 1, 2, N0=3) == 3
    assert select_N_holder(1e-8, 1, 1, 1, 2) == _holder_scan(1e-8, 1, 1, 1, 2) == 4


@given(st.floats(1e-30, 0.9), st.floats(0.1, 3), st.floats(0.1, 3))
def test_select_N_monotone(eps, C, c):
    N = select_N_holder(eps, C, c, 1, 2)
    assert N == _holder_scan(eps, C, c, 1, 2)
    assert select_N_holder(eps / 10, C, c, 1, 2) >= N


LOG_BOUNDS = [log_inverse_norm_bound(LINEAR, N) for N in range(1, 21)]


def _bound_scan(eps, c, b, m=1):
    vals = [(math.exp(lb) * eps + m * math.exp(-c * N ** b), N)
            for N, lb in enumerate(LOG_BOUNDS, start=1)]
    return min(vals)[1]


@given(st.floats(1e-60, 0.9), st.floats(0.1, 3))
def test_select_N_bound_matches_scan(eps, c):
    N = select_N_bound(eps, LOG_BOUNDS, c, 2)
    assert N == _bound_scan(eps, c, 2)
    assert select_N_bound(eps / 10, LOG_BOUNDS, c, 2) >= N


def test_select_N_bound_rejects_zero_noise():
    with pytest.raises(ValueError):
        select_N_bound(0, LOG_BOUNDS, 1, 2)


def test_bound_selection_not_below_envelope():
    # the envelope over-estimates every B_N, so it never asks for more nodes
    a = CoefficientSequence((0.5, -0.25, 0.125))
    S = sample(dirichlet_evaluator(a, LINEAR), list(range(20)), 1e-12, seed=1, horizon=19)
    reps = {sel: recover_holder(S, LINEAR, 1, 1, 2, HolderConfig(selection=sel, N_max=20))
            for sel in ("bound", "envelope")}
    assert reps["bound"].truncation >= reps["envelope"].truncation
    n = reps["bound"].truncation
    assert n >= 3
    assert (reps["bound"].estimate.padded(n) - a.padded(n)).norm("l2") < 1e-3


def test_unknown_selection():
    with pytest.raises(ValueError):
        recover_holder(lambda t: mp.one, LINEAR, 1, 1, 2, HolderConfig(selection="magic"))


def test_recover_holder_noiseless_four_modes():
    a = CoefficientSequence((0.5, -0.25, 0.125, 0.1))
    rep = recover_holder(dirichlet_evaluator(a, LINEAR), LINEAR, 1, 1, 2, HolderConfig(N=4))
    assert (rep.estimate - a).norm("l2") < 1e-40
    d = rep.diagnostics
    assert d["l1_estimate"] <= d["bound_rhs"]


def test_recover_holder_zero():
    rep = recover_holder(lambda t: mp.zero, LINEAR, 1, 1, 2, HolderConfig(N=5))
    assert all(v == 0 for v in rep.estimate)


def test_missing_sample_time():
    S = sample(lambda t: mp.one, [0, mp.mpf("0.5"), 1], horizon=2)
    with pytest.raises(MissingSampleError):
        build_system(LINEAR, 3, S)


def test_calibrated_constant_is_envelope():
    C = calibrate_C(LINEAR, 10, 1)
    for N in range(1, 11):
        sys = build_system(LINEAR, N, lambda t: mp.one)
        assert float(mp.log(sys.inv_norm_bound)) <= C * N + 1e-9


def test_literal_variant_is_smaller():
    sys = build_system(LINEAR, 6, lambda t: mp.one)
    assert inverse_norm_bound(sys.nodes, literal=True) < inverse_norm_bound(sys.nodes)
