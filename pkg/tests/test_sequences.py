import math

import pytest
from hypothesis import given, strategies as st
from mpmath import mp

from dirichlet_heat.errors import StructuralError
from dirichlet_heat.sequences import (CoefficientSequence, EigenvalueSequence, GapParams,
                                      SequenceNormKind, norm, reciprocal_sum_bound,
                                      reciprocal_sum_class, validate_gap)

coeff_lists = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12)


def test_power_family_values():
    seq = EigenvalueSequence.power(1, 2, 5)
    assert [float(v) for v in seq.values] == [0.25, 1.0, 2.25, 4.0, 6.25]
    assert seq.value(3) == mp.mpf(9) / 4


def test_not_increasing_is_structural_error():
    with pytest.raises(StructuralError):
        EigenvalueSequence.explicit([1, 1, 2])
    with pytest.raises(StructuralError):
        EigenvalueSequence.explicit([-1, 2])


def test_norm_examples():
    assert norm(CoefficientSequence.unit(1), SequenceNormKind.h(1)) == mp.sqrt(2)
    a = CoefficientSequence((1, 0.5, 0.25))
    assert norm(a, "l1") == mp.mpf("1.75")
    zero = CoefficientSequence.zeros(4)
    for kind in ("l1", "l2", "linf", SequenceNormKind.h(2), SequenceNormKind.l1_weighted(1),
                 SequenceNormKind.l1_exp_weighted(1, 2)):
        assert norm(zero, kind) == 0


@given(coeff_lists, st.floats(0.1, 3))
def test_norm_ordering(vals, theta):
    a = CoefficientSequence(tuple(vals))
    l1, l2 = norm(a, "l1"), norm(a, "l2")
    assert l2 <= l1 * (1 + mp.mpf(2) ** -200)
    assert l1 <= norm(a, SequenceNormKind.l1_weighted(theta)) * (1 + mp.mpf(2) ** -200)


@given(coeff_lists, coeff_lists)
def test_sequence_arithmetic(u, v):
    a, b = CoefficientSequence(tuple(u)), CoefficientSequence(tuple(v))
    d = (a + b) - b
    n = max(len(a), len(b))
    assert all(abs(x - y) <= 1e-60 for x, y in zip(d.padded(n), a.padded(n)))
    assert a.padded(n + 3).support == a.support


def test_gap_unit_spacing():
    rep = validate_gap(EigenvalueSequence.power(0.5, 1, 50), params=GapParams(0, 1, 1, 1))
    assert rep.passed
    assert rep.d_star == 1 and rep.c_star == 1


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
def test_gap_subcritical_power(alpha):
    # (n+1)^(2a) - n^(2a) >= 2a / (n+1)^(1-2a) checked on k <= 1000
    seq = EigenvalueSequence.power(alpha, 1, 1000)
    rep = validate_gap(seq)
    assert rep.passed
    assert rep.params.beta0 == pytest.approx(1 - 2 * alpha)
    two_a = 2 * alpha
    worst = min(((n + 1) ** two_a - n ** two_a) * (n + 1) ** (1 - two_a) for n in range(1, 1000))
    assert worst >= two_a
    assert float(rep.d_star) == pytest.approx(worst, rel=1e-12)


def test_gap_failure_reported():
    seq = EigenvalueSequence.explicit([1, 2, 2.001], gap=GapParams(0, 1, 1, 1))
    assert not validate_gap(seq).passed


def test_reciprocal_sum_class():
    assert reciprocal_sum_class(EigenvalueSequence.power(1, 1, 10)) == "summable"
    assert reciprocal_sum_class(EigenvalueSequence.power(0.5, 1, 10)) == "divergent"
    assert reciprocal_sum_class(EigenvalueSequence.explicit([1, 3, 7])) == "unknown"


@given(st.floats(0.55, 2.0), st.floats(0.3, 3.0), st.integers(1, 200))
def test_reciprocal_prefix_below_analytic_bound(alpha, mu, count):
    seq = EigenvalueSequence.power(alpha, mu, count)
    assert mp.fsum(1 / v for v in seq.values) <= reciprocal_sum_bound(seq)


def test_json_round_trip():
    seq = EigenvalueSequence.power(0.75, 1.5, 7)
    back = EigenvalueSequence.from_json(seq.to_json())
    assert back.values == seq.values
    ex = EigenvalueSequence.explicit([mp.mpf(1) / 3, 2, math.pi])
    assert EigenvalueSequence.from_json(ex.to_json()).values == ex.values
