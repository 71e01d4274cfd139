import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timeop.discrete_time import (
    DiscreteSpectrumState,
    discrete_uncertainty,
    poincare_period,
    quasi_cycle_peak,
    sawtooth_eval,
    write_cycle_trace,
)
from timeop.errors import DomainError, NoCycleError


@pytest.mark.parametrize(
    "levels,D",
    [([0.0, 1.0], 1.0), ([0.0, 2.0, 6.0], 2.0), ([1.0, 1.5, 2.25], 0.25), ([0.0, 0.3, 0.5], 0.1)],
)
def test_poincare_period(levels, D):
    d, T = poincare_period(levels)
    assert d == pytest.approx(D, rel=1e-9)
    assert T == pytest.approx(2 * math.pi / D, rel=1e-9)


def test_poincare_respects_hbar():
    _, T = poincare_period([0.0, 1.0], hbar=2.0)
    assert T == pytest.approx(4 * math.pi)


def test_incommensurate_levels_have_no_cycle():
    with pytest.raises(NoCycleError):
        poincare_period([0.0, 1.0, math.sqrt(2)])


def test_single_level_period_requires_two_levels():
    with pytest.raises(DomainError):
        poincare_period([1.0])


def test_packet_recurs_after_one_period():
    st_ = DiscreteSpectrumState.build([0.0, 2.0, 6.0], [1.0, 0.5, 0.2j])
    assert st_.autocorrelation(st_.T) == pytest.approx(1.0, abs=1e-12)
    t_peak, height = quasi_cycle_peak(st_)
    assert t_peak == pytest.approx(st_.T, rel=1e-4)
    assert height == pytest.approx(1.0, abs=1e-8)


def test_sawtooth_wraps():
    T = 2.0
    assert sawtooth_eval(0.6 * T, T) == pytest.approx(-0.4 * T)
    assert sawtooth_eval(0.3, T) == pytest.approx(0.3)
    assert sawtooth_eval(-T / 2, T) == pytest.approx(-T / 2)
    with pytest.raises(DomainError):
        sawtooth_eval(0.1, 0.0)


def test_single_level_moments():
    T = 2 * math.pi
    rep = discrete_uncertainty(DiscreteSpectrumState.single_level(0.7, T))
    assert rep.t_var == pytest.approx(T**2 / 12, rel=1e-10)
    assert rep.rhs_bound == pytest.approx(0.0, abs=1e-10)
    assert rep.energy_var == 0.0


def test_two_level_sides_match_closed_forms():
    rep = discrete_uncertainty(DiscreteSpectrumState.build([0.0, 1.0], [1.0, 1.0]))
    assert rep.product == pytest.approx((math.pi**2 / 3 - 2) / 4, abs=1e-6)
    assert rep.rhs_bound == pytest.approx(1.0, abs=1e-6)
    # the two sides are not equal; only the commutator bound holds
    assert rep.product >= rep.robertson_bound


def test_gamma_c_must_lie_inside_cycle():
    s = DiscreteSpectrumState.build([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        discrete_uncertainty(s, gamma_c=s.T)


def test_unnormalized_populations_rejected():
    with pytest.raises(DomainError):
        DiscreteSpectrumState.build([0.0, 1.0], [1.0, 1.0], normalize=False)


def test_cycle_trace_written(tmp_path):
    s = DiscreteSpectrumState.build([0.0, 1.0], [1.0, 1.0])
    path = tmp_path / "trace.csv"
    write_cycle_trace(s, path, n=11)
    rows = path.read_text().strip().splitlines()
    assert len(rows) == 12


@settings(max_examples=40, deadline=None)
@given(
    weights=st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5),
    spacing=st.sampled_from([0.5, 1.0, 2.0]),
    frac=st.floats(-0.45, 0.45),
)
def test_robertson_bound_property(weights, spacing, frac):
    levels = spacing * np.arange(len(weights))
    s = DiscreteSpectrumState.build(levels, weights)
    rep = discrete_uncertainty(s, gamma_c=frac * s.T)
    assert rep.product >= rep.robertson_bound - 1e-8
