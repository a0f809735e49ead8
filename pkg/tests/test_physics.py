"""Resistance <-> frequency <-> critical current maps and the barrier model.

Anchor values were computed independently (50-digit arithmetic) and frozen
here; the package must reproduce them in float64.
"""

import math

import pytest
from hypothesis import given, strategies as st

import jjtune as jt
from jjtune.errors import DomainError

# Frozen anchors (independent high-precision evaluation of the same physics).
F_AT_7781 = 5848756353.876269
F_AT_7629 = 5909460261.498225
IC_AT_7629 = 3.5002670802874876e-08
R_CEILING = 3858387.4278484723
R_AT_5P7GHZ = 8173.261651050668


def test_frequency_anchors():
    assert jt.qubit_frequency(7781.0) == pytest.approx(F_AT_7781, rel=1e-12)
    assert jt.qubit_frequency(7629.0) == pytest.approx(F_AT_7629, rel=1e-12)


def test_resistance_anchor():
    assert jt.resistance_for_frequency(5.7e9) == pytest.approx(R_AT_5P7GHZ, rel=1e-12)


def test_critical_current_anchor():
    assert jt.critical_current(7629.0) == pytest.approx(IC_AT_7629, rel=1e-12)
    # Ambegaokar-Baratoff: Ic scales as 1/R.
    assert jt.critical_current(2.0 * 7629.0) == pytest.approx(IC_AT_7629 / 2.0, rel=1e-12)


def test_max_resistance_is_frequency_root():
    rmax = jt.max_resistance()
    assert rmax == pytest.approx(R_CEILING, rel=1e-12)
    # frequency falls to ~0 approaching the root from below
    assert 0.0 < jt.qubit_frequency(rmax * (1.0 - 1e-9)) < 1e5


@given(st.floats(min_value=2e3, max_value=5e4))
def test_round_trip_resistance(r):
    f = jt.qubit_frequency(r)
    assert jt.resistance_for_frequency(f) == pytest.approx(r, rel=1e-9)


@given(st.floats(min_value=2e3, max_value=4e4), st.floats(min_value=1.01, max_value=2.0))
def test_frequency_monotone_decreasing(r, factor):
    assert jt.qubit_frequency(r * factor) < jt.qubit_frequency(r)


def test_domain_errors():
    with pytest.raises(DomainError):
        jt.qubit_frequency(0.0)
    with pytest.raises(DomainError):
        jt.qubit_frequency(-100.0)
    with pytest.raises(DomainError):
        jt.qubit_frequency(jt.max_resistance() * 1.01)
    with pytest.raises(DomainError):
        jt.resistance_for_frequency(0.0)
    with pytest.raises(DomainError):
        jt.resistance_for_frequency(-5e9)


def test_linearized_shift_slope():
    assert jt.linearized_shift(0.05) == -0.05 / 1.9
    assert jt.linearized_shift(-0.019) == pytest.approx(0.01, rel=1e-12)


def test_linearized_vs_exact_within_band():
    """At a +-5% resistance step the linear rule stays within 0.3% absolute."""
    base = 7781.0
    f0 = jt.qubit_frequency(base)
    for rs in (0.05, -0.05):
        exact = jt.qubit_frequency(base * (1.0 + rs)) / f0 - 1.0
        assert abs(exact - jt.linearized_shift(rs)) <= 0.003
    # the frozen +5% case
    exact = jt.qubit_frequency(base * 1.05) / f0 - 1.0
    assert exact == pytest.approx(-0.025233070499092514, rel=1e-10)
    assert abs(exact - jt.linearized_shift(0.05)) == pytest.approx(
        0.0010827189745916989, rel=1e-8
    )


@pytest.mark.parametrize("f_q", [4.8e9, 5.225e9, 6.0e9])
def test_local_slope_matches_charging_correction(f_q):
    """d ln f / d ln R = -(1 + Ec_h / f) / 2, checked by finite differences."""
    ec_h = jt.DEFAULT_MATERIAL.charging_energy_over_h
    r = jt.resistance_for_frequency(f_q)
    h = 1e-6 * r
    slope = (jt.qubit_frequency(r + h) - jt.qubit_frequency(r - h)) / (2 * h) * (r / f_q)
    assert slope == pytest.approx(-0.5 * (1.0 + ec_h / f_q), rel=1e-6)


def test_barrier_resistance_thickness_scaling():
    barrier = jt.DEFAULT_BARRIER
    ratio = jt.barrier_resistance(2.53, 0.1) / jt.barrier_resistance(2.43, 0.1)
    assert ratio == pytest.approx(math.exp(0.1 / barrier.tau_barrier), rel=1e-12)
    # one extra angstrom is a 29-30% bump at the default barrier constant
    assert 1.29 <= ratio <= 1.30


def test_barrier_resistance_area_scaling():
    r1 = jt.barrier_resistance(2.4, 0.1)
    r2 = jt.barrier_resistance(2.4, 0.2)
    assert r1 == pytest.approx(2.0 * r2, rel=1e-12)
    with pytest.raises(DomainError):
        jt.barrier_resistance(2.4, 0.0)
    with pytest.raises(DomainError):
        jt.barrier_resistance(-1.0, 0.1)
