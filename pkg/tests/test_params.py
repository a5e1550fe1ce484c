import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitmem.params import (CouplingSchedule, PhysicalParams, PulseSpec, derive, gamma_to_hz,
                           hz_to_gamma, populations, validate)

from conftest import reference_pulse, medium


def test_rate_conversion_round_trip():
    assert hz_to_gamma(6.07e6) == pytest.approx(1.0)
    assert gamma_to_hz(hz_to_gamma(250.0)) == pytest.approx(250.0, rel=1e-15)


@given(st.floats(1.0, 1e4), st.floats(0.01, 1.0))
def test_optical_depth_round_trip(d, om2):
    p = medium(d=d, omega_c2=om2)
    assert p.optical_depth == pytest.approx(d, rel=1e-12)


@given(st.floats(0.0, 0.2))
def test_populations_sum_to_one(gc):
    assert sum(populations(1.0, gc)) == pytest.approx(1.0, abs=1e-15)


def test_inconsistent_atom_number_rejected():
    p = medium()
    with pytest.raises(ValueError):
        PhysicalParams(gamma0=0, gammac=0, g=p.g, N=2 * p.N, n=p.n, A=p.A, L=p.L,
                       c_light=p.c_light, omega_c=p.omega_c)


def test_negative_rates_rejected():
    with pytest.raises(ValueError):
        medium(gamma0=-1e-3)


def test_lossless_derived_quantities():
    p = medium(gamma0=0.0, gammac=0.0)
    der = derive(p)
    assert der.d_prime == pytest.approx(der.d, rel=1e-14)
    assert der.Gamma_p == pytest.approx(p.omega_c ** 2)
    assert der.Gamma_p * p.L / der.v_g == pytest.approx(der.d_prime, rel=1e-12)
    # dark state: the write-read factor is one
    assert der.nu * der.chi * p.L / (der.Gamma_p * der.d_prime) == pytest.approx(1.0, rel=1e-12)


def test_reference_group_delay():
    der = derive(medium())
    assert 12.0 / der.v_g == pytest.approx(2960.0, rel=2e-3)


def test_coupling_off_flagged():
    p = medium().replace(omega_c=0.0)
    der = derive(p)
    assert der.coupling_off and der.v_g == 0.0 and der.Gamma_p == p.gamma_d


def test_reference_validity_margins():
    rep = validate(medium(), reference_pulse())
    assert rep.ok
    assert rep["pump_depletion"].margin > 10
    assert rep["within_eit_bandwidth"].margin > 10
    assert rep["modulation_above_fourier_width"].advisory


def test_bandwidth_equal_to_pumping_fails_margin():
    p = medium()
    pulse = PulseSpec(duration_T=1.0 / derive(p).Gamma_p, carrier_amp=1.0, mod_freq=0.0)
    rep = validate(p, pulse)
    assert not rep["within_eit_bandwidth"].passed
    assert rep["within_eit_bandwidth"].margin == pytest.approx(1.0)


@given(st.floats(0.0, 200.0), st.floats(0.1, 100.0), st.floats(0.0, 400.0))
@settings(max_examples=50)
def test_schedule_is_piecewise_constant(t_off, hold, t):
    s = CouplingSchedule(omega_on=0.5, t_off=t_off, t_on=t_off + hold)
    expected = 0.0 if t_off <= t < t_off + hold else 0.5
    assert s.value(t) == expected
    assert s.hold_time == pytest.approx(hold)


def test_schedule_order_checked():
    with pytest.raises(ValueError):
        CouplingSchedule(omega_on=0.5, t_off=10.0, t_on=5.0)


def test_pulse_quadrature_convention():
    p = PulseSpec(duration_T=50.0, carrier_amp=0.0, mod_freq=0.0, mod_depth_plus=3.0,
                  mod_depth_minus=-2.0, shape="cw")
    e = p.field(np.array([1.0]))[0]
    assert 2 * e.real == pytest.approx(6.0)
    assert -2 * e.imag == pytest.approx(4.0)


@given(st.floats(1.0, 500.0))
def test_supergauss_width(T):
    p = PulseSpec(duration_T=T, carrier_amp=1.0, mod_freq=0.0)
    edge = p.envelope(np.array([0.0, T]))
    assert np.allclose(edge, math.exp(-2.0))
    assert p.envelope(np.array([T / 2]))[0] == 1.0
