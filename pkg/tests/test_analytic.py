import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitmem import analytic
from eitmem.params import derive

from conftest import medium

rates = st.floats(0.0, 5e-3)


@given(rates, rates, st.floats(0.05, 1.0), st.floats(-0.2, 0.2))
@settings(max_examples=200)
def test_fdt_exact(g0, gc, om2, w):
    p = medium(gamma0=g0, gammac=gc, omega_c2=om2)
    assert float(analytic.fdt_check(p, w, "exact")) < 1e-8


def test_fdt_table_first_order():
    p = medium(gamma0=1e-4, gammac=1e-4)
    w = np.linspace(-0.02, 0.02, 41)
    assert np.max(analytic.fdt_check(p, w, "table")) < 1e-2


def test_transmission_lossless_is_one():
    p = medium(gamma0=0.0, gammac=0.0)
    assert float(analytic.transmission(p, p.L, 0.0)) == 1.0


def test_reference_medium_calibration():
    p = medium()
    ch = analytic.channel(p, p.L, 0.005)
    assert ch.eta == pytest.approx(0.400, abs=5e-4)
    assert ch.noise == pytest.approx(0.1277, abs=5e-4)


def test_group_velocity_matches_small_omega():
    p = medium()
    vg = analytic.susceptibility(p, np.array([1e-7])).group_velocity[0]
    assert vg == pytest.approx(derive(p).v_g, rel=1e-5)


@given(rates, st.floats(0.0, 3.0), st.floats(0.0, 12.0))
def test_delay_spectrum_passive_without_exchange(g0, s_in, z):
    p = medium(gamma0=g0, gammac=0.0)
    eta = float(analytic.transmission(p, z, 0.004))
    s = float(analytic.delay_spectrum(p, z, 0.004, s_in))
    assert s == pytest.approx(eta * s_in + 1.0 - eta, abs=1e-12)


def test_delay_spectrum_rejects_negative_input():
    with pytest.raises(ValueError):
        analytic.delay_spectrum(medium(), 1.0, 0.0, -1.0)


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 3.0), st.floats(0.0, 5.0))
@settings(max_examples=100)
def test_amp_chain_slices_agree(a, alpha, z, s_in):
    cont = float(analytic.amp_chain(a, alpha, z, s_in, m=50))
    iterated = analytic.amp_chain_slices(a, alpha, z, s_in, 50)
    assert cont == pytest.approx(iterated, rel=1e-10, abs=1e-12)


@given(st.floats(0.0, 2.0), st.floats(0.0, 3.0))
def test_pure_amplifier(a, s_in):
    g = math.exp(a)
    assert float(analytic.amp_chain(a, 0.0, 1.0, s_in)) == pytest.approx(g * s_in + g - 1,
                                                                          rel=1e-12)


@given(st.floats(0.0, 2.0), st.floats(0.0, 3.0))
def test_pure_attenuator_keeps_vacuum(alpha, z):
    assert float(analytic.amp_chain(0.0, alpha, z, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_dc_noise_matches_chain():
    p = medium()
    a, alpha = analytic.eit_gain_loss(p)
    z = np.linspace(0.0, p.L, 7)
    s = analytic.amp_chain(a, alpha, z, 1.0)
    assert np.allclose(s - 1.0, analytic.dc_noise(p, z), rtol=1e-10, atol=1e-14)


def test_dc_noise_linear_when_no_dephasing():
    p = medium(gamma0=0.0, gammac=1e-4)
    a, _ = analytic.eit_gain_loss(p)
    assert float(analytic.dc_noise(p, 2.0)) == pytest.approx(4.0 * a)


def test_snr():
    assert float(analytic.snr(1.5, 2.0)) == pytest.approx(4.5)
    with pytest.raises(ValueError):
        analytic.snr(1.0, 0.0)


def test_einstein_commutators_hermitian():
    c = analytic.einstein_commutators(medium())
    assert np.allclose(c, c.conj().T)
