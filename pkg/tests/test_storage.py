import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitmem import storage
from eitmem.params import PulseSpec, derive

from conftest import medium


def gaussian(center, width):
    return lambda t: np.exp(-((np.asarray(t, dtype=float) - center) / width) ** 2) * (1 + 0.3j)


@given(st.floats(50.0, 5000.0), st.floats(0.05, 1.0), st.floats(0.0, 500.0),
       st.floats(0.02, 0.5))
@settings(max_examples=60, deadline=None)
def test_ideal_round_trip_is_identity(d, om2, hold, frac):
    p = medium(d=d, gamma0=0.0, gammac=0.0, omega_c2=om2)
    der = derive(p)
    T = frac * p.L / der.v_g
    f = gaussian(0.5 * T, T / 6)
    t_off = T
    t_out, e_out = storage.round_trip(f, p, t_off=t_off, t_on=t_off + hold, nz=400)
    expected = f(t_out - hold - p.L / der.v_g)
    assert np.max(np.abs(e_out - expected)) < 1e-10


@given(st.floats(0.0, 1e-3), st.floats(0.0, 1e-3), st.floats(0.0, 1e4))
def test_hold_decays_at_dephasing_rate(g0, gc, dt):
    p = medium(gamma0=g0, gammac=gc)
    coh = storage.StoredCoherence(np.ones(8, complex), np.arange(8.0), "z", 0.0, 1.0, p.L)
    held = storage.hold(coh, dt, p)
    assert np.allclose(held.samples, math.exp(-p.gamma_d * dt))
    assert held.time_tag == dt
    assert np.allclose(held.to_k().samples, coh.to_k().samples * math.exp(-p.gamma_d * dt))


def test_negative_hold_rejected():
    coh = storage.StoredCoherence(np.ones(4, complex), np.arange(4.0), "z", 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        storage.hold(coh, -1.0, medium())


@given(st.integers(4, 64), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_k_space_round_trip_and_parseval(n, pad, seed):
    rng = np.random.default_rng(seed)
    L = 12.0
    z = (np.arange(n) + 0.5) * L / n
    coh = storage.StoredCoherence(rng.normal(size=n) + 1j * rng.normal(size=n), z, "z",
                                  0.0, 1.0, L)
    k = coh.to_k(pad)
    assert k.norm2() == pytest.approx(coh.norm2(), rel=1e-12)
    back = k.to_z(n)
    assert np.allclose(back.samples, coh.samples, atol=1e-12)
    # the k samples are the transform (1/L) int s(z) exp(i k z) dz
    direct = (L / n / L) * np.exp(1j * np.outer(k.grid[:5], z)) @ coh.samples
    assert np.allclose(k.samples[:5], direct, atol=1e-12)


@given(st.floats(10.0, 5000.0), st.floats(0.05, 1.0))
def test_time_bandwidth_equals_effective_depth(d, om2):
    rep = storage.end_to_end(medium(d=d, gamma0=0.0, gammac=0.0, omega_c2=om2), 0.0)
    assert abs(rep.tb_product - rep.d_prime) <= 1e-10 * rep.d_prime
    assert rep.amplitude_factor == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.0, 5e-3), st.floats(0.0, 5e-3))
def test_transfer_factor_bounded_unless_exchange_dominates(g0, gc):
    rep = storage.end_to_end(medium(gamma0=g0, gammac=gc), 0.0)
    threshold = 3 * gc * gc / (1 - 3 * gc)
    if g0 >= 1.01 * threshold:
        assert rep.amplitude_factor <= 1.0
    elif g0 <= 0.99 * threshold:
        assert rep.amplitude_factor > 1.0


def test_transfer_factor_includes_hold():
    p = medium()
    r0 = storage.end_to_end(p, 0.0)
    r1 = storage.end_to_end(p, 100.0)
    assert r1.amplitude_factor == pytest.approx(r0.amplitude_factor * math.exp(-p.gamma_d * 100))


def test_margins_reported():
    p = medium()
    pulse = PulseSpec(duration_T=50.0, carrier_amp=1.0, mod_freq=0.0)
    rep = storage.end_to_end(p, 0.0, pulse)
    der = derive(p)
    assert rep.bounds_margins[0] == pytest.approx(p.L / (der.v_g * 50.0))
    assert rep.bounds_margins[1] == pytest.approx(der.Gamma_p * 50.0)


def test_truncation_warned_and_reported():
    p = medium(gamma0=0.0, gammac=0.0)
    der = derive(p)
    T = 2.0 * p.L / der.v_g
    t = np.linspace(0.0, T, 2000)
    f = gaussian(0.5 * T, T / 6)
    with pytest.warns(UserWarning):
        coh = storage.write(f, p, t_off=T, t=t, duration_T=T)
    assert coh.truncation_loss > 0.1


def test_read_needs_coupling():
    p = medium()
    coh = storage.StoredCoherence(np.ones(4, complex), np.arange(4.0), "z", 0.0, 1.0, p.L)
    with pytest.raises(ValueError):
        storage.read(coh, p.replace(omega_c=0.0))


def test_sinc_mode_reduces_to_ideal_for_wide_band():
    p = medium(gamma0=0.0, gammac=0.0)
    der = derive(p)
    T = 0.1 * p.L / der.v_g
    t = np.linspace(-T, 1.3 * T, 3000)
    f = gaussian(0.5 * T, T / 5)
    a = storage.write(f, p, t_off=1.3 * T, t=t, nz=600)
    b = storage.write(f, p, t_off=1.3 * T, t=t, nz=600, mode="sinc", t_load=math.inf,
                      bandwidth=1e3 / T)
    assert np.linalg.norm(a.samples - b.samples) / np.linalg.norm(a.samples) < 1e-6


def kernel_errors(d, fill_margin=10.0):
    p = medium(d=d, gamma0=0.0, gammac=0.0)
    der = derive(p)
    T = p.L / der.v_g / fill_margin
    f = gaussian(0.5 * T, T / 5)
    t_off = 1.3 * T
    t = np.linspace(-T, t_off, 3000)
    t_out = np.linspace(t_off, t_off + 1.02 * p.L / der.v_g, 3000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ideal = storage.write(f, p, t_off=t_off, t=t, nz=600)
        kern = storage.write(f, p, t_off=t_off, t=t, nz=600, mode="kernel", duration_T=T)
        _, out_i = storage.read(ideal, p, t_out, t_on=t_off)
        _, out_k = storage.read(ideal, p, t_out, t_on=t_off, mode="kernel")
    rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)  # noqa: E731
    return rel(kern.samples, ideal.samples), rel(out_k, out_i)


@pytest.mark.slow
def test_kernel_converges_to_ideal_with_depth():
    errs = [kernel_errors(d) for d in (1e4, 1e5, 1e6)]
    for (w0, r0), (w1, r1) in zip(errs, errs[1:]):
        assert w1 < 0.2 * w0 and r1 < 0.2 * r0
    assert max(errs[-1]) < 0.01
