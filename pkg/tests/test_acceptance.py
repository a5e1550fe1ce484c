"""Acceptance suite: one test per criterion, named test_criterion_<n>_*.

Run with ``pytest tests/test_acceptance.py -v -s``; the terminal summary ends
with one PASS/FAIL line per criterion.  Criteria that cannot be met by a
faithful implementation are marked as strict expected failures with the
reason, and are reported as FAIL.
"""

import functools
import json
import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from conftest import medium
from eitmem import analytic, benchmarks as B, storage
from eitmem.cli import EXIT_OK, main
from eitmem.io import load_config
from eitmem.params import PulseSpec, derive
from eitmem.sde import GridSpec, Readout, run_ensemble, storage_protocol

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
DEPTHS = (0.2, 0.4, 0.6, 0.8, 1.0)
W_M = 0.005


# ---------------------------------------------------------------------------
# 1. storage of the reference pulse

def _reference_run(n_traj):
    cfg = load_config(CONFIGS / "reference.toml")
    grid = GridSpec(**{**cfg.grid.__dict__, "n_traj": n_traj})
    t0 = time.perf_counter()
    res = storage_protocol(cfg.params, grid, cfg.pulse, cfg.schedule, readout=cfg.readout)
    sp = res.spectrum
    return (time.perf_counter() - t0, (sp.eta_plus[0], sp.eta_minus[0]),
            (sp.V_plus[0] - 1, sp.V_minus[0] - 1))


@pytest.mark.slow
def test_criterion_1_reference_storage_run():
    wall, eta, vn = _reference_run(500)
    print(f"\n  500 trajectories: {wall:.0f} s, eta = {eta}, V_noise = {vn}")
    assert wall < 300.0
    assert all(abs(e - 0.40) <= 0.10 for e in eta)
    assert all(abs(v - 0.12) <= 0.10 for v in vn)
    wall, eta, vn = _reference_run(2000)
    print(f"  2000 trajectories: {wall:.0f} s, eta = {eta}, V_noise = {vn}")
    assert all(abs(e - 0.40) <= 0.05 for e in eta)
    assert all(abs(v - 0.12) <= 0.05 for v in vn)


# ---------------------------------------------------------------------------
# 2. stochastic engine against the closed form along the medium, near DC

PROFILE_RATES = ((0.0, 0.005), (0.005, 0.005), (0.005, 0.0))


@functools.lru_cache(maxsize=None)
def depth_profile_table():
    """Per (rates, depth): engine and closed-form V and SNR with standard errors."""
    rows = []
    pulse = PulseSpec(duration_T=50.0, carrier_amp=20.0, mod_freq=0.0, shape="cw")
    ro = Readout(window=(7500.0, 15500.0), omegas=(0.0,), z_fracs=DEPTHS)
    for g0, gc in PROFILE_RATES:
        p = medium(gamma0=g0, gammac=gc)
        grid = GridSpec(nz=100, dt=0.5, t_total=15500.0, n_traj=100, seed=20240611)
        res = run_ensemble(p, grid, pulse, readout=ro)
        n = res.traj_used
        for s in res.spectra:
            a_in = s.alpha_plus[0] / math.sqrt(s.eta_plus[0])
            v_a = float(analytic.delay_spectrum(p, s.z, 0.0, 1.0))
            eta_a = float(analytic.transmission(p, s.z, 0.0))
            snr_a = float(analytic.snr(a_in * math.sqrt(eta_a), v_a))
            snr = float(analytic.snr(s.alpha_plus[0], s.V_plus[0]))
            se_alpha = 0.5 * math.sqrt(max(s.V_plus[0] - 1.0, 0.0) / (2 * n))
            se_snr = snr * math.hypot(2 * se_alpha / s.alpha_plus[0], s.se_plus[0] / s.V_plus[0])
            rows.append(dict(rates=(g0, gc), z=s.z, V=(s.V_plus[0], s.V_minus[0]),
                             se=(s.se_plus[0], s.se_minus[0]), V_a=v_a, eta=s.eta_plus[0],
                             eta_a=eta_a, snr=snr, se_snr=se_snr, snr_a=snr_a))
    return rows


def _agrees(x, y, se):
    # a zero standard error means an exact result; allow rounding only
    return abs(x - y) <= 3.0 * se + 1e-9 * max(1.0, abs(y))


def _profile_failures(rows):
    bad = []
    for r in rows:
        for q, v, se in zip("+-", r["V"], r["se"]):
            if not _agrees(v, r["V_a"], se):
                bad.append(f"{r['rates']} z={r['z']:.1f} V{q}: {v:.3f}+-{se:.3f} "
                           f"vs {r['V_a']:.3f}")
        # the signal is carried by X+ only
        if not _agrees(r["snr"], r["snr_a"], r["se_snr"]):
            bad.append(f"{r['rates']} z={r['z']:.1f} SNR+: {r['snr']:.4g}"
                       f"+-{r['se_snr']:.2g} vs {r['snr_a']:.4g}")
    return bad


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason=(
    "closed form uses first-order steady states; at Omega_c^2 = 0.22 and gamma_c = 0.005 "
    "its transmission is off by tens of percent (the engine matches the exact "
    "linearisation), so V and SNR disagree beyond 3 standard errors"))
def test_criterion_2_engine_matches_closed_form_along_medium():
    bad = _profile_failures(depth_profile_table())
    for line in bad:
        print("  ", line)
    assert not bad


@pytest.mark.slow
def test_depth_profile_noise_agrees_where_first_order_holds():
    """Supporting check: the combinations without the first-order failure agree in V.

    Without exchange the only excess is the probe-driven saturation term, bounded here
    well below the exchange noise of the other combinations.
    """
    for r in depth_profile_table():
        if r["rates"] == (0.005, 0.005):
            for v, se in zip(r["V"], r["se"]):
                assert _agrees(v, r["V_a"], se), r
        elif r["rates"] == (0.005, 0.0):
            assert r["V_a"] == 1.0
            assert all(-1e-9 <= v - 1.0 < 1e-5 for v in r["V"]), r


# ---------------------------------------------------------------------------
# 3. no ground-state exchange keeps the output at shot noise

@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason=(
    "the probe itself puts population in the upper state, which feeds normally ordered "
    "noise even at gamma_c = 0; the excess is about 3e-6 at the probe amplitude used and "
    "scales with its square, while the standard error of the sample variance is about "
    "an eighth of it at any amplitude, so 3 standard errors never cover it"))
def test_criterion_3_shot_noise_without_exchange():
    pulse = PulseSpec(duration_T=50.0, carrier_amp=0.0, mod_freq=W_M, mod_depth_plus=20.0,
                      mod_depth_minus=-20.0, shape="cw")
    ro = Readout(window=(2000.0, 4000.0), omegas=(0.0, W_M, 0.01), z_fracs=DEPTHS)
    for g0 in (0.0, 0.005):
        p = medium(gamma0=g0, gammac=0.0)
        res = run_ensemble(p, GridSpec(nz=100, dt=0.5, t_total=4000.0, n_traj=64, seed=3),
                           pulse, readout=ro)
        for s in res.spectra:
            for v, se in ((s.V_plus, s.se_plus), (s.V_minus, s.se_minus)):
                assert np.all(np.abs(v - 1.0) <= 3.0 * se + 1e-9)


# ---------------------------------------------------------------------------
# 4. amplifier chain

EIT_COEFFS = [medium(gamma0=g0, gammac=gc) for g0, gc in
              ((None, None), (0.0, 0.005), (0.005, 0.005), (0.005, 0.0), (1e-4, 3e-4))]


@pytest.mark.xfail(strict=True, reason=(
    "the slice recursion is first order in dz, so m = 1e4 differs from the continuum by "
    "about ((a - alpha) z)^2 / 2m relative; near-DC coefficients of the reference medium give "
    "1.6e-6 and other tested rate pairs up to 2e-5, above the 1e-6 tolerance"))
def test_criterion_4_amplifier_chain():
    for p in EIT_COEFFS:
        a, alpha = analytic.eit_gain_loss(p)
        assert np.allclose(analytic.amp_chain(a, alpha, p.L, 1.0) - 1.0,
                           analytic.dc_noise(p, p.L), rtol=1e-10, atol=1e-14)
    for a in (0.01, 0.5, 2.0):
        for s_in in (0.5, 1.0, 3.0):
            g = math.exp(a * 1.5)
            assert float(analytic.amp_chain(a, 0.0, 1.5, s_in)) == pytest.approx(
                g * s_in + g - 1, rel=1e-15, abs=1e-15)
    worst = 0.0
    for p in EIT_COEFFS:
        a, alpha = analytic.eit_gain_loss(p)
        for s_in in (0.3, 1.0, 3.0):
            cont = float(analytic.amp_chain(a, alpha, p.L, s_in))
            sl = analytic.amp_chain_slices(a, alpha, p.L, s_in, 10_000)
            worst = max(worst, abs(sl - cont) / abs(cont))
    print(f"\n  worst m = 1e4 relative error {worst:.2e}")
    assert worst < 1e-6


# ---------------------------------------------------------------------------
# 5. fluctuation-dissipation identity

def test_criterion_5_fdt_identity():
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(20):
        d = 10 ** rng.uniform(1, 4)
        om2 = rng.uniform(0.02, 1.0)
        g0, gc = rng.uniform(0, 5e-3, size=2)
        p = medium(d=d, gamma0=g0, gammac=gc, omega_c2=om2)
        gp = derive(p).Gamma_p
        w = np.linspace(-gp, gp, 201)
        worst = max(worst, float(np.max(analytic.fdt_check(p, w, "exact"))))
    print(f"\n  worst normalised residual {worst:.2e}")
    assert worst < 1e-8


# ---------------------------------------------------------------------------
# 6. storage maps

def _pulse(center, width):
    return lambda t: np.exp(-((np.asarray(t, dtype=float) - center) / width) ** 2) * (1 + 0.3j)


def _kernel_error_at_margins(margin):
    """Kernel write and read against the ideal maps with both margins equal to ``margin``."""
    # fill margin L/(v_g T) and EIT margin Gamma_p T are both `margin` when d' = margin^2
    p = medium(d=margin ** 2, gamma0=0.0, gammac=0.0)
    der = derive(p)
    T = p.L / der.v_g / margin
    f = _pulse(0.5 * T, T / 5)
    t_off = 1.3 * T
    t = np.linspace(-T, t_off, 3000)
    t_out = np.linspace(t_off, t_off + 1.02 * p.L / der.v_g, 3000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ideal = storage.write(f, p, t_off=t_off, t=t, nz=600)
        kern = storage.write(f, p, t_off=t_off, t=t, nz=600, mode="kernel", duration_T=T)
        rep = storage.end_to_end(p, 0.0, PulseSpec(duration_T=T, carrier_amp=1.0, mod_freq=0.0))
        _, out_i = storage.read(ideal, p, t_out, t_on=t_off)
        _, out_k = storage.read(ideal, p, t_out, t_on=t_off, mode="kernel")
    rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)  # noqa: E731
    return rep.bounds_margins, rel(kern.samples, ideal.samples), rel(out_k, out_i)


@pytest.mark.xfail(strict=True, reason=(
    "kernel error is set by d' = (fill margin) x (EIT margin), not by the margins "
    "separately; with both margins at 10 the write and read maps differ from the ideal "
    "ones by tens of percent (they reach 1% only near d' ~ 1e5)"))
def test_criterion_6_storage_identity_and_kernel():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d, om2 = 10 ** rng.uniform(1.7, 3.7), rng.uniform(0.05, 1.0)
        hold, frac = rng.uniform(0, 500), rng.uniform(0.02, 0.5)
        p = medium(d=d, gamma0=0.0, gammac=0.0, omega_c2=om2)
        der = derive(p)
        T = frac * p.L / der.v_g
        f = _pulse(0.5 * T, T / 6)
        t_out, e_out = storage.round_trip(f, p, t_off=T, t_on=T + hold, nz=400)
        assert np.max(np.abs(e_out - f(t_out - hold - p.L / der.v_g))) < 1e-10
        rep = storage.end_to_end(p, hold)
        assert abs(rep.tb_product - rep.d_prime) <= 1e-10 * rep.d_prime
    margins, e_write, e_read = _kernel_error_at_margins(10.0)
    print(f"\n  margins {margins}: kernel write error {e_write:.3f}, read error {e_read:.3f}")
    assert min(margins) >= 10.0 - 1e-9
    assert e_write < 0.01 and e_read < 0.01


# ---------------------------------------------------------------------------
# 7. benchmark fixed points

def test_criterion_7_benchmark_fixed_points():
    assert B.fidelity(1.0, 1.0, 2.0) == 0.5
    assert B.fidelity(1.0, 1.0, 1.0) == 2.0 / 3.0
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        a = tuple(rng.uniform(-3, 3, 2))
        g = tuple(rng.uniform(0, 2, 2))
        v = tuple(rng.uniform(0, 4, 2))
        s_in, s_out = B.channel_states(a, g, v)
        worst = max(worst, abs(B.fidelity_overlap(s_in, s_out) - B.fidelity(a, g, v)))
    print(f"\n  worst closed-form vs overlap difference {worst:.1e}")
    assert worst < 1e-6
    eta = np.linspace(0, 1, 101)
    T, V = B.limit_curves("passive_loss", eta)
    pts = [B.tv_eit(e, 0.0) for e in eta]
    assert np.allclose(T, 2 * eta, rtol=0, atol=1e-15) and np.allclose(V, 1 - eta, atol=1e-15)
    assert np.allclose([q.T for q in pts], T, atol=1e-15)
    assert np.allclose([q.V for q in pts], V, atol=1e-15)
    G = np.linspace(1, 20, 96)
    T, V = B.limit_curves("amplifier", G)
    pts = [B.tv_from_channel(g, 2 * g - 1) for g in G]
    assert np.allclose(T, 2 * G / (2 * G - 1), rtol=1e-15) and np.allclose(V, G - 1, atol=1e-15)
    assert np.allclose([q.T for q in pts], T, rtol=1e-15)
    assert np.allclose([q.V for q in pts], V, rtol=1e-15, atol=1e-14)
    m = B.regime_map("loss_noise", np.linspace(0, 1, 101), np.linspace(0, 2, 101))
    ee, vv = np.meshgrid(m.x, m.y, indexing="ij")
    in_c = m.labels == B.Region.C.value
    assert in_c.any()
    assert np.all(np.sqrt(ee[in_c]) > 0.5) and np.all(vv[in_c] < 1.0)


# ---------------------------------------------------------------------------
# 8. decoherence sweep on the reference medium

def test_criterion_8_decoherence_sweep():
    p = medium()
    g0s = np.linspace(0.0, 2e-4, 9)
    gcs = np.linspace(0.0, 2e-4, 9)
    T = np.empty((len(g0s), len(gcs)))
    regions = set()
    for i, g0 in enumerate(g0s):
        tr = B.tv_trajectory(p, [(g0, gc) for gc in gcs], W_M)
        assert tr.monotone_T
        T[i] = [q.T for q in tr.points]
        regions |= set(tr.regions)
    for j, gc in enumerate(gcs):
        tr = B.tv_trajectory(p, [(g0, gc) for g0 in g0s], W_M)
        assert tr.monotone_T
    assert np.all(np.diff(T, axis=0) <= 1e-12) and np.all(np.diff(T, axis=1) <= 1e-12)
    zero = B.tv_trajectory(p, [(0.0, 0.0)], W_M).points[0]
    print(f"\n  zero decoherence (T, V) = ({zero.T:.4f}, {zero.V:.4f}); regions {regions}")
    assert B.classify(zero) is B.Region.C
    assert zero.T < 2.0 and zero.V > 0.0
    assert B.Region.D not in regions


# ---------------------------------------------------------------------------
# 9. determinism across thread counts

def test_criterion_9_thread_independent_outputs(tmp_path):
    cfg = CONFIGS / "quick.toml"
    files = ("spectrum.csv", "spectra.csv", "probes.csv", "mean_field.csv")
    outs = {}
    for n in (1, 4, 16):
        out = tmp_path / f"t{n}"
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--threads", str(n)]) == EXIT_OK
        assert main(["tv-map", "--out", str(out / "map"), "--threads", str(n)]) == EXIT_OK
        outs[n] = [(out / f).read_bytes() for f in files]
        outs[n].append((out / "map" / "tv_map.csv").read_bytes())
        outs[n].append(json.loads((out / "manifest.json").read_text())["config_hash"])
    assert outs[1] == outs[4] == outs[16]
