"""Linearised Heisenberg-Langevin results for the EIT delay line.

Susceptibility, steady states, Langevin correlation rows, the
fluctuation-dissipation identity, output spectra with excess noise and the
generic amplifier/attenuator chain.  Units follow :mod:`eitmem.params`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhysicalParams, derive, populations


@dataclass(frozen=True)
class SteadyStates:
    s11: float
    s22: float
    s33: float
    s12: complex
    s13: complex
    s23: complex

    @property
    def s32(self) -> complex:
        return np.conj(self.s23)


@dataclass(frozen=True)
class Susceptibility:
    lam: np.ndarray
    mu: np.ndarray
    group_velocity: np.ndarray


@dataclass(frozen=True)
class LangevinTable:
    """Tabulated Langevin correlation rows, as rates (the 1/(nA) is implicit)."""

    f13_f13dag: float
    f13dag_f13: float
    f13dag_f12: complex
    f12dag_f13: complex
    f12_f12dag: float
    f12dag_f12: float

    @property
    def comm13(self) -> float:
        return self.f13_f13dag - self.f13dag_f13

    @property
    def comm12(self) -> float:
        return self.f12_f12dag - self.f12dag_f12


@dataclass(frozen=True)
class ChannelPoint:
    eta: float
    noise: float
    nf: float


def _kappa(p: PhysicalParams) -> float:
    return p.g ** 2 * p.N / p.c_light


def steady_states(params: PhysicalParams, field: complex = 1.0) -> SteadyStates:
    """First-order steady states for a weak probe of amplitude ``field``."""
    p = params
    if p.omega_c <= 0:
        raise ValueError("steady states need the coupling on")
    s11, s22, s33 = populations(p.gamma, p.gammac)
    om = p.omega_c
    return SteadyStates(
        s11=s11, s22=s22, s33=s33,
        s12=-p.g * field / om,
        s13=1j * p.g * p.gamma0 * field / om ** 2,
        s23=1j * p.gammac / om,
    )


def susceptibility(params: PhysicalParams, omega) -> Susceptibility:
    """Lambda(omega) and mu(omega) in closed form, v_g = -omega/Im Lambda."""
    p = params
    w = np.asarray(omega, dtype=float)
    st = steady_states(p)
    gd = p.gamma_d
    mu = p.omega_c ** 2 - 1j * w * (p.gamma + 0.5 * gd)
    num = (gd - 1j * w) * (st.s11 - st.s33) - 1j * st.s32 * p.omega_c
    lam = _kappa(p) * num / mu
    with np.errstate(divide="ignore", invalid="ignore"):
        vg = np.where(w == 0, derive(p).v_g, -w / np.imag(lam))
    return Susceptibility(lam=lam, mu=mu, group_velocity=vg)


def transmission(params: PhysicalParams, z, omega):
    """Intensity transmission eta(z, omega) = exp(-2 Re Lambda z)."""
    lam = susceptibility(params, omega).lam
    return np.exp(-2.0 * np.real(lam) * np.asarray(z, dtype=float))


def _rows(p: PhysicalParams, gamma0: float, gammac: float):
    gam = p.gamma
    s11, s22, s33 = populations(gam, gammac)
    s23 = 1j * gammac / p.omega_c
    s32 = np.conj(s23)
    return (
        (gam + gammac + gamma0) * s33 + 2 * gam * s11 - gammac * (s11 - s22),
        2 * gam * s33 - 2 * (gam + gamma0 + gammac) * s33,
        (gammac + gamma0) * s32,
        (gammac + gamma0) * s23,
        (gam + gammac + gamma0) * s33 + gammac * (s22 + s11) + 2 * gamma0 * s11,
        gam * s33 + gammac * (s22 + s11) + 2 * gamma0 * s22,
    )


def langevin_table(params: PhysicalParams, steady: SteadyStates | None = None,
                   first_order: bool = False) -> LangevinTable:
    """Evaluate the six non-zero Langevin correlation rows.

    With ``first_order`` the rows are truncated to linear order in
    gamma0/gamma and gammac/gamma.  The rows are quadratic polynomials in the
    rates once the steady states are substituted, so the truncation is
    f(0) + (f(r) - f(-r))/2, evaluated exactly.
    """
    p = params
    if steady is not None and not first_order:
        gam, g0, gc = p.gamma, p.gamma0, p.gammac
        s11, s22, s33 = steady.s11, steady.s22, steady.s33
        rows = (
            (gam + gc + g0) * s33 + 2 * gam * s11 - gc * (s11 - s22),
            2 * gam * s33 - 2 * (gam + g0 + gc) * s33,
            (gc + g0) * steady.s32,
            (gc + g0) * steady.s23,
            (gam + gc + g0) * s33 + gc * (s22 + s11) + 2 * g0 * s11,
            gam * s33 + gc * (s22 + s11) + 2 * g0 * s22,
        )
    elif first_order:
        f0 = _rows(p, 0.0, 0.0)
        fp = _rows(p, p.gamma0, p.gammac)
        fm = _rows(p, -p.gamma0, -p.gammac)
        rows = tuple(a + 0.5 * (b - c) for a, b, c in zip(f0, fp, fm))
    else:
        rows = _rows(p, p.gamma0, p.gammac)
    r = [complex(x) for x in rows]
    return LangevinTable(r[0].real, r[1].real, r[2], r[3], r[4].real, r[5].real)


def einstein_commutators(params: PhysicalParams) -> np.ndarray:
    """Noise commutator matrix <[F_a, F_b^+]> for (F13, F12).

    Generalised Einstein relation for the linear pair (sigma13, sigma12) with
    drift matrix A and equal-time commutators Q: C = -(A Q + Q A^+).
    """
    p = params
    st = steady_states(p)
    gam13 = p.gamma + 0.5 * p.gamma_d
    A = np.array([[-gam13, 1j * p.omega_c], [1j * p.omega_c, -p.gamma_d]])
    Q = np.array([[st.s11 - st.s33, -st.s23], [-st.s32, st.s11 - st.s22]])
    return -(A @ Q + Q @ A.conj().T)


def fdt_check(params: PhysicalParams, omega, convention: str = "exact"):
    """Normalised residual of the fluctuation-dissipation identity.

    ``exact``: 2 Re Lambda from the full linear response of the
    (sigma13, sigma12) pair against the Einstein-relation commutators.
    ``table``: closed-form Lambda against the tabulated rows, which agree
    only to first order in the decoherence rates.
    """
    p = params
    w = np.asarray(omega, dtype=float)
    kap = _kappa(p)
    st = steady_states(p)
    gd = p.gamma_d
    gam13 = p.gamma + 0.5 * gd
    if convention == "exact":
        om = p.omega_c
        M = (gam13 - 1j * w) * (gd - 1j * w) + om ** 2
        num = (gd - 1j * w) * (st.s11 - st.s33) - 1j * st.s32 * om
        lhs = 2.0 * np.real(kap * num / M)
        C = einstein_commutators(p)
        r0 = (gd - 1j * w) / M
        r1 = 1j * om / M
        quad = (np.abs(r0) ** 2 * C[0, 0] + np.abs(r1) ** 2 * C[1, 1]
                + r0 * np.conj(r1) * C[0, 1] + r1 * np.conj(r0) * C[1, 0])
        rhs = kap * np.real(quad)
        # both sides are small differences of O(1) terms when the rates vanish,
        # so round-off is measured against the terms themselves
        size = 2.0 * np.abs(kap) * (np.abs(gd - 1j * w) * np.abs(st.s11 - st.s33)
                                    + np.abs(st.s32 * om)) / np.abs(M)
        size = size + np.abs(kap) * (np.abs(r0) ** 2 * np.abs(C[0, 0])
                                     + np.abs(r1) ** 2 * np.abs(C[1, 1])
                                     + 2 * np.abs(r0 * r1) * np.abs(C[0, 1]))
    elif convention == "table":
        tab = langevin_table(p)
        sus = susceptibility(p, w)
        lhs = 2.0 * np.real(sus.lam)
        rhs = kap * (p.omega_c ** 2 * tab.comm12 + w ** 2 * tab.comm13) / np.abs(sus.mu) ** 2
        size = 0.0
    else:
        raise ValueError(f"unknown convention {convention!r}")
    scale = np.maximum(np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), size), 1e-300)
    return np.abs(lhs - rhs) / scale


def noise_factor(params: PhysicalParams, omega):
    """Excess-noise factor N_f(omega)."""
    p = params
    w = np.asarray(omega, dtype=float)
    om2 = p.omega_c ** 2
    den = 2 * p.gamma0 * om2 + w ** 2 * (2 * p.gamma + p.gamma0 - 3 * p.gammac)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den == 0, np.inf if p.gammac > 0 else 0.0,
                        4 * p.gammac * om2 / np.where(den == 0, 1.0, den))


def delay_spectrum(params: PhysicalParams, z, omega, s_in):
    """Output spectrum S = eta S_in + (1 - eta)(1 + N_f) after depth z."""
    if np.any(np.asarray(s_in) < 0):
        raise ValueError("input spectrum must be non-negative")
    p = params
    w = np.asarray(omega, dtype=float)
    zz = np.asarray(z, dtype=float)
    eta = transmission(p, zz, w)
    nf = noise_factor(p, w)
    vn = (1 - eta) * nf
    if p.gamma0 == 0 and p.gammac > 0:
        vn = np.where(w == 0, dc_noise(p, zz), vn)
    return eta * np.asarray(s_in, dtype=float) + (1 - eta) + vn


def channel(params: PhysicalParams, z, omega) -> ChannelPoint:
    p = params
    eta = float(transmission(p, z, omega))
    nf = float(noise_factor(p, omega))
    if p.gamma0 == 0 and omega == 0:
        vn = float(dc_noise(p, z))
    else:
        vn = (1 - eta) * nf if p.gammac > 0 else 0.0
    return ChannelPoint(eta=eta, noise=vn, nf=nf)


def eit_gain_loss(params: PhysicalParams) -> tuple[float, float]:
    """Per-length power gain and loss of the EIT medium near zero frequency.

    The mean field grows as exp(a z) (amplitude), so the power coefficients
    are 2a and 2(alpha0 + alpha_c) with alpha_c = a.
    """
    der = derive(params)
    return 2.0 * der.a_gain, 2.0 * (der.alpha0 + der.a_gain)


def dc_noise(params: PhysicalParams, z):
    """Excess noise near zero frequency."""
    p = params
    zz = np.asarray(z, dtype=float)
    if p.gammac == 0:
        return np.zeros_like(zz)
    a, alpha = eit_gain_loss(p)
    if p.gamma0 == 0:
        return 2.0 * a * zz
    return 2.0 * (p.gammac / p.gamma0) * (1.0 - np.exp((a - alpha) * zz))


def pump_depletion(params: PhysicalParams, z):
    """Coupling intensity profile Omega_c^2(z) and the depletion margin."""
    p = params
    d = derive(p).d
    prof = p.omega_c ** 2 + 2 * d * p.gamma * p.gammac * np.asarray(z, dtype=float) / p.L
    if p.gammac == 0:
        margin = math.inf
    else:
        margin = p.omega_c ** 2 / (p.gamma * p.gammac) / (2 * d)
    return prof, margin


def amp_chain(a: float, alpha_att: float, z, s_in, m: int | None = None):
    """Spectrum after a chain of amplifying and attenuating slices.

    a and alpha_att are per-length power coefficients.  With ``m`` slices the
    concatenation is evaluated exactly; ``m=None`` gives the continuum limit.
    """
    if a < 0 or alpha_att < 0:
        raise ValueError("gain and loss must be non-negative")
    zz = np.asarray(z, dtype=float)
    s_in = np.asarray(s_in, dtype=float)
    k = a - alpha_att
    if m is None:
        if k == 0:
            return s_in + 2.0 * a * zz
        eta = np.exp(k * zz)
        nf = 2.0 * a / (alpha_att - a)
        return eta * s_in + (1 - eta) * (1 + nf)
    dz = zz / m
    x = k * dz
    grow = (1.0 + x) ** m
    # 2 a dz * sum_{j=1}^{m} (1+x)^(m-j), a geometric series
    with np.errstate(divide="ignore", invalid="ignore"):
        geo = np.where(x == 0, m, np.expm1(m * np.log1p(x)) / np.where(x == 0, 1.0, x))
    return grow * (s_in - 1.0) + 1.0 + 2.0 * a * dz * geo


def amp_chain_slices(a: float, alpha_att: float, z: float, s_in: float, m: int) -> float:
    """Slice-by-slice iteration of the same chain, used as an oracle."""
    dz = z / m
    s = float(s_in)
    for _ in range(m):
        s = (1.0 + (a - alpha_att) * dz) * (s - 1.0) + 1.0 + 2.0 * a * dz
    return s


def snr(alpha_amp, variance):
    """Signal-to-noise ratio R = 4 alpha^2 / V."""
    v = np.asarray(variance, dtype=float)
    if np.any(v <= 0):
        raise ValueError("variance must be positive")
    return 4.0 * np.asarray(alpha_amp, dtype=float) ** 2 / v
