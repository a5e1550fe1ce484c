"""Stochastic c-number equations for one slice of the Lambda medium.

State layout (rows of a complex array of shape (8, nz)):

    0 s3  -> sigma_13      4 s7  -> sigma_22
    1 s4  -> sigma_23      5 s9  -> sigma_21
    2 s5  -> sigma_12      6 s10 -> sigma_32
    3 s6  -> sigma_11      7 s11 -> sigma_31

sigma_33 is never stored: it is 1 - s6 - s7.  The field pair (a, b) stands for
(E^dagger, E) scaled by the single-atom coupling, i.e. it is a Rabi frequency in
units of gamma.  All rates are in units of gamma (gamma = 1).
"""

from __future__ import annotations

import numpy as np

NVAR = 8
S3, S4, S5, S6, S7, S9, S10, S11 = range(NVAR)
VAR_NAMES = ("sigma3", "sigma4", "sigma5", "sigma6", "sigma7", "sigma9", "sigma10", "sigma11")

NOISE_MODELS = {"full": 18, "langevin": 4}

SQ2 = np.sqrt(2.0)


def initial_state(nz: int, batch: int | None = None) -> np.ndarray:
    """All atoms pumped into |1>; no coherences."""
    shape = (NVAR, nz) if batch is None else (NVAR, batch, nz)
    s = np.zeros(shape, dtype=complex)
    s[S6] = 1.0
    return s


def drift(s, fa, fb, ec, gamma0, gammac):
    """Deterministic rates.  fa, fb are the fields seen by each slice."""
    s3, s4, s5, s6, s7, s9, s10, s11 = s
    big = 1.0 + 0.5 * gamma0 + 0.5 * gammac
    gd = gamma0 + gammac
    p33 = 1.0 - s6 - s7
    out = np.empty_like(s)
    out[S3] = -big * s3 + ec * s5 - fa * (1.0 - 2.0 * s6 - s7)
    out[S4] = -big * s4 + fa * s9 + ec * (s6 + 2.0 * s7 - 1.0)
    out[S5] = -gd * s5 - fa * s10 - ec * s3
    out[S6] = p33 - gammac * (s6 - s7) - fa * s11 - fb * s3
    out[S7] = p33 - gammac * (s7 - s6) - ec * (s4 + s10)
    out[S9] = -gd * s9 - fb * s4 - ec * s11
    out[S10] = -big * s10 + fb * s5 + ec * (2.0 * s7 + s6 - 1.0)
    out[S11] = -big * s11 + ec * s9 - fb * (1.0 - 2.0 * s6 - s7)
    return out


def diffusion_full(s, fa, fb, ec, gamma0, gammac, gbar):
    """Coefficients of the 18 real noises, term by term from the full noise set.

    Returns B with shape (8, 18, ...); the increment of variable i is
    sum_j B[i, j] dW_j.  Complex square roots take the principal branch.
    """
    s3, s4, s5, s6, s7, s9, s10, s11 = s
    B = np.zeros((NVAR, 18) + s.shape[1:], dtype=complex)
    r = np.sqrt(0.5 * gbar)
    gm = gammac + 0.5 * gamma0
    p33 = 1.0 - s6 - s7
    q = fa * s11 + fb * s3 + p33
    pop = s6 + s7
    sq = np.sqrt
    i = 1j
    n = lambda k: k - 1  # noqa: E731  (1-based labels as printed)

    # sigma3
    B[S3, n(1)] += r * (fa / gbar - s3)
    B[S3, n(2)] += i * r * (fa / gbar + s3)
    c = -(fa * s4 + ec * s3)
    B[S3, n(3)] += c
    B[S3, n(4)] += -i * c
    c = 0.5 * sq(gm * p33 + 0j)
    B[S3, n(7)] += i * c
    B[S3, n(10)] += SQ2 * c
    B[S3, n(12)] += i * c
    c = SQ2 * gm * s4
    B[S3, n(14)] += c
    B[S3, n(13)] += -i * c

    # sigma4
    B[S4, n(1)] += r * (s4 - ec / gbar)
    B[S4, n(2)] += -i * r * (s4 + ec / gbar)
    B[S4, n(3)] += 1.0
    B[S4, n(4)] += i
    c = 0.25 * gm * p33
    B[S4, n(15)] += i * c
    B[S4, n(16)] += c

    # sigma5
    B[S5, n(1)] += -r * s5
    B[S5, n(2)] += i * r * s5
    c = 0.5 * (fa * (s6 - s7) + gm * s3)
    B[S5, n(3)] += c
    B[S5, n(4)] += -i * c
    B[S5, n(5)] += 1.0 / (2.0 * SQ2)
    B[S5, n(6)] += -i / (2.0 * SQ2)
    c = 0.5 * sq(q + 2.0 * gamma0 * s7 + gammac * pop + 0j)
    B[S5, n(8)] += i * c
    B[S5, n(9)] += SQ2 * c
    B[S5, n(11)] += i * c

    # sigma6
    c = -gammac / np.sqrt(2.0 * gbar)
    B[S6, n(1)] += c
    B[S6, n(2)] += i * c
    c = -0.5 * fa * s9
    B[S6, n(3)] += c
    B[S6, n(4)] += -i * c
    c = sq(q + 0j) * sq(q + gammac * pop + 0j)
    B[S6, n(5)] += c
    B[S6, n(6)] += i * c
    c = sq(0.5 * gammac * pop + 0j)
    B[S6, n(7)] += c
    B[S6, n(12)] += -c
    B[S6, n(9)] += -sq(q + 0j)
    c = sq(q + 0j) * sq(q + gammac * pop + gamma0 * s7 + 0j)
    B[S6, n(14)] += c
    B[S6, n(13)] += -i * c
    c = -0.5 * fb * s5
    B[S6, n(15)] += i * c
    B[S6, n(16)] += c
    B[S6, n(18)] += -gammac
    B[S6, n(17)] += i * gammac

    # sigma7
    c = gammac / np.sqrt(2.0 * gbar)
    B[S7, n(1)] += c
    B[S7, n(2)] += i * c
    c = 0.5 * fa * s9
    B[S7, n(3)] += c
    B[S7, n(4)] += -i * c
    c = SQ2 * (fa * s10 + ec * s3)
    B[S7, n(5)] += c
    B[S7, n(6)] += i * c
    c = sq(0.5 * gammac * pop + 0j)
    B[S7, n(12)] += c
    B[S7, n(7)] += -c
    c = sq(ec * (s4 + s10) + p33 + 0j) / SQ2
    B[S7, n(8)] += c
    B[S7, n(11)] += -c
    c = SQ2 * (fb * s4 + ec * s11)
    B[S7, n(14)] += c
    B[S7, n(13)] += -i * c
    c = 0.5 * fb * s5
    B[S7, n(16)] += c
    B[S7, n(15)] += i * c
    c = gammac / np.sqrt(2.0 * gbar)
    B[S7, n(18)] += c
    B[S7, n(17)] += -i * c

    # sigma9
    c = 0.5 * sq(q + gammac * pop + gamma0 * s7 + 0j)
    B[S9, n(8)] += -i * c
    B[S9, n(9)] += SQ2 * c
    B[S9, n(11)] += -i * c
    B[S9, n(14)] += 1.0 / (2.0 * SQ2)
    B[S9, n(13)] += i / (2.0 * SQ2)
    c = 0.5 * (fb * (s6 - s7) + gm * s11)
    B[S9, n(15)] += i * c
    B[S9, n(16)] += c
    B[S9, n(17)] += -i * r * s9
    B[S9, n(18)] += -r * s9

    # sigma10
    c = 0.25 * gm * p33
    B[S10, n(3)] += c
    B[S10, n(4)] += -i * c
    B[S10, n(16)] += 1.0
    B[S10, n(15)] += -i
    B[S10, n(17)] += i * r * (s10 + ec / gbar)
    B[S10, n(18)] += r * (s10 - ec / gbar)

    # sigma11
    c = SQ2 * gm * s10
    B[S11, n(5)] += c
    B[S11, n(6)] += i * c
    c = 0.5 * sq(gm * p33 + 0j)
    B[S11, n(7)] += -i * c
    B[S11, n(10)] += SQ2 * c
    B[S11, n(12)] += -i * c
    c = -(fb * s10 + ec * s11)
    B[S11, n(15)] += i * c
    B[S11, n(16)] += c
    B[S11, n(17)] += -i * r * (fb / gbar + s11)
    B[S11, n(18)] += r * (fb / gbar - s11)
    return B


def diffusion_langevin(s, gamma0, gammac):
    """Reduced noise map built from the normally ordered Langevin rows.

    Only the two dipole pairs that feed the probe receive noise:
    D(s3, s11) = <F13^+ F13> and D(s5, s9) = <F12^+ F12>, with zero
    self-correlations.  Returns B with shape (8, 4, ...).
    """
    s6, s7 = s[S6], s[S7]
    p33 = 1.0 - s6 - s7
    c13 = 2.0 * p33 - 2.0 * (1.0 + gamma0 + gammac) * p33
    c12 = p33 + gammac * (s6 + s7) + 2.0 * gamma0 * s7
    r13 = np.sqrt(0.5 * c13 + 0j)
    r12 = np.sqrt(0.5 * c12 + 0j)
    B = np.zeros((NVAR, 4) + s.shape[1:], dtype=complex)
    B[S3, 0] = r13
    B[S3, 1] = 1j * r13
    B[S11, 0] = r13
    B[S11, 1] = -1j * r13
    B[S5, 2] = r12
    B[S5, 3] = 1j * r12
    B[S9, 2] = r12
    B[S9, 3] = -1j * r12
    return B


def diffusion(s, fa, fb, ec, gamma0, gammac, gbar, model="full"):
    if model == "full":
        return diffusion_full(s, fa, fb, ec, gamma0, gammac, gbar)
    if model == "langevin":
        return diffusion_langevin(s, gamma0, gammac)
    raise ValueError(f"unknown noise model {model!r}")


def cell_fields(a, b):
    """Field seen by each cell: mean of its two boundary values."""
    return 0.5 * (a[..., :-1] + a[..., 1:]), 0.5 * (b[..., :-1] + b[..., 1:])


def propagate(a0, b0, s, h):
    """Integrate the Maxwell pair across the cells from the z = 0 values.

    da/dzeta = -d s3, db/dzeta = -d s11 across cells of width 1/nz (h = d/nz).
    Returns boundary arrays with nz + 1 points on the last axis.
    """
    a0 = np.asarray(a0, dtype=complex)
    b0 = np.asarray(b0, dtype=complex)
    a = np.concatenate([a0[..., None], a0[..., None] - h * np.cumsum(s[S3], axis=-1)], axis=-1)
    b = np.concatenate([b0[..., None], b0[..., None] - h * np.cumsum(s[S11], axis=-1)], axis=-1)
    return a, b


def step(s, a, b, a0_new, b0_new, ec, dt, h, gamma0, gammac, noise=None, theta=0.5):
    """Advance the atoms by one step and rebuild the field.

    The linear EIT core, i.e. the pairs (s3, s5) and (s11, s9) together with
    the field each cell radiates into itself, is integrated with the theta
    rule; every other drift term and the noise are explicit (Ito).  Fields
    are instantaneous in z, so the implicit part is a single forward sweep
    with a 2x2 solve per cell.  ``noise`` is the scaled increment
    sum_j B_ij dW_j, or None.
    """
    fa, fb = cell_fields(a, b)
    big = 1.0 + 0.5 * gamma0 + 0.5 * gammac
    gd = gamma0 + gammac
    inc = drift(s, fa, fb, ec, gamma0, gammac) * dt
    if noise is not None:
        inc += noise
    s_new = s + inc
    s3, s4, s5, s6, s7, s9, s10, s11 = s
    delta = 2.0 * s6 + s7 - 1.0
    # explicit remainders of the four core rows after removing theta * (linear part)
    r3 = s3 + (1.0 - theta) * dt * (-big * s3 + ec * s5 + delta * fa)
    r5 = s5 + (1.0 - theta) * dt * (-gd * s5 - ec * s3) - dt * fa * s10
    r11 = s11 + (1.0 - theta) * dt * (-big * s11 + ec * s9 + delta * fb)
    r9 = s9 + (1.0 - theta) * dt * (-gd * s9 - ec * s11) - dt * fb * s4
    if noise is not None:
        r3 = r3 + noise[S3]
        r5 = r5 + noise[S5]
        r11 = r11 + noise[S11]
        r9 = r9 + noise[S9]
    td = theta * dt
    m11 = 1.0 + td * (big + 0.5 * h * delta)
    m12 = -td * ec
    m21 = td * ec
    m22 = 1.0 + td * gd
    det = m11 * m22 - m12 * m21
    nz = s.shape[-1]
    a_new = np.empty(s.shape[1:-1] + (nz + 1,), dtype=complex)
    b_new = np.empty_like(a_new)
    a_new[..., 0] = a0_new
    b_new[..., 0] = b0_new
    ak = a_new[..., 0]
    bk = b_new[..., 0]
    for k in range(nz):
        tdk = td * delta[..., k]
        u = r3[..., k] + tdk * ak
        v = r5[..., k]
        x3 = (m22 * u - m12 * v) / det[..., k]
        x5 = (m11[..., k] * v - m21 * u) / det[..., k]
        u = r11[..., k] + tdk * bk
        v = r9[..., k]
        x11 = (m22 * u - m12 * v) / det[..., k]
        x9 = (m11[..., k] * v - m21 * u) / det[..., k]
        s_new[S3, ..., k] = x3
        s_new[S5, ..., k] = x5
        s_new[S11, ..., k] = x11
        s_new[S9, ..., k] = x9
        ak = ak - h * x3
        bk = bk - h * x11
        a_new[..., k + 1] = ak
        b_new[..., k + 1] = bk
    return s_new, a_new, b_new
