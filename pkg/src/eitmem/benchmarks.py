"""Quantum-information scores for a memory channel.

Quadrature variances are in shot-noise units (vacuum = 1).  A Gaussian
state carries coherent amplitudes alpha+- with quadrature means 2 alpha+-.
The TV diagram uses the summed signal transfer T = T+ + T- and the product
of conditional variances V = sqrt(Vcv+ Vcv-).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import analytic
from .params import PhysicalParams


class Region(str, Enum):
    CLASSICAL = "Classical"
    A = "A"      # quantum, beyond the classical limit
    B = "B"      # EPR preserving, T <= 1 and V < 1
    C = "C"      # no-cloning, T > 1 and V < 1
    D = "D"      # lossless amplification, T > 1 and V >= 1


@dataclass(frozen=True)
class GaussianState:
    alpha_plus: float
    alpha_minus: float
    S_plus: float
    S_minus: float

    def __post_init__(self):
        if self.S_plus <= 0 or self.S_minus <= 0:
            raise ValueError("quadrature variances must be positive")
        if self.S_plus * self.S_minus < 1.0 - 1e-12:
            warnings.warn("state violates the uncertainty product S+ S- >= 1", stacklevel=2)

    @classmethod
    def from_spectrum(cls, spec, index: int = 0) -> "GaussianState":
        """Take amplitude and spectrum at one frequency of a QuadratureSpectrum."""
        return cls(float(spec.alpha_plus[index]), float(spec.alpha_minus[index]),
                   float(spec.S_plus[index]), float(spec.S_minus[index]))

    def wigner(self, xp, xm):
        """Normalised Wigner function with means 2 alpha and variances S."""
        ep = (xp - 2.0 * self.alpha_plus) ** 2 / (2.0 * self.S_plus)
        em = (xm - 2.0 * self.alpha_minus) ** 2 / (2.0 * self.S_minus)
        return np.exp(-ep - em) / (2.0 * np.pi * math.sqrt(self.S_plus * self.S_minus))


@dataclass(frozen=True)
class TVPoint:
    T: float
    V: float
    context: tuple = ()

    def __post_init__(self):
        if self.T < 0 or self.V < 0:
            raise ValueError("T and V must be non-negative")


def _pair(x):
    if np.ndim(x) == 0:
        return float(x), float(x)
    a, b = x
    return float(a), float(b)


def fidelity(alpha_in, gain, v_noise) -> float:
    """Closed-form fidelity of a Gaussian channel for a coherent input.

    F = 2 exp(-k+ - k-) / sqrt((2 + V+)(2 + V-)), k = alpha^2 (1 - g)^2 / (2 + V).
    Here alpha is measured as <X>/sqrt(2); scalars apply to both quadratures.
    For the EIT channel the gain is sqrt(eta).
    """
    ap, am = _pair(alpha_in)
    gp, gm = _pair(gain)
    vp, vm = _pair(v_noise)
    if vp < 0 or vm < 0:
        raise ValueError("noise variances must be non-negative")
    kp = ap * ap * (1.0 - gp) ** 2 / (2.0 + vp)
    km = am * am * (1.0 - gm) ** 2 / (2.0 + vm)
    return 2.0 * math.exp(-kp - km) / math.sqrt((2.0 + vp) * (2.0 + vm))


def channel_states(alpha_in, gain, v_noise) -> tuple[GaussianState, GaussianState]:
    """Coherent input and channel output in the Wigner convention of GaussianState.

    The output has amplitude g alpha and variance 1 + V_noise; alpha_in is
    measured as <X>/sqrt(2), as in :func:`fidelity`.
    """
    ap, am = _pair(alpha_in)
    gp, gm = _pair(gain)
    vp, vm = _pair(v_noise)
    s = 1.0 / math.sqrt(2.0)
    return (GaussianState(ap * s, am * s, 1.0, 1.0),
            GaussianState(gp * ap * s, gm * am * s, 1.0 + vp, 1.0 + vm))


class QuadratureError(RuntimeError):
    pass


def fidelity_overlap(state_in: GaussianState, state_out: GaussianState,
                     n: int = 801, width: float = 12.0) -> float:
    """Wigner overlap of two Gaussian states on a tensor trapezoid grid.

    In the canonical variables x = X/sqrt(2) the overlap is 2 pi int W W dx dp;
    in the X+- variables used here (vacuum variance 1) this is 4 pi int W W.

    The grid spans ``width`` standard deviations around both means.  The
    integrals of W_in and W_out over the same grid are checked to equal one.
    """
    def axis(m1, m2, s1, s2):
        sd = math.sqrt(max(s1, s2))
        lo = min(m1, m2) - width * sd
        hi = max(m1, m2) + width * sd
        return np.linspace(lo, hi, n)

    xp = axis(2 * state_in.alpha_plus, 2 * state_out.alpha_plus, state_in.S_plus, state_out.S_plus)
    xm = axis(2 * state_in.alpha_minus, 2 * state_out.alpha_minus,
              state_in.S_minus, state_out.S_minus)
    gp, gm = np.meshgrid(xp, xm, indexing="ij")
    w_in = state_in.wigner(gp, gm)
    w_out = state_out.wigner(gp, gm)

    def integ(f):
        return np.trapezoid(np.trapezoid(f, xm, axis=1), xp)

    norms = (integ(w_in), integ(w_out))
    if max(abs(norms[0] - 1.0), abs(norms[1] - 1.0)) > 1e-9:
        raise QuadratureError(f"Wigner normalisation off on the grid: {norms}, "
                              f"n={n}, span=({xp[0]:.3g},{xp[-1]:.3g})x({xm[0]:.3g},{xm[-1]:.3g})")
    return float(4.0 * np.pi * integ(w_in * w_out))


def tv_metrics(state_in: GaussianState, state_out: GaussianState,
               correlation=None, context: tuple = ()) -> TVPoint:
    """Signal transfer and conditional variance between input and output.

    ``correlation`` is <X_in X_out> per quadrature; it defaults to
    sqrt(eta) V_in with eta inferred from the amplitude ratio.
    """
    out = []
    for a_in, a_out, v_in, v_out, c in (
            (state_in.alpha_plus, state_out.alpha_plus, state_in.S_plus, state_out.S_plus,
             None if correlation is None else _pair(correlation)[0]),
            (state_in.alpha_minus, state_out.alpha_minus, state_in.S_minus, state_out.S_minus,
             None if correlation is None else _pair(correlation)[1])):
        if v_in <= 0:
            raise ValueError("input variance must be positive")
        if c is None:
            if a_in == 0:
                raise ValueError("correlation needed when the input amplitude is zero")
            c = abs(a_out / a_in) * v_in
        vcv = v_out - abs(c) ** 2 / v_in
        t = analytic.snr(a_out, v_out) / analytic.snr(a_in, v_in)
        out.append((float(t), float(vcv)))
    (tp, vp), (tm, vm) = out
    return TVPoint(T=tp + tm, V=math.sqrt(max(vp, 0.0) * max(vm, 0.0)), context=context)


def tv_from_channel(eta, s_out, v_in: float = 1.0, context: tuple = ()) -> TVPoint:
    """TV point of a linear channel with transmission eta and output variance s_out."""
    ep, em = _pair(eta)
    sp, sm = _pair(s_out)
    tp = ep * v_in / sp
    tm = em * v_in / sm
    vcv_p = sp - ep * v_in
    vcv_m = sm - em * v_in
    return TVPoint(T=tp + tm, V=math.sqrt(max(vcv_p, 0.0) * max(vcv_m, 0.0)), context=context)


def tv_eit(eta, v_noise) -> TVPoint:
    """EIT channel: S_out = 1 + V_noise for a coherent input."""
    vp, vm = _pair(v_noise)
    return tv_from_channel(eta, (1.0 + vp, 1.0 + vm), context=("eta", eta, "v_noise", v_noise))


def limit_curves(kind: str, values) -> tuple[np.ndarray, np.ndarray]:
    """(T, V) polylines of the reference channels over a parameter sweep.

    classical     feedforward gain g:   (2g^2/(2g^2+1), 1+g^2)
    passive_loss  transmission eta:     (2 eta, 1 - eta)
    amplifier     gain G >= 1:          (2G/(2G-1), G-1)
    unity_gain    excess noise V_noise: (2/(1+V_noise), V_noise)
    """
    x = np.asarray(values, dtype=float)
    if kind == "classical":
        g2 = x * x
        return 2 * g2 / (2 * g2 + 1), 1 + g2
    if kind == "passive_loss":
        if np.any((x < 0) | (x > 1)):
            raise ValueError("transmission outside [0, 1]")
        return 2 * x, 1 - x
    if kind == "amplifier":
        if np.any(x < 1):
            raise ValueError("amplifier gain below one")
        return 2 * x / (2 * x - 1), x - 1
    if kind == "unity_gain":
        if np.any(x < 0):
            raise ValueError("negative excess noise")
        return 2 / (1 + x), x
    raise ValueError(f"unknown curve {kind!r}")


def is_classical(p: TVPoint) -> bool:
    """True when some feedforward gain g gives T_cl >= T and V_cl <= V."""
    if p.V < 1.0 or p.T >= 1.0:
        return False
    if p.T <= 0.0:
        return True
    g2_min = p.T / (2.0 * (1.0 - p.T))
    return g2_min <= p.V - 1.0


def classify(p: TVPoint) -> Region:
    if is_classical(p):
        return Region.CLASSICAL
    if p.T > 1.0 and p.V < 1.0:
        return Region.C
    if p.V < 1.0:
        return Region.B
    if p.T > 1.0:
        return Region.D
    return Region.A


@dataclass(frozen=True)
class RegimeMap:
    plane: str
    x: np.ndarray              # eta or gain (a z)
    y: np.ndarray              # V_noise or loss (alpha z)
    T: np.ndarray
    V: np.ndarray
    labels: np.ndarray         # Region values as str, shape (len(x), len(y))
    boundaries: list           # (x, y, label_left, label_right) midpoints


def _boundaries(x, y, labels):
    out = []
    for j in range(len(y)):
        for i in range(len(x) - 1):
            if labels[i, j] != labels[i + 1, j]:
                out.append((0.5 * (x[i] + x[i + 1]), float(y[j]), labels[i, j], labels[i + 1, j]))
    for i in range(len(x)):
        for j in range(len(y) - 1):
            if labels[i, j] != labels[i, j + 1]:
                out.append((float(x[i]), 0.5 * (y[j] + y[j + 1]), labels[i, j], labels[i, j + 1]))
    return out


def regime_map(plane: str, x, y, threads: int = 1) -> RegimeMap:
    """Classify a grid of channels.

    loss_noise: x = eta, y = V_noise of the EIT channel.
    gain_loss:  x = a z, y = alpha z (power gain and loss exponents) mapped
                through the amplifier chain to (eta', S_out).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def cell(ij):
        i, j = ij
        if plane == "loss_noise":
            p = tv_eit(x[i], y[j])
        elif plane == "gain_loss":
            eta = math.exp(x[i] - y[j])
            s_out = float(analytic.amp_chain(x[i], y[j], 1.0, 1.0))
            p = tv_from_channel(eta, s_out, context=("gain", x[i], "loss", y[j]))
        else:
            raise ValueError(f"unknown plane {plane!r}")
        return p.T, p.V, classify(p).value

    idx = [(i, j) for i in range(len(x)) for j in range(len(y))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(cell, idx))
    else:
        res = [cell(ij) for ij in idx]
    T = np.array([r[0] for r in res]).reshape(len(x), len(y))
    V = np.array([r[1] for r in res]).reshape(len(x), len(y))
    labels = np.array([r[2] for r in res], dtype=object).reshape(len(x), len(y))
    return RegimeMap(plane, x, y, T, V, labels, _boundaries(x, y, labels))


@dataclass(frozen=True)
class Trajectory:
    rates: np.ndarray          # (n, 2) of (gamma0, gammac)
    points: list
    regions: list
    monotone_T: bool


def tv_trajectory(params: PhysicalParams, rates, omega: float, z: float | None = None,
                  pipeline=None) -> Trajectory:
    """(T, V) locus of the EIT channel as the decoherence rates vary.

    ``pipeline(params, z, omega) -> (eta, V_noise)`` defaults to the closed
    form; a stochastic estimate can be plugged in.  ``monotone_T`` reports
    whether T is non-increasing along the given order of rates.
    """
    z = params.L if z is None else z
    rates = np.asarray(rates, dtype=float).reshape(-1, 2)
    pts = []
    for g0, gc in rates:
        p = params.replace(gamma0=float(g0), gammac=float(gc))
        if pipeline is None:
            ch = analytic.channel(p, z, omega)
            eta, vn = ch.eta, ch.noise
        else:
            eta, vn = pipeline(p, z, omega)
        pts.append(tv_eit(eta, vn))
    ts = np.array([q.T for q in pts])
    mono = bool(np.all(np.diff(ts) <= 1e-12))
    return Trajectory(rates, pts, [classify(q) for q in pts], mono)
