"""Write, hold and read maps of the spin-wave memory.

The memory is described by the adiabatic pair

    (d/dz + d'/L) E = chi s12,      (d/dt + Gamma_p) s12 = nu E,

with the coupling on, and by a pure decay of s12 at gamma_d with it off.
Three levels of description are offered for writing and reading:

``ideal``   the pulse is mapped point by point, s12(z) = (nu/Gamma_p) E_in(t_off - z/v_g)
            and E_out(t) = (chi L/d') s12(L - v_g (t - t_on));
``sinc``    the same maps followed by a band limit of full width ``bandwidth``
            (a convolution with a unit-area sinc) and the loading transient;
``kernel``  frequency-domain linear response evaluated by adaptive quadrature:
            loading (1 - exp(-(Gamma_p - i w) t))/(Gamma_p - i w), absorption
            exp(-zeta(w) z) with zeta = Re Lambda, and on reading the decay
            rate beta(k) = Gamma_p - nu chi / (d'/L - i k) with the Maxwell
            boundary factor.

Spatial transforms use s12(k) = (1/L) int_0^L s12(z) exp(i k z) dz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad_vec

from . import analytic
from .params import PhysicalParams, PulseSpec, derive

MODES = ("ideal", "sinc", "kernel")


@dataclass(frozen=True)
class StoredCoherence:
    samples: np.ndarray
    grid: np.ndarray
    domain: str              # "z" (cm, cell centres) or "k" (1/cm)
    time_tag: float
    v_g_at_write: float
    L: float
    truncation_loss: float = 0.0

    def __post_init__(self):
        if self.domain not in ("z", "k"):
            raise ValueError("domain must be 'z' or 'k'")

    def to_k(self, pad: int = 4) -> "StoredCoherence":
        """Transform a z-sampled coherence to k, zero padded ``pad`` times."""
        if self.domain == "k":
            return self
        z = self.grid
        n = len(z)
        dz = self.L / n
        m = pad * n
        k = 2.0 * np.pi * np.fft.fftfreq(m, d=dz)
        # s(k) = (dz / L) sum_j s_j exp(i k z_j), z_j = z_0 + j dz
        buf = np.zeros(m, dtype=complex)
        buf[:n] = self.samples
        sk = np.fft.ifft(buf) * m * (dz / self.L) * np.exp(1j * k * z[0])
        order = np.argsort(k)
        return replace(self, samples=sk[order], grid=k[order], domain="k")

    def to_z(self, nz: int) -> "StoredCoherence":
        """Inverse of :meth:`to_k` on the original cell-centred grid of nz points."""
        if self.domain == "z":
            return self
        k = self.grid
        m = len(k)
        dz = self.L / nz
        z = (np.arange(nz) + 0.5) * dz
        order = np.argsort(np.fft.fftfreq(m, d=dz))
        buf = np.empty(m, dtype=complex)
        buf[order] = self.samples * np.exp(-1j * k * z[0])
        full = np.fft.fft(buf) * (self.L / (m * dz))
        return replace(self, samples=full[:nz] / 1.0, grid=z, domain="z")

    def norm2(self) -> float:
        """(1/L) int |s(z)|^2 dz, equal to (L/2 pi) int |s(k)|^2 dk."""
        if self.domain == "z":
            dz = self.L / len(self.grid)
            return float(np.sum(np.abs(self.samples) ** 2) * dz / self.L)
        dk = self.grid[1] - self.grid[0]
        return float(self.L / (2.0 * np.pi) * np.sum(np.abs(self.samples) ** 2) * dk)


@dataclass(frozen=True)
class TransferReport:
    amplitude_factor: float
    bounds_margins: tuple[float, float]
    tb_product: float
    d_prime: float
    hold: float

    def as_dict(self) -> dict:
        return {"amplitude_factor": self.amplitude_factor,
                "bounds_margins": {"fill_vs_bandwidth": self.bounds_margins[0],
                                   "bandwidth_vs_pumping": self.bounds_margins[1]},
                "tb_product": self.tb_product, "d_prime": self.d_prime, "hold": self.hold}


def _as_callable(field_in, t):
    if callable(field_in):
        return field_in
    if t is None:
        raise ValueError("sampled input needs its time grid")
    t = np.asarray(t, dtype=float)
    vals = np.asarray(field_in, dtype=complex)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = (np.interp(x, t, vals.real, left=0.0, right=0.0)
               + 1j * np.interp(x, t, vals.imag, left=0.0, right=0.0))
        return out
    return f


def _coupling_on(params: PhysicalParams):
    der = derive(params)
    if der.coupling_off:
        raise ValueError("writing and reading need the coupling on")
    return der


def _spectrum(f, t, omegas, t_ref):
    """E(w) = int E(t) exp(i w (t - t_ref)) dt by the trapezoid rule on t."""
    vals = f(t)
    w = np.full(len(t), t[1] - t[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return np.exp(1j * np.outer(omegas, t - t_ref)) @ (vals * w)


def _spectral_support(values, spacing, rel=1e-12):
    """Largest angular frequency where the sampled spectrum exceeds rel of its peak."""
    spec = np.abs(np.fft.fft(values, n=4 * len(values)))
    f = np.abs(2.0 * np.pi * np.fft.fftfreq(4 * len(values), d=spacing))
    if spec.max() == 0:
        return np.pi / spacing
    return float(min(f[spec > rel * spec.max()].max() * 1.05, np.pi / spacing))


def _lowpass(values, spacing, cutoff, pad):
    """Ideal low-pass |f| <= cutoff (angular) on a uniform grid, zero padded."""
    n = len(values)
    m = pad * n
    buf = np.zeros(m, dtype=complex)
    buf[:n] = values
    f = 2.0 * np.pi * np.fft.fftfreq(m, d=spacing)
    spec = np.fft.fft(buf)
    spec[np.abs(f) > cutoff] = 0.0
    return np.fft.ifft(spec)[:n]


def write(field_in, params: PhysicalParams, *, t_off: float, t=None, mode: str = "ideal",
          nz: int = 512, t_load: float | None = None, bandwidth: float | None = None,
          pad: int = 4, duration_T: float | None = None) -> StoredCoherence:
    """Map an input envelope onto the ground-state coherence at t_off.

    field_in   : callable E_in(t) or samples on ``t``
    t_load     : time the coupling has been on when the pulse loads
                 (default: the pulse duration, else t_off - t[0])
    bandwidth  : full spectral window (angular) for ``sinc`` and ``kernel``;
                 default Gamma_p
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    der = _coupling_on(params)
    f = _as_callable(field_in, t)
    vg, L = der.v_g, params.L
    z = (np.arange(nz) + 0.5) * L / nz
    ratio = der.nu / der.Gamma_p
    loss = 0.0
    if t is not None:
        tt = np.asarray(t, dtype=float)
        e_all = np.trapezoid(np.abs(f(tt)) ** 2, tt)
        inside = (tt > t_off - L / vg) & (tt <= t_off)
        e_in = np.trapezoid(np.abs(f(tt)) ** 2 * inside, tt)
        loss = 0.0 if e_all == 0 else float(1.0 - e_in / e_all)
        if duration_T is not None and vg * duration_T > L:
            warnings.warn("pulse is longer than the medium at the group velocity", stacklevel=2)
        if loss > 1e-6:
            warnings.warn(f"pulse truncated on writing; energy loss {loss:.3g}", stacklevel=2)
    if t_load is None:
        t_load = duration_T if duration_T is not None else (
            t_off - float(np.min(t)) if t is not None else math.inf)
    if bandwidth is None:
        bandwidth = der.Gamma_p
    if mode == "ideal":
        samples = ratio * f(t_off - z / vg)
    elif mode == "sinc":
        load = 1.0 - math.exp(-der.Gamma_p * t_load) if math.isfinite(t_load) else 1.0
        samples = ratio * load * _lowpass(f(t_off - z / vg), L / nz, bandwidth / (2.0 * vg), pad)
    else:
        if t is None:
            raise ValueError("kernel mode needs the input time grid")
        tt = np.asarray(t, dtype=float)
        f_src = f

        def f(x):
            # only light that entered before the switch-off is stored
            x = np.asarray(x, dtype=float)
            return np.where(x <= t_off, f_src(x), 0.0)

        def integrand(w):
            ew = _spectrum(f, tt, np.array([w]), t_off)[0]
            zeta = float(np.real(analytic.susceptibility(params, w).lam))
            gw = der.Gamma_p - 1j * w
            load = (1.0 - np.exp(-gw * t_load)) / gw if math.isfinite(t_load) else 1.0 / gw
            return der.nu * ew * load * np.exp((1j * w / vg - zeta) * z)

        half = min(0.5 * bandwidth, _spectral_support(f(tt), tt[1] - tt[0]))
        val, _ = quad_vec(integrand, -half, half, epsabs=0.0, epsrel=1e-9, limit=400)
        samples = val / (2.0 * np.pi)
    return StoredCoherence(samples=np.asarray(samples, dtype=complex), grid=z, domain="z",
                           time_tag=float(t_off), v_g_at_write=vg, L=L, truncation_loss=loss)


def hold(coh: StoredCoherence, dt_hold: float, params: PhysicalParams) -> StoredCoherence:
    """Coupling off for dt_hold: uniform decay at gamma_d in z and in k."""
    if dt_hold < 0:
        raise ValueError("hold time must be non-negative")
    fac = math.exp(-params.gamma_d * dt_hold)
    return replace(coh, samples=coh.samples * fac, time_tag=coh.time_tag + dt_hold)


def residual_probe_decay(params: PhysicalParams) -> tuple[float, float]:
    """Absorption time tau of the probe left in the cell and the 3 tau guard."""
    tau = derive(params).tau
    return tau, 3.0 * tau


def _sigma_k(coh: StoredCoherence, k):
    z = coh.grid
    dz = coh.L / len(z)
    return (dz / coh.L) * (np.exp(1j * np.outer(k, z)) @ coh.samples)


def read(coh: StoredCoherence, params: PhysicalParams, t=None, *, t_on: float | None = None,
         mode: str = "ideal", bandwidth: float | None = None, pad: int = 4):
    """Release the stored coherence with the coupling back on at t_on.

    Returns (t, E_out) at z = L.  With t None the ideal map is evaluated on
    its natural grid t_j = t_on + (L - z_j)/v_g, which involves no
    interpolation.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    der = _coupling_on(params)
    if coh.domain != "z":
        raise ValueError("read expects a z-sampled coherence")
    t_on = coh.time_tag if t_on is None else t_on
    vg, L = der.v_g, params.L
    scale = der.chi * L / der.d_prime
    z = coh.grid
    if t is None:
        if mode != "ideal":
            raise ValueError("sinc and kernel modes need an output time grid")
        tt = t_on + (L - z[::-1]) / vg
        return tt, scale * coh.samples[::-1]
    tt = np.asarray(t, dtype=float)
    if bandwidth is None:
        bandwidth = der.Gamma_p
    zq = L - vg * (tt - t_on)
    ideal = scale * (np.interp(zq, z, coh.samples.real, left=0.0, right=0.0)
                     + 1j * np.interp(zq, z, coh.samples.imag, left=0.0, right=0.0))
    ideal = np.where(tt >= t_on, ideal, 0.0)
    if tt[-1] < t_on + L / vg:
        warnings.warn("read window ends before the whole medium is released", stacklevel=2)
    if mode == "ideal":
        return tt, ideal
    if mode == "sinc":
        return tt, _lowpass(ideal, tt[1] - tt[0], 0.5 * bandwidth, pad)
    tau = np.maximum(tt - t_on, 0.0)
    dl = der.d_prime / L

    def integrand(k):
        sk = _sigma_k(coh, np.array([k]))[0]
        q = dl - 1j * k
        beta = der.Gamma_p - der.nu * der.chi / q
        boundary = (1.0 - np.exp(-q * L)) / q
        return sk * np.exp(-beta * tau) * der.chi * boundary * np.exp(-1j * k * L)

    # sampled coherence is periodic in k beyond the grid Nyquist limit
    half = min(0.5 * bandwidth / vg, np.pi * len(z) / L)
    val, _ = quad_vec(integrand, -half, half, epsabs=0.0, epsrel=1e-9, limit=400)
    out = L / (2.0 * np.pi) * val
    return tt, np.where(tt >= t_on, out, 0.0)


def end_to_end(params: PhysicalParams, dt_hold: float,
               pulse: PulseSpec | None = None) -> TransferReport:
    """Scalar transfer factor, the two bandwidth margins and the time-bandwidth product."""
    der = _coupling_on(params)
    factor = der.nu * der.chi * params.L / (der.Gamma_p * der.d_prime) \
        * math.exp(-params.gamma_d * dt_hold)
    if pulse is not None:
        dw = pulse.bandwidth
        margins = (dw * params.L / der.v_g, der.Gamma_p / dw)
    else:
        margins = (math.nan, math.nan)
    return TransferReport(amplitude_factor=float(factor), bounds_margins=margins,
                          tb_product=der.Gamma_p * params.L / der.v_g, d_prime=der.d_prime,
                          hold=float(dt_hold))


def round_trip(field_in, params: PhysicalParams, *, t_off: float, t_on: float, t=None,
               t_out=None, mode: str = "ideal", **kw):
    """read(hold(write(E_in))) with the coupling off between t_off and t_on."""
    nz = kw.pop("nz", 512)
    wkw = {k: kw[k] for k in ("t_load", "bandwidth", "pad", "duration_T") if k in kw}
    coh = write(field_in, params, t_off=t_off, t=t, mode=mode, nz=nz, **wkw)
    coh = hold(coh, t_on - t_off, params)
    rkw = {k: kw[k] for k in ("bandwidth", "pad") if k in kw}
    return read(coh, params, t_out, t_on=t_on, mode=mode, **rkw)
