"""Physical parameters, derived quantities and validity checks.

Every rate is stored in units of the excited-state decay rate ``gamma`` and
every time in units of ``1/gamma``.  Lengths are in centimetres, so the speed
of light is expressed in cm per ``1/gamma``.  Hz values only appear at the
configuration boundary, through :func:`hz_to_gamma` and :func:`gamma_to_hz`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# gamma = 2*pi*6.07 MHz (87Rb D line).  A documentation convention only; the
# config files always state the value they use.
GAMMA_HZ_DEFAULT = 6.07e6
C_CM_PER_S = 2.99792458e10


def hz_to_gamma(value_hz: float, gamma_hz: float = GAMMA_HZ_DEFAULT) -> float:
    """Convert an ordinary frequency (Hz) to units of gamma.

    Both quantities carry the same 2*pi, so the conversion is a plain ratio.
    """
    return value_hz / gamma_hz


def gamma_to_hz(value: float, gamma_hz: float = GAMMA_HZ_DEFAULT) -> float:
    return value * gamma_hz


def light_speed(gamma_hz: float = GAMMA_HZ_DEFAULT) -> float:
    """Speed of light in cm per 1/gamma."""
    return C_CM_PER_S / (2.0 * math.pi * gamma_hz)


def populations(gamma: float, gammac: float) -> tuple[float, float, float]:
    """First-order steady populations (s11, s22, s33) with the coupling on."""
    r = gammac / gamma
    return 1.0 - 2.0 * r, r, r


@dataclass(frozen=True)
class PhysicalParams:
    gamma0: float
    gammac: float
    g: float
    N: float
    n: float
    A: float
    L: float
    c_light: float
    omega_c: float
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.gamma0 < 0 or self.gammac < 0:
            raise ValueError("decoherence rates must be non-negative")
        if not self.L > 0:
            raise ValueError("cell length must be positive")
        if self.omega_c < 0:
            raise ValueError("coupling amplitude must be non-negative")
        if not (self.N > 0 and self.n > 0 and self.A > 0 and self.c_light > 0):
            raise ValueError("N, n, A and c_light must be positive")
        if self.g < 0:
            raise ValueError("coupling strength must be non-negative")
        nal = self.n * self.A * self.L
        if abs(self.N - nal) > 1e-12 * abs(nal):
            raise ValueError(f"N={self.N!r} inconsistent with n*A*L={nal!r}")

    @classmethod
    def from_optical_depth(cls, d: float, *, n: float, A: float, L: float,
                           gamma0: float, gammac: float, omega_c: float,
                           c_light: float | None = None, gamma: float = 1.0):
        """Build a parameter set whose coupling g reproduces optical depth d."""
        if c_light is None:
            c_light = light_speed()
        N = n * A * L
        g = math.sqrt(d * gamma * c_light / (N * L))
        return cls(gamma0=gamma0, gammac=gammac, g=g, N=N, n=n, A=A, L=L,
                   c_light=c_light, omega_c=omega_c, gamma=gamma)

    @property
    def gamma_d(self) -> float:
        return self.gamma0 + self.gammac

    @property
    def optical_depth(self) -> float:
        return self.g ** 2 * self.N * self.L / (self.gamma * self.c_light)

    @property
    def g_bar(self) -> float:
        """Single-atom coupling for a photon-flux normalised field (gamma units)."""
        return math.sqrt(self.optical_depth * self.gamma / self.N)

    def replace(self, **changes) -> "PhysicalParams":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class CouplingSchedule:
    """Abrupt switching: ``omega_on`` before ``t_off`` and from ``t_on``."""

    omega_on: float
    t_off: float = math.inf
    t_on: float = math.inf

    def __post_init__(self):
        if self.omega_on < 0:
            raise ValueError("omega_on must be non-negative")
        if math.isfinite(self.t_off):
            if not (self.t_off >= 0 and self.t_on > self.t_off):
                raise ValueError("need t_on > t_off >= 0")

    @classmethod
    def always_on(cls, omega: float) -> "CouplingSchedule":
        return cls(omega_on=omega)

    @property
    def hold_time(self) -> float:
        if not math.isfinite(self.t_off):
            return 0.0
        return self.t_on - self.t_off

    def value(self, t):
        """Rabi amplitude at time t (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        off = (t_arr >= self.t_off) & (t_arr < self.t_on)
        out = np.where(off, 0.0, self.omega_on)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PulseSpec:
    duration_T: float
    carrier_amp: float
    mod_freq: float
    mod_depth_plus: float = 0.0
    mod_depth_minus: float = 0.0
    t_start: float = 0.0
    shape: str = "supergauss"
    order: int = 6

    def __post_init__(self):
        if not self.duration_T > 0:
            raise ValueError("pulse duration must be positive")
        if self.mod_freq < 0:
            raise ValueError("modulation frequency must be non-negative")
        if self.shape not in ("supergauss", "flat", "cw"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")

    @property
    def bandwidth(self) -> float:
        """Spectral extent Delta omega = 1/T."""
        return 1.0 / self.duration_T

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        tc = t - self.t_start - 0.5 * self.duration_T
        if self.shape == "cw":
            return np.where(t >= self.t_start, 1.0, 0.0)
        if self.shape == "flat":
            return np.where(np.abs(tc) <= 0.5 * self.duration_T, 1.0, 0.0)
        # super-Gaussian whose 1/e^2 full width equals T
        return np.exp(-2.0 * np.abs(tc / (0.5 * self.duration_T)) ** self.order)

    def field(self, t):
        """Complex photon-flux amplitude injected at z = 0.

        Amplitude modulation goes on the real part and phase modulation on
        the imaginary part, so X+ = 2 Re and X- = -2 Im of this envelope.
        """
        t = np.asarray(t, dtype=float)
        mod = np.cos(self.mod_freq * (t - self.t_start))
        env = self.envelope(t)
        return env * (self.carrier_amp + mod * (self.mod_depth_plus + 1j * self.mod_depth_minus))


@dataclass(frozen=True)
class DerivedQuantities:
    d: float
    d_prime: float
    gamma_d: float
    Gamma_p: float
    chi: float
    nu: float
    v_g: float
    alpha0: float
    a_gain: float
    tau: float
    omega_c: float
    coupling_off: bool = False


def derive(params: PhysicalParams, at_time: float | None = None,
           schedule: CouplingSchedule | None = None) -> DerivedQuantities:
    """Closed-form derived quantities at one instant of the coupling schedule."""
    p = params
    omega = p.omega_c if schedule is None or at_time is None else schedule.value(at_time)
    gam, gd = p.gamma, p.gamma_d
    s11, _, s33 = populations(gam, p.gammac)
    delta = s11 - s33
    gam13 = gam + 0.5 * gd
    kappa = p.g ** 2 * p.N / p.c_light          # g^2 N / c, per unit length
    d = kappa * p.L / gam
    d_prime = d * gam * delta / gam13
    inv_tau = kappa * p.c_light / gam * delta
    tau = math.inf if inv_tau == 0 else 1.0 / inv_tau
    if omega == 0:
        return DerivedQuantities(d=d, d_prime=d_prime, gamma_d=gd, Gamma_p=gd,
                                 chi=0.0, nu=0.0, v_g=0.0, alpha0=math.inf,
                                 a_gain=math.inf, tau=tau, omega_c=0.0,
                                 coupling_off=True)
    om2 = omega * omega
    gamma_p = gd + om2 / gam13
    chi = -(p.g * p.N / p.c_light) * omega / gam13
    # <s32> = conj(<s23>) = -i gammac/omega, so -i g <s32> = -g gammac/omega
    nu = -p.g * p.gammac / omega - p.g * omega * delta / gam13
    # small-omega slope of Im Lambda; Lambda ~ kappa (n0 - i w delta)/(om2 - i w gam13)
    n0 = gd * delta - p.gammac
    slope = kappa * (delta - n0 * gam13 / om2) / om2
    v_g = 1.0 / slope
    alpha0 = kappa * p.gamma0 / om2
    a_gain = kappa * p.gammac / om2
    return DerivedQuantities(d=d, d_prime=d_prime, gamma_d=gd, Gamma_p=gamma_p,
                             chi=chi, nu=nu, v_g=v_g, alpha0=alpha0, a_gain=a_gain,
                             tau=tau, omega_c=omega)


@dataclass(frozen=True)
class Check:
    name: str
    margin: float
    passed: bool
    advisory: bool = False


@dataclass(frozen=True)
class ValidityReport:
    checks: tuple[Check, ...]
    margin_factor: float

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed and not c.advisory]

    def as_dict(self) -> dict:
        return {c.name: {"margin": c.margin, "passed": c.passed, "advisory": c.advisory}
                for c in self.checks}


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf
    return num / den


def validate(params: PhysicalParams, pulse: PulseSpec | None = None,
             margin_factor: float = 10.0) -> ValidityReport:
    """Evaluate the weak-decoherence, depletion and storage-window conditions.

    Each "much greater than" is read as ratio >= margin_factor.
    """
    p = params
    der = derive(p)
    om2 = p.omega_c ** 2
    f = margin_factor
    checks = []

    def add(name, margin, threshold=f, advisory=False):
        checks.append(Check(name, margin, bool(margin >= threshold), advisory))

    add("coupling_vs_dephasing", _ratio(om2, p.gamma * p.gamma0))
    add("coupling_vs_exchange", _ratio(om2, p.gamma * p.gammac))
    add("pump_depletion", _ratio(_ratio(om2, p.gamma * p.gammac), 2.0 * der.d))
    add("noise_factor_positive", _ratio(2 * p.gamma + p.gamma0, 3 * p.gammac), threshold=1.0 + 1e-15)
    if pulse is not None:
        dw = pulse.bandwidth
        fill_rate = der.v_g / p.L
        add("fit_in_cell", _ratio(dw, fill_rate))
        add("within_eit_bandwidth", _ratio(der.Gamma_p, dw))
        add("dephasing_during_pulse", _ratio(1.0, der.gamma_d * pulse.duration_T))
        # modulation above the pulse Fourier width; reported, never blocking
        add("modulation_above_fourier_width", pulse.mod_freq * pulse.duration_T,
            threshold=1.0, advisory=True)
    return ValidityReport(tuple(checks), margin_factor)
