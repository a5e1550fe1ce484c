"""Ensemble driver: trajectories, spectra and the storage protocol.

Field conventions: the stored pair (a, b) is (E^+, E) times the single-atom
coupling g_bar, so X+ = (a + b)/g_bar and X- = -i (a - b)/g_bar are the
photon-flux quadratures.  A coherent state has V+ = V- = 1.

Spectra are taken on a readout window [t0, t1] with a flat window and the
normalisation X(w) = (dt / sqrt(T_w)) sum_t X(t) exp(i w t), so that
S(w) = 1 + <X(w) X(-w)> is 1 for vacuum.  Trajectories are processed in
fixed-size chunks whose results are combined in index order, which makes the
output independent of the number of worker threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..params import CouplingSchedule, PhysicalParams, PulseSpec, derive, validate
from . import _fallback, model

CHUNK = 256  # steps per block of random numbers
# backward-Euler steps taken after every jump of the coupling: the trapezoid
# rule alone leaves a slowly damped sawtooth after an abrupt switch
DAMPING_STEPS = 4
MODEL_IDS = {"none": 0, "full": 1, "langevin": 2}


class DivergenceError(RuntimeError):
    """Raised when too many trajectories leave the overflow guard."""

    def __init__(self, diverged: int, n_traj: int, limit: float):
        self.diverged = diverged
        self.n_traj = n_traj
        super().__init__(f"{diverged} of {n_traj} trajectories diverged "
                         f"(limit {limit:.2%})")


@dataclass(frozen=True)
class GridSpec:
    nz: int
    dt: float
    t_total: float
    n_traj: int = 1
    seed: int = 0
    noise_model: str = "langevin"
    theta: float = 0.5
    overflow_guard: float = 1e6
    max_diverged: float = 0.01
    traj_chunk: int = 8

    def __post_init__(self):
        if self.nz < 2:
            raise ValueError("nz must be at least 2")
        if not self.dt > 0 or not self.t_total > 0:
            raise ValueError("dt and t_total must be positive")
        if self.n_traj < 1:
            raise ValueError("n_traj must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.noise_model not in MODEL_IDS:
            raise ValueError(f"unknown noise model {self.noise_model!r}")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0.5, 1]")
        if self.traj_chunk < 1:
            raise ValueError("traj_chunk must be positive")

    @property
    def nt(self) -> int:
        return int(round(self.t_total / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    def stability(self, params: PhysicalParams) -> dict:
        """Step-size diagnostics recorded with every run.

        ``dt_feedback`` is dt times the rate at which a cell's own field acts
        back on it; the explicit scheme would need it well below 1, the theta
        rule does not.  ``dt_population`` must stay below 1 for the explicit
        population decay.
        """
        h = params.optical_depth / self.nz
        return {"dt_feedback": self.dt * h, "dt_dipole": self.dt * (1.0 + 0.5 * h),
                "dt_population": self.dt * 2.0 * params.gamma}


@dataclass(frozen=True)
class Readout:
    """Where and how the output is analysed.

    window   : (t0, t1) at the probes; None picks the time after the input
               pulse has entered (pulses) or the second half of the run (cw)
    omegas   : analysis frequencies; empty means the pulse modulation frequency
    z_fracs  : probe depths as fractions of L
    grid_nz  : number of z samples in the mean-field grid
    grid_dt  : time spacing of the mean-field grid
    """

    window: tuple[float, float] | None = None
    omegas: tuple[float, ...] = ()
    z_fracs: tuple[float, ...] = (1.0,)
    grid_nz: int = 11
    grid_dt: float = 10.0


@dataclass
class TrajectoryState:
    t: float
    alpha: np.ndarray   # (nz + 1,) boundary values of the E^+ amplitude
    beta: np.ndarray    # (nz + 1,) boundary values of the E amplitude
    sigma: np.ndarray   # (8, nz) atomic c-numbers, see model.VAR_NAMES

    @property
    def sigma3(self):
        return self.sigma[model.S3]

    @property
    def sigma6(self):
        return self.sigma[model.S6]

    @property
    def sigma7(self):
        return self.sigma[model.S7]

    @property
    def sigma11(self):
        return self.sigma[model.S11]

    @property
    def sigma8(self):
        """Upper-state population, never stored."""
        return 1.0 - self.sigma[model.S6] - self.sigma[model.S7]

    def copy(self) -> "TrajectoryState":
        return TrajectoryState(self.t, self.alpha.copy(), self.beta.copy(), self.sigma.copy())


@dataclass(frozen=True)
class QuadratureSpectrum:
    z: float
    freqs: np.ndarray
    S_plus: np.ndarray
    S_minus: np.ndarray
    V_plus: np.ndarray
    V_minus: np.ndarray
    se_plus: np.ndarray
    se_minus: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    eta_plus: np.ndarray
    eta_minus: np.ndarray


@dataclass
class EnsembleResult:
    grid_z: np.ndarray
    grid_t: np.ndarray
    mean_Xplus: np.ndarray      # (len(grid_z), len(grid_t))
    mean_Xminus: np.ndarray
    spectra: tuple[QuadratureSpectrum, ...]
    probe_t: np.ndarray
    mean_probe_Xplus: np.ndarray   # (nprobe, nt + 1)
    mean_probe_Xminus: np.ndarray
    input_Xplus: np.ndarray        # (nt + 1,) boundary input quadratures
    input_Xminus: np.ndarray
    window: tuple[float, float]
    diverged_count: int
    traj_used: int
    backend: str
    wall_time: float
    stability: dict = field(default_factory=dict)

    @property
    def spectrum(self) -> QuadratureSpectrum:
        """Spectrum at the deepest probe (the output plane by default)."""
        return self.spectra[-1]


# ---------------------------------------------------------------------------
# single-trajectory interface

def _boundary(params: PhysicalParams, pulse: PulseSpec | None, t, signal_on=True):
    t = np.asarray(t, dtype=float)
    if pulse is None or not signal_on:
        eps = np.zeros(t.shape, dtype=complex)
    else:
        eps = np.asarray(pulse.field(t), dtype=complex)
    b = params.g_bar * eps
    return np.conj(b), b


def _coupling(params: PhysicalParams, schedule: CouplingSchedule | None, t):
    if schedule is None:
        return np.full(np.shape(t), params.omega_c, dtype=float)
    return np.asarray(schedule.value(t), dtype=float) * np.ones(np.shape(t))


def init_trajectory(params: PhysicalParams, grid: GridSpec,
                    pulse: PulseSpec | None = None, signal_on: bool = True) -> TrajectoryState:
    """All atoms in |1>, no field inside the medium, input at the z = 0 boundary."""
    sigma = model.initial_state(grid.nz)
    a = np.zeros(grid.nz + 1, dtype=complex)
    b = np.zeros(grid.nz + 1, dtype=complex)
    a0, b0 = _boundary(params, pulse, 0.0, signal_on)
    a[0], b[0] = complex(a0), complex(b0)
    return TrajectoryState(0.0, a, b, sigma)


def drift_and_diffusion(state: TrajectoryState, params: PhysicalParams, t: float,
                        schedule: CouplingSchedule | None = None,
                        noise_model: str = "full"):
    """Drift rates (8, nz) and noise coefficients (8, nnoise, nz) of one state.

    The default map is the full 18-noise set.  Coefficients are per unit
    noise; multiply by sqrt(dt / N_cell) for an increment.
    """
    if not (np.all(np.isfinite(state.sigma)) and np.all(np.isfinite(state.alpha))
            and np.all(np.isfinite(state.beta))):
        raise FloatingPointError("non-finite state")
    ec = float(_coupling(params, schedule, t))
    fa, fb = model.cell_fields(state.alpha, state.beta)
    dr = model.drift(state.sigma, fa, fb, ec, params.gamma0, params.gammac)
    B = model.diffusion(state.sigma, fa, fb, ec, params.gamma0, params.gammac,
                        params.g_bar, noise_model)
    return dr, B


def noise_scale(params: PhysicalParams, grid: GridSpec) -> float:
    """sqrt(dt / (n A dz)): each cell holds N / nz atoms."""
    return math.sqrt(grid.dt * grid.nz / params.N)


def step(state: TrajectoryState, params: PhysicalParams, grid: GridSpec,
         rng_stream: np.random.Generator | None = None, *,
         pulse: PulseSpec | None = None, schedule: CouplingSchedule | None = None,
         signal_on: bool = True) -> TrajectoryState:
    """Advance one trajectory by one step (numpy path, for inspection and tests)."""
    t = state.t
    ec = float(_coupling(params, schedule, t))
    h = params.optical_depth / grid.nz
    noise = None
    if rng_stream is not None and grid.noise_model != "none":
        nn = model.NOISE_MODELS[grid.noise_model]
        w = rng_stream.standard_normal((nn, grid.nz))
        fa, fb = model.cell_fields(state.alpha, state.beta)
        B = model.diffusion(state.sigma, fa, fb, ec, params.gamma0, params.gammac,
                            params.g_bar, grid.noise_model)
        noise = np.einsum("ijk,jk->ik", B, w) * noise_scale(params, grid)
    a0, b0 = _boundary(params, pulse, t + grid.dt, signal_on)
    s, a, b = model.step(state.sigma, state.alpha, state.beta, complex(a0), complex(b0),
                         ec, grid.dt, h, params.gamma0, params.gammac, noise, grid.theta)
    bad = not (np.all(np.isfinite(s)) and np.max(np.abs(s)) < grid.overflow_guard
               and np.max(np.abs(a)) < grid.overflow_guard * params.g_bar
               and np.max(np.abs(b)) < grid.overflow_guard * params.g_bar)
    if bad:
        raise DivergenceError(1, 1, 0.0)
    return TrajectoryState(t + grid.dt, a, b, s)


# ---------------------------------------------------------------------------
# ensemble

def step_theta(ec: np.ndarray, theta: float) -> np.ndarray:
    """Per-step implicitness: ``theta`` except just after the start and jumps of ec."""
    out = np.full(len(ec), float(theta))
    jumps = np.concatenate([[0], np.nonzero(np.diff(ec))[0] + 1])
    for j in jumps:
        out[j:j + DAMPING_STEPS] = 1.0
    return out


def _rng(seed: int, traj: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(traj,))))


@dataclass
class _Context:
    nz: int
    nt: int
    dt: float
    h: float
    gamma0: float
    gammac: float
    gbar: float
    scale: float
    model_id: int
    nnoise: int
    theta: np.ndarray
    guard: float
    seed: int
    a_in: np.ndarray
    b_in: np.ndarray
    ec: np.ndarray
    probes: np.ndarray
    win: np.ndarray
    e_pos: np.ndarray
    e_neg: np.ndarray


def _series_to_quadratures(series, gbar):
    """series (nt + 1, 2, nprobe) -> X+, X- with the same shape minus axis 1."""
    a, b = series[:, 0], series[:, 1]
    return (a + b) / gbar, -1j * (a - b) / gbar


def _reduce_traj(ctx: _Context, series):
    """Per-trajectory DFTs (nprobe, 2 quadratures, 2 signs, nomega)."""
    xp, xm = _series_to_quadratures(series, ctx.gbar)
    out = np.empty((series.shape[2], 2, 2, ctx.e_pos.shape[1]), dtype=complex)
    for q, x in enumerate((xp, xm)):
        xw = x[ctx.win]
        out[:, q, 0] = xw.T @ ctx.e_pos
        out[:, q, 1] = xw.T @ ctx.e_neg
    return out, xp, xm


def _chunk_compiled(kernel, ctx: _Context, trajs):
    nprobe = len(ctx.probes)
    dfts = np.zeros((len(trajs), nprobe, 2, 2, ctx.e_pos.shape[1]), dtype=complex)
    sum_p = np.zeros((ctx.nt + 1, nprobe), dtype=complex)
    sum_m = np.zeros((ctx.nt + 1, nprobe), dtype=complex)
    diverged = np.zeros(len(trajs), dtype=bool)
    empty = np.zeros((0, 0, 0))
    for j, traj in enumerate(trajs):
        s = model.initial_state(ctx.nz)
        a = np.zeros(ctx.nz + 1, dtype=complex)
        b = np.zeros(ctx.nz + 1, dtype=complex)
        a[0], b[0] = ctx.a_in[0], ctx.b_in[0]
        series = np.empty((ctx.nt + 1, 2, nprobe), dtype=complex)
        series[0, 0] = a[ctx.probes]
        series[0, 1] = b[ctx.probes]
        gen = _rng(ctx.seed, traj) if ctx.model_id else None
        for n0 in range(0, ctx.nt, CHUNK):
            m = min(CHUNK, ctx.nt - n0)
            normals = gen.standard_normal((m, ctx.nnoise, ctx.nz)) if gen is not None else empty
            bad = kernel.advance(s, a, b, ctx.a_in[n0 + 1:n0 + m + 1], ctx.b_in[n0 + 1:n0 + m + 1],
                                 ctx.ec[n0:n0 + m], normals, ctx.probes, series[n0 + 1:n0 + m + 1],
                                 ctx.dt, ctx.h, ctx.gamma0, ctx.gammac, ctx.gbar, ctx.scale,
                                 ctx.model_id, ctx.theta[n0:n0 + m], ctx.guard)
            if bad:
                diverged[j] = True
                break
        if diverged[j]:
            continue
        dfts[j], xp, xm = _reduce_traj(ctx, series)
        sum_p += xp
        sum_m += xm
    return dfts, sum_p, sum_m, diverged


def _chunk_python(ctx: _Context, trajs):
    nb = len(trajs)
    nprobe = len(ctx.probes)
    s = model.initial_state(ctx.nz, nb)
    a = np.zeros((nb, ctx.nz + 1), dtype=complex)
    b = np.zeros((nb, ctx.nz + 1), dtype=complex)
    a[:, 0], b[:, 0] = ctx.a_in[0], ctx.b_in[0]
    series = np.empty((ctx.nt + 1, nb, 2, nprobe), dtype=complex)
    series[0, :, 0] = a[:, ctx.probes]
    series[0, :, 1] = b[:, ctx.probes]
    gens = [_rng(ctx.seed, t) for t in trajs] if ctx.model_id else None
    diverged = np.zeros(nb, dtype=bool)
    for n0 in range(0, ctx.nt, CHUNK):
        m = min(CHUNK, ctx.nt - n0)
        normals = None
        if gens is not None:
            normals = np.stack([g.standard_normal((m, ctx.nnoise, ctx.nz)) for g in gens], axis=2)
        with np.errstate(all="ignore"):
            bad = _fallback.advance(s, a, b, ctx.a_in[n0 + 1:n0 + m + 1], ctx.b_in[n0 + 1:n0 + m + 1],
                                    ctx.ec[n0:n0 + m], normals, ctx.probes,
                                    series[n0 + 1:n0 + m + 1], ctx.dt, ctx.h, ctx.gamma0,
                                    ctx.gammac, ctx.gbar, ctx.scale, ctx.model_id,
                                    ctx.theta[n0:n0 + m], ctx.guard)
        if bad.any():
            diverged |= bad
            # park diverged rows so they stop producing overflows
            s[:, bad] = model.initial_state(ctx.nz, int(bad.sum()))
            a[bad] = 0.0
            b[bad] = 0.0
    dfts = np.zeros((nb, nprobe, 2, 2, ctx.e_pos.shape[1]), dtype=complex)
    sum_p = np.zeros((ctx.nt + 1, nprobe), dtype=complex)
    sum_m = np.zeros((ctx.nt + 1, nprobe), dtype=complex)
    for j in range(nb):
        if diverged[j]:
            continue
        dfts[j], xp, xm = _reduce_traj(ctx, series[:, j])
        sum_p += xp
        sum_m += xm
    return dfts, sum_p, sum_m, diverged


def _default_window(params, pulse, schedule, t_total):
    if pulse is None or pulse.shape == "cw":
        return (0.5 * t_total, t_total)
    return (pulse.t_start + pulse.duration_T, t_total)


def _spectrum_stats(z, omegas, d, x_in):
    """Statistics of per-trajectory DFTs d (n, 2, 2, nomega) at one probe."""
    n = d.shape[0]
    res = {}
    for q, key in enumerate(("plus", "minus")):
        xp, xm = d[:, q, 0], d[:, q, 1]
        mp, mm = xp.mean(axis=0), xm.mean(axis=0)
        prod = np.real(xp * xm)
        S = 1.0 + prod.mean(axis=0)
        if n > 1:
            y = np.real((xp - mp) * (xm - mm))
            V = 1.0 + y.sum(axis=0) / (n - 1)
            se = y.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            V = np.ones(len(omegas))
            se = np.full(len(omegas), np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            eta = np.abs(mp) ** 2 / np.abs(x_in[q]) ** 2
        res[key] = (S, V, se, 0.5 * np.abs(mp), eta)
    return QuadratureSpectrum(
        z=z, freqs=np.asarray(omegas, dtype=float),
        S_plus=res["plus"][0], S_minus=res["minus"][0],
        V_plus=res["plus"][1], V_minus=res["minus"][1],
        se_plus=res["plus"][2], se_minus=res["minus"][2],
        alpha_plus=res["plus"][3], alpha_minus=res["minus"][3],
        eta_plus=res["plus"][4], eta_minus=res["minus"][4])


def run_ensemble(params: PhysicalParams, grid: GridSpec, pulse: PulseSpec | None = None,
                 signal_on: bool = True, *, schedule: CouplingSchedule | None = None,
                 readout: Readout | None = None, threads: int = 1,
                 backend: str | None = None) -> EnsembleResult:
    """Run grid.n_traj trajectories and reduce them to mean fields and spectra.

    With ``signal_on`` false the boundary input is vacuum and the spectra are
    the noise floor.  Raises DivergenceError if more than
    grid.max_diverged of the trajectories overflow.
    """
    from . import _kernel, BACKEND

    backend = backend or BACKEND
    if backend == "compiled" and _kernel is None:
        raise RuntimeError("compiled kernel is not available")
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    readout = readout or Readout()
    t_start_wall = time.perf_counter()
    nt, dt, nz = grid.nt, grid.dt, grid.nz
    t = np.arange(nt + 1) * dt
    a_in, b_in = _boundary(params, pulse, t, signal_on)
    a_in = np.ascontiguousarray(a_in)
    b_in = np.ascontiguousarray(b_in)
    ec = np.ascontiguousarray(_coupling(params, schedule, t[:-1]))
    theta = step_theta(ec, grid.theta)

    z_idx = [int(round(f * nz)) for f in readout.z_fracs]
    if any(not 0 <= k <= nz for k in z_idx):
        raise ValueError("probe depths must lie in [0, 1]")
    gz_idx = sorted(set(int(round(x)) for x in np.linspace(0, nz, readout.grid_nz)))
    probes = np.array(z_idx + gz_idx, dtype=np.intp)

    window = readout.window or _default_window(params, pulse, schedule, grid.nt * dt)
    win = np.nonzero((t >= window[0] - 1e-9) & (t <= window[1] + 1e-9))[0]
    if len(win) < 2:
        raise ValueError("readout window holds fewer than two samples")
    tw = len(win) * dt
    omegas = np.asarray(readout.omegas if readout.omegas else
                        ((pulse.mod_freq,) if pulse is not None else (0.0,)), dtype=float)
    phase = np.exp(1j * np.outer(t[win], omegas)) * (dt / math.sqrt(tw))
    e_pos, e_neg = phase, np.conj(phase)

    ctx = _Context(nz=nz, nt=nt, dt=dt, h=params.optical_depth / nz, gamma0=params.gamma0,
                   gammac=params.gammac, gbar=params.g_bar, scale=noise_scale(params, grid),
                   model_id=MODEL_IDS[grid.noise_model],
                   nnoise=model.NOISE_MODELS.get(grid.noise_model, 0), theta=theta,
                   guard=grid.overflow_guard, seed=grid.seed, a_in=a_in, b_in=b_in, ec=ec,
                   probes=probes, win=win, e_pos=e_pos, e_neg=e_neg)

    chunks = [list(range(i, min(i + grid.traj_chunk, grid.n_traj)))
              for i in range(0, grid.n_traj, grid.traj_chunk)]
    if backend == "compiled":
        work = lambda tr: _chunk_compiled(_kernel, ctx, tr)  # noqa: E731
    else:
        work = lambda tr: _chunk_python(ctx, tr)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    dfts = np.concatenate([r[0] for r in results])
    diverged = np.concatenate([r[3] for r in results])
    sum_p = np.zeros((nt + 1, len(probes)), dtype=complex)
    sum_m = np.zeros((nt + 1, len(probes)), dtype=complex)
    for r in results:
        sum_p += r[1]
        sum_m += r[2]
    n_div = int(diverged.sum())
    if n_div > grid.max_diverged * grid.n_traj:
        raise DivergenceError(n_div, grid.n_traj, grid.max_diverged)
    used = grid.n_traj - n_div
    mean_p = (sum_p / used).real
    mean_m = (sum_m / used).real
    good = dfts[~diverged]

    xin_p = 2.0 * np.real(b_in) / params.g_bar
    xin_m = -1j * (a_in - b_in) / params.g_bar
    if pulse is not None and pulse.shape == "cw":
        in_idx = win
    else:
        in_idx = np.arange(nt + 1)
    ph_in = np.exp(1j * np.outer(t[in_idx], omegas)) * (dt / math.sqrt(tw))
    x_in = (xin_p[in_idx] @ ph_in, xin_m[in_idx] @ ph_in)

    spectra = tuple(_spectrum_stats(k / nz * params.L, omegas, good[:, i], x_in)
                    for i, k in enumerate(z_idx))
    stride = max(1, int(round(readout.grid_dt / dt)))
    tg = np.arange(0, nt + 1, stride)
    ng = len(z_idx)
    return EnsembleResult(
        grid_z=np.array(gz_idx) / nz * params.L, grid_t=t[tg],
        mean_Xplus=mean_p[tg, ng:].T.copy(), mean_Xminus=mean_m[tg, ng:].T.copy(),
        spectra=spectra, probe_t=t,
        mean_probe_Xplus=mean_p[:, :ng].T.copy(), mean_probe_Xminus=mean_m[:, :ng].T.copy(),
        input_Xplus=xin_p, input_Xminus=np.real(xin_m),
        window=(float(t[win[0]]), float(t[win[-1]])), diverged_count=n_div, traj_used=used,
        backend=backend, wall_time=time.perf_counter() - t_start_wall,
        stability=grid.stability(params))


def storage_protocol(params: PhysicalParams, grid: GridSpec, pulse: PulseSpec,
                     schedule: CouplingSchedule, signal_on: bool = True, *,
                     readout: Readout | None = None, threads: int = 1,
                     backend: str | None = None, check: bool = True) -> EnsembleResult:
    """Write, hold and read a pulse with an abrupt coupling switch.

    With ``check`` the pulse must be entirely inside the medium when the
    coupling goes off and the parameters must pass the validity checks.
    """
    if check:
        rep = validate(params, pulse)
        if not rep.ok:
            names = ", ".join(c.name for c in rep.failures())
            raise ValueError(f"parameters outside the validity domain: {names}")
        if not math.isfinite(schedule.t_off):
            raise ValueError("storage needs a finite switch-off time")
        entered = schedule.t_off >= pulse.t_start + pulse.duration_T
        inside = derive(params).v_g * (schedule.t_off - pulse.t_start) < params.L
        if not (entered and inside):
            raise ValueError("pulse is not compressed inside the medium at t_off")
    return run_ensemble(params, grid, pulse, signal_on, schedule=schedule, readout=readout,
                        threads=threads, backend=backend)
