"""Strict TOML run configuration.

Every section has a fixed set of keys; unknown keys, wrong types and
missing required keys are configuration errors.  The effective
configuration (defaults filled in) is echoed back as TOML and its bytes are
hashed, so the hash changes exactly when an effective parameter changes.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from ..params import (GAMMA_HZ_DEFAULT, CouplingSchedule, PhysicalParams, PulseSpec,
                      hz_to_gamma, light_speed)
from ..sde.engine import GridSpec, Readout

ENGINES = ("sde", "analytic", "storage", "benchmark")
REQUIRED = object()

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {"engine": (str, "sde"), "seed": (int, 0), "threads": (int, 1),
            "strict": (bool, False)},
    "physics": {"d": (float, REQUIRED), "n": (float, REQUIRED), "A": (float, REQUIRED),
                "L": (float, REQUIRED), "omega_c2": (float, REQUIRED),
                "gamma0": (float, 0.0), "gammac": (float, 0.0),
                "rate_unit": (str, "gamma"), "gamma_hz": (float, GAMMA_HZ_DEFAULT)},
    "pulse": {"duration_T": (float, REQUIRED), "carrier_amp": (float, 0.0),
              "mod_freq": (float, 0.0), "mod_depth_plus": (float, 0.0),
              "mod_depth_minus": (float, 0.0), "t_start": (float, 0.0),
              "shape": (str, "supergauss"), "order": (int, 6)},
    "schedule": {"t_off": (float, math.inf), "t_on": (float, math.inf)},
    "grid": {"nz": (int, REQUIRED), "dt": (float, REQUIRED), "t_total": (float, REQUIRED),
             "n_traj": (int, 1), "noise_model": (str, "langevin"), "theta": (float, 0.5),
             "overflow_guard": (float, 1e6), "max_diverged": (float, 0.01),
             "traj_chunk": (int, 8)},
    "readout": {"window": (list, []), "omegas": (list, []), "z_fracs": (list, [1.0]),
                "grid_nz": (int, 11), "grid_dt": (float, 10.0)},
    "analytic": {"z_fracs": (list, [0.2, 0.4, 0.6, 0.8, 1.0]), "omega_min": (float, -0.02),
                 "omega_max": (float, 0.02), "n_omega": (int, 81)},
    "storage": {"mode": (str, "ideal"), "hold": (float, math.nan), "nz": (int, 512),
                "n_t": (int, 2048), "bandwidth": (float, math.nan)},
    "benchmark": {"eta": (float, 0.4), "noise": (float, 0.12), "alpha": (float, 1.0)},
    "tv_map": {"plane": (str, "loss_noise"), "x_min": (float, 0.0), "x_max": (float, 1.0),
               "x_n": (int, 51), "y_min": (float, 0.0), "y_max": (float, 3.0),
               "y_n": (int, 61)},
    "outputs": {"dir": (str, "out"), "dat": (bool, False)},
}

NEEDS = {"sde": ("physics", "grid"), "analytic": ("physics",),
         "storage": ("physics", "pulse", "schedule"), "benchmark": ()}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Effective configuration and the objects built from it."""

    data: dict
    source: str = "<memory>"
    params: PhysicalParams | None = None
    pulse: PulseSpec | None = None
    schedule: CouplingSchedule | None = None
    grid: GridSpec | None = None
    readout: Readout | None = None
    warnings: list = field(default_factory=list)

    @property
    def engine(self) -> str:
        return self.data["run"]["engine"]

    def section(self, name: str) -> dict:
        return self.data.get(name, {})

    def echo(self) -> str:
        """Effective configuration as TOML; non-finite floats are omitted."""
        return dump_toml(self.data)

    def hash(self) -> str:
        """Content hash of the effective configuration.

        The worker-thread count is left out: results do not depend on it.
        """
        data = {k: dict(v) for k, v in self.data.items()}
        data["run"].pop("threads", None)
        return hashlib.sha256(dump_toml(data).encode()).hexdigest()


def _coerce(section: str, key: str, kind, value):
    where = f"[{section}].{key}"
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(f"{where}: expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    raise AssertionError(kind)


def normalise(raw: dict) -> dict:
    """Check keys and types and fill defaults for every section present."""
    if not raw:
        raise ConfigError("configuration is empty")
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    out: dict = {}
    present = set(raw) | {"run", "outputs"}
    for name in SCHEMA:
        if name not in present:
            continue
        body = raw.get(name, {})
        if not isinstance(body, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = sorted(set(body) - set(SCHEMA[name]))
        if extra:
            raise ConfigError(f"[{name}]: unknown key(s) {', '.join(extra)}")
        sec = {}
        for key, (kind, default) in SCHEMA[name].items():
            if key in body:
                sec[key] = _coerce(name, key, kind, body[key])
            elif default is REQUIRED:
                raise ConfigError(f"[{name}].{key} is required")
            else:
                sec[key] = list(default) if isinstance(default, list) else default
        out[name] = sec
    engine = out["run"]["engine"]
    if engine not in ENGINES:
        raise ConfigError(f"[run].engine must be one of {', '.join(ENGINES)}")
    missing = [s for s in NEEDS[engine] if s not in out]
    if missing:
        raise ConfigError(f"engine {engine!r} needs section(s): {', '.join(missing)}")
    if "physics" in out and out["physics"]["rate_unit"] not in ("gamma", "hz"):
        raise ConfigError("[physics].rate_unit must be 'gamma' or 'hz'")
    win = out.get("readout", {}).get("window", [])
    if win and len(win) != 2:
        raise ConfigError("[readout].window must hold two times")
    return out


def build(data: dict, source: str = "<memory>") -> RunConfig:
    """Construct the physics objects; model errors become ConfigError."""
    cfg = RunConfig(data=data, source=source)
    try:
        if "physics" in data:
            ph = data["physics"]
            if ph["rate_unit"] == "hz":
                g0 = hz_to_gamma(ph["gamma0"], ph["gamma_hz"])
                gc = hz_to_gamma(ph["gammac"], ph["gamma_hz"])
            else:
                g0, gc = ph["gamma0"], ph["gammac"]
            cfg.params = PhysicalParams.from_optical_depth(
                ph["d"], n=ph["n"], A=ph["A"], L=ph["L"], gamma0=g0, gammac=gc,
                omega_c=math.sqrt(ph["omega_c2"]), c_light=light_speed(ph["gamma_hz"]))
        if "pulse" in data:
            cfg.pulse = PulseSpec(**data["pulse"])
        if "schedule" in data and cfg.params is not None:
            s = data["schedule"]
            cfg.schedule = CouplingSchedule(omega_on=cfg.params.omega_c, t_off=s["t_off"],
                                            t_on=s["t_on"])
        if "grid" in data:
            g = dict(data["grid"])
            cfg.grid = GridSpec(seed=data["run"]["seed"], **g)
        if "readout" in data:
            r = data["readout"]
            cfg.readout = Readout(window=tuple(r["window"]) if r["window"] else None,
                                  omegas=tuple(r["omegas"]), z_fracs=tuple(r["z_fracs"]),
                                  grid_nz=r["grid_nz"], grid_dt=r["grid_dt"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return cfg


def loads(text: str, source: str = "<memory>") -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        # the message carries "(at line L, column C)"
        raise ConfigError(f"{source}: {exc}") from exc
    return build(normalise(raw), source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads(text, str(path))


def apply_overrides(cfg: RunConfig, *, seed=None, threads=None, strict=None) -> RunConfig:
    """Command-line overrides become part of the effective configuration."""
    data = {k: dict(v) for k, v in cfg.data.items()}
    if seed is not None:
        data["run"]["seed"] = int(seed)
    if threads is not None:
        data["run"]["threads"] = int(threads)
    if strict is not None:
        data["run"]["strict"] = bool(strict)
    return build(data, cfg.source)


def dump_toml(data: dict) -> str:
    """TOML text of a normalised configuration.

    TOML has no literal for inf or nan in tomli_w output, so non-finite
    values (which are the defaults of the keys that allow them) are left out
    and come back as defaults on reload.
    """
    clean = {}
    for name, sec in data.items():
        clean[name] = {k: v for k, v in sec.items()
                       if not (isinstance(v, float) and not math.isfinite(v))}
    return tomli_w.dumps(clean)
