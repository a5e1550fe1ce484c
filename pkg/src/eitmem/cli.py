"""Command-line entry point.

    eitmem simulate  --config run.toml [--out DIR] [--seed S] [--threads N] [--strict]
    eitmem analytic  --config run.toml
    eitmem storage   --config run.toml [--mode ideal|sinc|kernel] [--hold T]
    eitmem benchmark [point|fidelity|tv-map] [--eta E] [--noise V] [--alpha A] [--plane P]
    eitmem tv-map    [--plane loss-noise|gain-loss]
    eitmem validate  --config run.toml

Exit codes: 0 ok, 2 configuration error, 3 validity failure under --strict,
4 too many diverged trajectories.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import analytic, benchmarks, storage
from .io.config import ConfigError, RunConfig, apply_overrides, load_config, loads
from .io.outputs import write_csv, write_json, write_manifest
from .params import derive, validate
from .sde import DivergenceError, run_ensemble, storage_protocol

EXIT_OK, EXIT_CONFIG, EXIT_VALIDITY, EXIT_DIVERGED = 0, 2, 3, 4

log = logging.getLogger("eitmem")


def _config(args, required: bool = True) -> RunConfig:
    if args.config is None:
        if required:
            raise ConfigError("--config is required for this command")
        cfg = loads('[run]\nengine = "benchmark"\n')
    else:
        cfg = load_config(args.config)
    return apply_overrides(cfg, seed=args.seed, threads=args.threads,
                           strict=True if args.strict else None)


def _outdir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.section("outputs").get("dir", "out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _check_validity(cfg: RunConfig) -> dict:
    """Validity report; failures warn, or stop the run under strict mode."""
    if cfg.params is None:
        return {}
    rep = validate(cfg.params, cfg.pulse)
    for c in rep.failures():
        log.warning("validity check %s failed: margin %.3g", c.name, c.margin)
    if not rep.ok and cfg.data["run"]["strict"]:
        raise _StrictFailure(", ".join(c.name for c in rep.failures()))
    return rep.as_dict()


class _StrictFailure(RuntimeError):
    pass


def _dat(cfg):
    return bool(cfg.section("outputs").get("dat", False))


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if cfg.params is None or cfg.grid is None:
        raise ConfigError("simulate needs [physics] and [grid]")
    validity = _check_validity(cfg)
    out = _outdir(args, cfg)
    threads = cfg.data["run"]["threads"]
    t0 = time.perf_counter()
    sched = cfg.schedule
    if sched is not None and math.isfinite(sched.t_off):
        res = storage_protocol(cfg.params, cfg.grid, cfg.pulse, sched, readout=cfg.readout,
                               threads=threads, check=False)
    else:
        res = run_ensemble(cfg.params, cfg.grid, cfg.pulse, schedule=sched,
                           readout=cfg.readout, threads=threads)
    dat = _dat(cfg)
    sp = res.spectrum
    write_csv(out / "spectrum.csv",
              ["omega", "S_plus", "S_minus", "V_plus", "V_minus", "se_plus", "se_minus"],
              [sp.freqs, sp.S_plus, sp.S_minus, sp.V_plus, sp.V_minus, sp.se_plus, sp.se_minus],
              dat)
    rows = [(s.z, i) for s in res.spectra for i in range(len(s.freqs))]
    spec_of = {s.z: s for s in res.spectra}
    cols = [[z for z, _ in rows]]
    for name in ("freqs", "S_plus", "S_minus", "V_plus", "V_minus", "se_plus", "se_minus",
                 "alpha_plus", "alpha_minus", "eta_plus", "eta_minus"):
        cols.append([getattr(spec_of[z], name)[i] for z, i in rows])
    write_csv(out / "spectra.csv",
              ["z", "omega", "S_plus", "S_minus", "V_plus", "V_minus", "se_plus", "se_minus",
               "alpha_plus", "alpha_minus", "eta_plus", "eta_minus"], cols, dat)
    header = ["t", "Xplus_in", "Xminus_in"]
    pcols = [res.probe_t, res.input_Xplus, res.input_Xminus]
    for s, xp, xm in zip(res.spectra, res.mean_probe_Xplus, res.mean_probe_Xminus):
        header += [f"Xplus_z{s.z!r}", f"Xminus_z{s.z!r}"]
        pcols += [xp, xm]
    write_csv(out / "probes.csv", header, pcols, dat)
    zz, tt = np.meshgrid(res.grid_z, res.grid_t, indexing="ij")
    write_csv(out / "mean_field.csv", ["t", "z", "Xplus", "Xminus"],
              [tt.ravel(), zz.ravel(), res.mean_Xplus.ravel(), res.mean_Xminus.ravel()], dat)
    diag = {"diverged_count": res.diverged_count, "traj_used": res.traj_used,
            "backend": res.backend, "window": list(res.window), "stability": res.stability,
            "validity": validity, "threads": threads}
    write_manifest(out, cfg, diag, time.perf_counter() - t0)
    print(f"eta+ = {sp.eta_plus[0]:.4f}  V+ - 1 = {sp.V_plus[0] - 1:.4f} +- {sp.se_plus[0]:.4f}"
          f"  ({res.traj_used} trajectories, {res.backend}) -> {out}")
    return EXIT_OK


def cmd_analytic(args) -> int:
    cfg = _config(args)
    if cfg.params is None:
        raise ConfigError("analytic needs [physics]")
    validity = _check_validity(cfg)
    out = _outdir(args, cfg)
    t0 = time.perf_counter()
    a = cfg.section("analytic") or {"z_fracs": [0.2, 0.4, 0.6, 0.8, 1.0], "omega_min": -0.02,
                                    "omega_max": 0.02, "n_omega": 81}
    p = cfg.params
    omegas = np.linspace(a["omega_min"], a["omega_max"], a["n_omega"])
    cols = [[] for _ in range(7)]
    for zf in a["z_fracs"]:
        z = zf * p.L
        for w in omegas:
            ch = analytic.channel(p, z, float(w))
            s_out = float(analytic.delay_spectrum(p, z, float(w), 1.0))
            for c, v in zip(cols, (z, w, ch.eta, ch.nf, ch.noise, s_out,
                                   float(analytic.snr(1.0, s_out)))):
                c.append(v)
    write_csv(out / "analytic.csv", ["z", "omega", "eta", "nf", "v_noise", "S_out", "snr_unit"],
              cols, _dat(cfg))
    der = derive(p)
    write_json(out / "derived.json", {k: getattr(der, k) for k in der.__dataclass_fields__})
    write_manifest(out, cfg, {"validity": validity}, time.perf_counter() - t0)
    print(f"analytic spectra for {len(a['z_fracs'])} depths -> {out}")
    return EXIT_OK


def cmd_storage(args) -> int:
    cfg = _config(args)
    if cfg.params is None or cfg.pulse is None or cfg.schedule is None:
        raise ConfigError("storage needs [physics], [pulse] and [schedule]")
    validity = _check_validity(cfg)
    out = _outdir(args, cfg)
    t0 = time.perf_counter()
    st = dict(cfg.section("storage") or {"mode": "ideal", "hold": math.nan, "nz": 512,
                                          "n_t": 2048, "bandwidth": math.nan})
    mode = args.mode or st["mode"]
    sched, pulse, p = cfg.schedule, cfg.pulse, cfg.params
    t_off = sched.t_off
    if not math.isfinite(t_off):
        raise ConfigError("[schedule].t_off must be finite for storage")
    hold_t = args.hold if args.hold is not None else (
        st["hold"] if math.isfinite(st["hold"]) else sched.t_on - t_off)
    if not math.isfinite(hold_t):
        raise ConfigError("no hold time: set [schedule].t_on, [storage].hold or --hold")
    t_on = t_off + hold_t
    der = derive(p)
    bw = st["bandwidth"] if math.isfinite(st["bandwidth"]) else None
    t_in = np.linspace(pulse.t_start - 0.5 * pulse.duration_T, t_off, st["n_t"])
    e_in = pulse.field(t_in)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        coh = storage.write(e_in, p, t_off=t_off, t=t_in, mode=mode, nz=st["nz"],
                            bandwidth=bw, duration_T=pulse.duration_T)
        held = storage.hold(coh, hold_t, p)
        t_out = np.linspace(t_on, t_on + 1.2 * p.L / der.v_g, st["n_t"])
        _, e_out = storage.read(held, p, t_out, t_on=t_on, mode=mode, bandwidth=bw)
    for w in caught:
        log.warning("%s", w.message)
    dat = _dat(cfg)
    write_csv(out / "input.csv", ["t", "E_re", "E_im"], [t_in, e_in.real, e_in.imag], dat)
    write_csv(out / "stored.csv", ["z", "sigma_re", "sigma_im"],
              [coh.grid, held.samples.real, held.samples.imag], dat)
    write_csv(out / "output.csv", ["t", "E_re", "E_im"], [t_out, e_out.real, e_out.imag], dat)
    rep = storage.end_to_end(p, hold_t, pulse)
    info = rep.as_dict()
    info.update(mode=mode, truncation_loss=coh.truncation_loss, t_off=t_off, t_on=t_on)
    write_json(out / "transfer.json", info)
    write_manifest(out, cfg, {"validity": validity, "warnings": [str(w.message) for w in caught]},
                   time.perf_counter() - t0)
    print(f"amplitude factor {rep.amplitude_factor:.6g}, time-bandwidth {rep.tb_product:.6g}"
          f" ({mode}) -> {out}")
    return EXIT_OK


def _tv_map(args, cfg, out) -> int:
    tv = dict(cfg.section("tv_map") or {"plane": "loss_noise", "x_min": 0.0, "x_max": 1.0,
                                        "x_n": 51, "y_min": 0.0, "y_max": 3.0, "y_n": 61})
    plane = (args.plane or tv["plane"]).replace("-", "_")
    if plane == "gain_loss" and cfg.section("tv_map") == {}:
        tv.update(x_max=3.0, y_max=3.0)
    x = np.linspace(tv["x_min"], tv["x_max"], tv["x_n"])
    y = np.linspace(tv["y_min"], tv["y_max"], tv["y_n"])
    m = benchmarks.regime_map(plane, x, y, threads=cfg.data["run"]["threads"])
    xx, yy = np.meshgrid(m.x, m.y, indexing="ij")
    names = ("eta", "v_noise") if plane == "loss_noise" else ("gain", "loss")
    write_csv(out / "tv_map.csv", [*names, "T", "V", "region"],
              [xx.ravel(), yy.ravel(), m.T.ravel(), m.V.ravel(), m.labels.ravel()], _dat(cfg))
    b = m.boundaries
    write_csv(out / "tv_boundary.csv", [*names, "from", "to"],
              [[q[0] for q in b], [q[1] for q in b], [q[2] for q in b], [q[3] for q in b]])
    print(f"{plane} map {len(x)}x{len(y)}, {len(b)} boundary points -> {out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _config(args, required=False)
    out = _outdir(args, cfg)
    t0 = time.perf_counter()
    action = args.action or "point"
    if action == "tv-map":
        code = _tv_map(args, cfg, out)
        write_manifest(out, cfg, {"action": action}, time.perf_counter() - t0)
        return code
    b = dict(cfg.section("benchmark") or {"eta": 0.4, "noise": 0.12, "alpha": 1.0})
    eta = args.eta if args.eta is not None else b["eta"]
    noise = args.noise if args.noise is not None else b["noise"]
    alpha = args.alpha if args.alpha is not None else b["alpha"]
    if not 0 <= eta <= 1 or noise < 0:
        raise ConfigError("need 0 <= eta <= 1 and noise >= 0")
    f = benchmarks.fidelity(alpha, math.sqrt(eta), noise)
    p = benchmarks.tv_eit(eta, noise)
    region = benchmarks.classify(p)
    write_json(out / "benchmark.json", {"F": f, "T": p.T, "V": p.V, "region": region.value,
                                        "eta": eta, "noise": noise, "alpha": alpha})
    write_manifest(out, cfg, {"action": action}, time.perf_counter() - t0)
    if action == "fidelity":
        print(f"F = {f:.6f}")
    else:
        print(f"F = {f:.6f}  T = {p.T:.6f}  V = {p.V:.6f}  region {region.value}")
    return EXIT_OK


def cmd_tv_map(args) -> int:
    cfg = _config(args, required=False)
    out = _outdir(args, cfg)
    t0 = time.perf_counter()
    code = _tv_map(args, cfg, out)
    write_manifest(out, cfg, {"action": "tv-map"}, time.perf_counter() - t0)
    return code


def cmd_validate(args) -> int:
    cfg = _config(args)
    if cfg.params is None:
        print(f"{cfg.source}: configuration parsed (no physics section)")
        return EXIT_OK
    rep = validate(cfg.params, cfg.pulse)
    for c in rep.checks:
        flag = "ok" if c.passed else ("advisory" if c.advisory else "FAIL")
        print(f"{c.name:34s} {c.margin:12.4g}  {flag}")
    print(f"config hash {cfg.hash()}")
    if not rep.ok and cfg.data["run"]["strict"]:
        return EXIT_VALIDITY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides [outputs].dir)")
    common.add_argument("--seed", type=int, help="master seed (overrides [run].seed)")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--strict", action="store_true",
                        help="treat failed validity checks as errors")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="eitmem", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="stochastic ensemble run"
                   ).set_defaults(func=cmd_simulate)
    sub.add_parser("analytic", parents=[common], help="closed-form spectra"
                   ).set_defaults(func=cmd_analytic)
    s = sub.add_parser("storage", parents=[common], help="write, hold and read maps")
    s.add_argument("--mode", choices=storage.MODES)
    s.add_argument("--hold", type=float, help="hold time in units of 1/gamma")
    s.set_defaults(func=cmd_storage)
    b = sub.add_parser("benchmark", parents=[common], help="fidelity and TV scores")
    b.add_argument("action", nargs="?", choices=("point", "fidelity", "tv-map"))
    b.add_argument("--eta", type=float)
    b.add_argument("--noise", type=float)
    b.add_argument("--alpha", type=float)
    b.add_argument("--plane", choices=("loss-noise", "gain-loss"))
    b.set_defaults(func=cmd_benchmark)
    t = sub.add_parser("tv-map", parents=[common], help="classified TV regime grid")
    t.add_argument("--plane", choices=("loss-noise", "gain-loss"))
    t.set_defaults(func=cmd_tv_map)
    sub.add_parser("validate", parents=[common], help="parse a config and report validity"
                   ).set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _StrictFailure as exc:
        print(f"validity checks failed under --strict: {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except DivergenceError as exc:
        print(f"run rejected: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
