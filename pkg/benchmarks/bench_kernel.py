"""Compare the compiled kernel with the numpy fallback.

    python3 benchmarks/bench_kernel.py [--nz 100] [--steps 2000] [--traj 8]

Both backends integrate the same trajectories from the same seeds; the
script reports seconds per trajectory, microseconds per step, the speed-up
and the largest difference between the two results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from eitmem.params import PhysicalParams, PulseSpec, hz_to_gamma
from eitmem.sde import GridSpec, Readout, available_backends, run_ensemble


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--nz", type=int, default=100)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--traj", type=int, default=8)
    ap.add_argument("--noise-model", default="langevin", choices=("none", "langevin", "full"))
    args = ap.parse_args(argv)

    params = PhysicalParams.from_optical_depth(
        651.37, n=1e12, A=0.01, L=12.0, gamma0=hz_to_gamma(250.0), gammac=hz_to_gamma(100.0),
        omega_c=0.22 ** 0.5)
    pulse = PulseSpec(duration_T=50.0, carrier_amp=0.0, mod_freq=0.005, mod_depth_plus=100.0,
                      mod_depth_minus=-100.0, t_start=10.0)
    dt = 0.5
    grid = GridSpec(nz=args.nz, dt=dt, t_total=args.steps * dt, n_traj=args.traj,
                    noise_model=args.noise_model, seed=1)
    readout = Readout(window=(0.5 * args.steps * dt, args.steps * dt))

    results = {}
    print(f"nz={args.nz} steps={args.steps} trajectories={args.traj} noise={args.noise_model}")
    for backend in available_backends():
        t0 = time.perf_counter()
        res = run_ensemble(params, grid, pulse, readout=readout, backend=backend)
        wall = time.perf_counter() - t0
        results[backend] = (wall, res)
        per_step = wall / (args.traj * args.steps) * 1e6
        print(f"{backend:9s} {wall / args.traj:9.4f} s/trajectory {per_step:9.2f} us/step")
    if len(results) == 2:
        (wc, rc), (wp, rp) = results["compiled"], results["python"]
        diff = max(np.max(np.abs(rc.mean_probe_Xplus - rp.mean_probe_Xplus)),
                   np.max(np.abs(rc.spectrum.V_plus - rp.spectrum.V_plus)))
        print(f"speed-up {wp / wc:.1f}x, max |compiled - python| = {diff:.2e}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
