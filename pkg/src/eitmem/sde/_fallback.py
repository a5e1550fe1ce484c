"""Pure numpy chunk integrator, used when the compiled kernel is absent.

Same contract as the compiled ``advance`` except that a whole batch of
trajectories is advanced at once: every array carries a batch axis.
"""

from __future__ import annotations

import numpy as np

from . import model

MODEL_NAMES = {1: "full", 2: "langevin"}


def advance(s, a, b, a0, b0, ec, normals, probes, out, dt, h, gamma0, gammac,
            gbar, noise_scale, noise_model, theta, guard):
    """Advance a batch by len(ec) steps, in place.

    s (8, B, nz), a and b (B, nz + 1), a0/b0/ec/theta (m,), normals
    (m, nnoise, B, nz) or None, out (m, B, 2, nprobe).
    Returns a boolean array (B,) marking trajectories outside the guard region.
    """
    probes = np.asarray(probes, dtype=np.intp)
    noisy = noise_model != 0 and normals is not None and len(normals) > 0
    name = MODEL_NAMES.get(noise_model)
    for n in range(len(ec)):
        noise = None
        if noisy:
            fa, fb = model.cell_fields(a, b)
            B = model.diffusion(s, fa, fb, ec[n], gamma0, gammac, gbar, name)
            noise = np.einsum("ij...,j...->i...", B, normals[n]) * noise_scale
        s_new, a_new, b_new = model.step(s, a, b, a0[n], b0[n], ec[n], dt, h,
                                         gamma0, gammac, noise, theta[n])
        s[...] = s_new
        a[...] = a_new
        b[...] = b_new
        out[n, :, 0, :] = a[:, probes]
        out[n, :, 1, :] = b[:, probes]
    with np.errstate(invalid="ignore"):
        finite = (np.all(np.isfinite(s), axis=(0, 2)) & np.all(np.isfinite(a), axis=1)
                  & np.all(np.isfinite(b), axis=1))
        amax = np.max(np.abs(s), axis=(0, 2))
        gmax = np.maximum(np.max(np.abs(a), axis=1), np.max(np.abs(b), axis=1))
    return ~finite | (amax >= guard) | (gmax >= guard * gbar)
