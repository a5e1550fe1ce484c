"""Positive-P stochastic integrator for the Lambda-medium delay line and memory.

The hot loop lives in a compiled extension (``_kernel``); when it is not
built the numpy implementation in ``_fallback`` is used instead.  Set the
environment variable ``EITMEM_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

try:
    if os.environ.get("EITMEM_BACKEND", "").lower() == "python":
        raise ImportError("fallback requested")
    from . import _kernel
except ImportError:
    _kernel = None

BACKEND = "compiled" if _kernel is not None else "python"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _kernel is not None else ("python",)


from .engine import (  # noqa: E402
    DivergenceError,
    EnsembleResult,
    GridSpec,
    QuadratureSpectrum,
    Readout,
    TrajectoryState,
    drift_and_diffusion,
    init_trajectory,
    run_ensemble,
    step,
    storage_protocol,
)

__all__ = [
    "BACKEND", "available_backends", "DivergenceError", "EnsembleResult", "GridSpec",
    "QuadratureSpectrum", "Readout", "TrajectoryState", "drift_and_diffusion",
    "init_trajectory", "run_ensemble", "step", "storage_protocol",
]
