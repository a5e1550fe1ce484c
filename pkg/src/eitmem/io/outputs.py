"""CSV, JSON and manifest writers.

Floats are written with ``repr``, the shortest decimal string that reads back
to the same IEEE-754 double, so files round-trip exactly.
"""

from __future__ import annotations

import json
import math
import platform
from pathlib import Path

import numpy as np

MANIFEST = "manifest.json"


def _fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header: list[str], columns, dat: bool = False) -> Path:
    """Write equal-length columns under a fixed header.

    With ``dat`` a whitespace-separated mirror with a '#' header is written
    next to the CSV for gnuplot.
    """
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header):
        raise ValueError("header and columns differ in length")
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    rows = [[_fmt(c[i]) for c in cols] for i in range(n)]
    path.write_text(",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows))
    if dat:
        path.with_suffix(".dat").write_text(
            "# " + " ".join(header) + "\n" + "".join(" ".join(r) + "\n" for r in rows))
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float array of a numeric CSV written by :func:`write_csv`."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    return header, data.reshape(len(lines) - 1, len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(outdir, cfg, diagnostics: dict, wall_time: float) -> Path:
    """One manifest per output directory: config echo, hash, seed, version, timing."""
    from .. import __version__

    outdir = Path(outdir)
    (outdir / "config.toml").write_text(cfg.echo())
    return write_json(outdir / MANIFEST, {
        "config": cfg.echo(),
        "config_hash": cfg.hash(),
        "seed": cfg.data["run"]["seed"],
        "engine": cfg.engine,
        "version": __version__,
        "python": platform.python_version(),
        "wall_time": wall_time,
        "diagnostics": diagnostics,
    })
