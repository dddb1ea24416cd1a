"""Deterministic JSON/CSV writers, run-length label files and run manifests."""
from __future__ import annotations

import csv
import json
import platform
import time
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def encode_labels(labels: np.ndarray) -> dict:
    """Row-major run-length encoding ``[[value, count], ...]``."""
    flat = np.asarray(labels).ravel()
    if not flat.size:
        return {"shape": list(labels.shape), "runs": []}
    edges = np.flatnonzero(np.diff(flat)) + 1
    starts = np.r_[0, edges]
    counts = np.diff(np.r_[starts, flat.size])
    return {"shape": list(labels.shape), "runs": [[int(flat[s]), int(c)] for s, c in zip(starts, counts)]}


def decode_labels(data: dict) -> np.ndarray:
    vals = [v for v, c in data["runs"] for _ in range(c)]
    return np.array(vals, dtype=int).reshape(data["shape"])


def versions() -> dict:
    import scipy

    from . import __version__
    from .kernels import BACKEND

    return {
        "germforge": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernel_backend": BACKEND,
    }


def write_manifest(out_dir: Path, command: str, config: dict, seed, outputs, wall_time: float) -> Path:
    return write_json(Path(out_dir) / "manifest.json", {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "outputs": sorted(str(Path(p).name) for p in outputs),
        "versions": versions(),
        "wall_time_s": round(wall_time, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    })
