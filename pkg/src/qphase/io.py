"""Artifact writers and readers: CSV fields, npz frames, JSON reports.

Floats are printed with a fixed ``%.15e`` format so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .fields import ScalarField, VectorField, WaveField
from .grid import Grid, PhysicsParams

FLOAT_FMT = "%.15e"
AXES = ("x", "y", "z")


def fmt(v: float) -> str:
    v = float(v)
    return "nan" if np.isnan(v) else FLOAT_FMT % v


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_json(path: str | Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def config_hash(config: dict) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_rows(path: Path, header: list[str], rows: Iterable[Iterable[str]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _coord_columns(grid: Grid) -> tuple[list[str], np.ndarray]:
    return list(AXES[: grid.dim]), grid.points()


def write_field_csv(path: str | Path, f: ScalarField | VectorField | WaveField) -> Path:
    """One row per grid point: coordinates, then value components (``nan`` where masked)."""
    grid = f.grid
    names, pts = _coord_columns(grid)
    if isinstance(f, WaveField):
        cols = ["re", "im"]
        vals = np.stack([f.psi.real.ravel(), f.psi.imag.ravel()], axis=1)
    elif isinstance(f, VectorField):
        cols = [f"v_{a}" for a in AXES[: grid.dim]]
        vals = f.filled(np.nan).reshape(grid.dim, -1).T
    else:
        cols = ["value"]
        vals = f.filled(np.nan).reshape(-1, 1)
    rows = ([fmt(v) for v in (*p, *q)] for p, q in zip(pts, vals))
    return _write_rows(Path(path), names + cols, rows)


def read_field_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def save_wavefield(path: str | Path, wf: WaveField, extra: dict | None = None) -> Path:
    """Binary container for large frames: ``psi`` plus JSON metadata."""
    meta = {"grid": wf.grid.to_dict(), "params": {"mass": wf.params.mass, "hbar": wf.params.hbar}}
    meta.update(extra or {})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez(fh, psi=wf.psi, meta=np.array(json.dumps(_jsonable(meta), sort_keys=True)))
    return path


def load_wavefield(path: str | Path) -> WaveField:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        psi = data["psi"]
    return WaveField(Grid.from_dict(meta["grid"]), psi, PhysicsParams(**meta["params"]))


def save_timeseries(directory: str | Path, ts) -> Path:
    """Directory of ``frame_NNNNN.npz`` files plus ``manifest.json`` (times, config, hash)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for k, wf in enumerate(ts.frames):
        name = f"frame_{k:05d}.npz"
        save_wavefield(directory / name, wf)
        names.append(name)
    manifest = {
        "times": [float(t) for t in ts.times],
        "frames": names,
        "config": ts.config,
        "config_hash": config_hash(ts.config),
        "grid": ts.grid.to_dict(),
    }
    write_json(directory / "manifest.json", manifest)
    return directory


def load_timeseries(directory: str | Path):
    from .dynamics import Timeseries

    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    frames = [load_wavefield(directory / name) for name in manifest["frames"]]
    return Timeseries(np.array(manifest["times"]), frames, manifest["config"])


def write_trajectories_csv(path: str | Path, ens) -> Path:
    """Columns ``seed_id, t, x[, y, z]``; samples after termination are omitted."""
    dim = ens.positions.shape[2]

    def rows():
        for s in range(ens.positions.shape[0]):
            for k, t in enumerate(ens.times):
                r = ens.positions[s, k]
                if np.all(np.isfinite(r)):
                    yield [str(s), fmt(t), *(fmt(v) for v in r)]

    return _write_rows(Path(path), ["seed_id", "t", *AXES[:dim]], rows())


def write_surface_csv(path: str | Path, samples: np.ndarray, dim: int) -> Path:
    header = [*AXES[:dim], *(f"p{a}" for a in AXES[:dim]), "H_F"]
    return _write_rows(Path(path), header, ([fmt(v) for v in row] for row in samples))


def write_table_csv(path: str | Path, header: list[str], rows: Iterable[Iterable[float]]) -> Path:
    return _write_rows(Path(path), header, ([fmt(v) for v in row] for row in rows))
