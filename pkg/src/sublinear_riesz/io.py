"""On-disk formats: grid dumps (JSON header + raw little-endian float64), measures, reports, CSV."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import BoxGrid, GridFunction, Measure


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_json(path, obj) -> None:
    atomic_write(path, dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


# grid functions ------------------------------------------------------------------


def grid_header(grid: BoxGrid) -> dict:
    return {"dim": grid.dim, "origin": list(grid.origin), "spacing": grid.spacing, "shape": list(grid.shape)}


def grid_from_header(h: dict) -> BoxGrid:
    return BoxGrid(tuple(h["origin"]), float(h["spacing"]), tuple(h["shape"]))


def write_grid_function(path, f: GridFunction) -> Path:
    """Write ``path`` (JSON header) and its ``.bin`` sibling holding the values."""
    path = Path(path)
    bin_path = path.with_suffix(".bin")
    atomic_write(bin_path, np.asarray(f.values, dtype="<f8").tobytes())
    header = grid_header(f.grid) | {"count": f.grid.size, "dtype": "<f8", "data": bin_path.name}
    write_json(path, header)
    return path


def read_grid_function(path) -> GridFunction:
    path = Path(path)
    h = read_json(path)
    grid = grid_from_header(h)
    values = np.frombuffer((path.parent / h["data"]).read_bytes(), dtype="<f8")
    if len(values) != h["count"] or h["count"] != grid.size:
        raise ValueError(f"{path}: value count does not match the grid")
    return GridFunction(grid, values.copy())


# measures -----------------------------------------------------------------------


def write_measure(path, m: Measure) -> Path:
    """Atoms as [x_1, ..., x_n, mass] rows; a density goes to a grid dump next to it."""
    path = Path(path)
    rows = [list(loc) + [mass] for loc, mass in zip(m.atom_locations.tolist(), m.atom_masses.tolist())]
    doc = {"dim": m.dim, "atoms": rows, "density": None}
    if m.density is not None:
        dens = path.with_name(path.stem + "_density.json")
        write_grid_function(dens, m.density)
        doc["density"] = dens.name
    write_json(path, doc)
    return path


def read_measure(path) -> Measure:
    path = Path(path)
    doc = read_json(path)
    dim = int(doc["dim"])
    rows = np.asarray(doc.get("atoms") or [], dtype=float).reshape(-1, dim + 1)
    atoms = Measure(dim, rows[:, :dim], rows[:, dim])
    if doc.get("density"):
        dens = Measure.from_density(read_grid_function(path.parent / doc["density"]))
        return atoms + dens
    return atoms


# csv ------------------------------------------------------------------------------


def format_float(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) for v in row])
    atomic_write(path, buf.getvalue())
