"""YAML run configurations.

Example::

    kernel: {variant: riesz, alpha: 1.0, n: 2}
    grid: {origin: [-0.96875, -0.96875], spacing: 0.0625, shape: [32, 32]}
    terms:
      - q: 0.5
        sigma: {density: {generator: bump, center: [0, 0], radius: 0.4}}
    omega: {atoms: [[0.5, 0.0, 1.0]]}
    gamma: 1.0
    tol: 1.0e-8
    max_iter: 500
    out_dir: out

``grid.origin`` is the center of the first cell; ``{half_width, cells}``
describes a centered cube instead. Measures are ``null``, a path to a
measure file, or a mapping with ``atoms`` rows ``[x_1, ..., x_n, mass]``
and/or ``density`` (one generator mapping, a list of them, or ``{file: path}``).
Mathematical parameters (alpha, q, gamma) have no defaults.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import fixtures
from .conditions import DEFAULT_SEED
from .core import BoxGrid, GridFunction, Measure, ProblemSpec
from .io import read_grid_function, read_measure
from .kernels import (
    KernelSpec,
    green_ball_kernel,
    green_half_space_kernel,
    load_matrix_kernel,
    matrix_kernel,
    riesz_kernel,
)

GENERATORS = {
    "bump": (fixtures.bump, "radius"),
    "gaussian": (fixtures.gaussian, "width"),
    "indicator_ball": (fixtures.indicator_ball, "radius"),
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class ZeroDataError(ConfigError):
    """Every sigma_i and omega is the zero measure."""


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    problem: ProblemSpec
    tol: float
    max_iter: int
    out_dir: Path
    seed: int


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d or d[key] is None:
        raise ConfigError(f"{where}.{key} is required")
    return d[key]


def _number(value, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number, got {value!r}") from None


def build_kernel(spec: dict, base_dir: Path) -> KernelSpec:
    variant = _require(spec, "variant", "kernel")
    try:
        if variant == "riesz":
            alpha = _number(_require(spec, "alpha", "kernel"), "kernel.alpha")
            n = int(_require(spec, "n", "kernel"))
            return riesz_kernel(alpha, n, spec.get("normalization", "classical"), spec.get("wmp_h"))
        if variant == "green_ball":
            n = int(_require(spec, "n", "kernel"))
            return green_ball_kernel(n, float(spec.get("radius", 1.0)), spec.get("center"))
        if variant == "green_half_space":
            return green_half_space_kernel(int(_require(spec, "n", "kernel")))
        if variant == "matrix":
            if "file" in spec:
                return load_matrix_kernel(base_dir / spec["file"], spec.get("quasi_sym_a"), spec.get("wmp_h", 1.0))
            pts = _require(spec, "points", "kernel")
            entries = _require(spec, "entries", "kernel")
            return matrix_kernel(pts, entries, spec.get("quasi_sym_a"), spec.get("wmp_h", 1.0))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"kernel: {exc}") from None
    raise ConfigError(f"kernel.variant must be riesz, green_ball, green_half_space or matrix, got {variant!r}")


def build_grid(spec, dim: int) -> BoxGrid | None:
    if spec is None:
        return None
    try:
        if "cells" in spec:
            return BoxGrid.cube(dim, float(spec.get("half_width", 1.0)), int(spec["cells"]), spec.get("center"))
        return BoxGrid(tuple(_require(spec, "origin", "grid")), float(_require(spec, "spacing", "grid")),
                       tuple(_require(spec, "shape", "grid")))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from None


def _density(spec, grid: BoxGrid | None, base_dir: Path, where: str) -> GridFunction:
    if isinstance(spec, dict) and "file" in spec:
        return read_grid_function(base_dir / spec["file"])
    if grid is None:
        raise ConfigError(f"{where}: generated densities need a grid")
    items = spec if isinstance(spec, list) else [spec]
    total = np.zeros(grid.size)
    for j, item in enumerate(items):
        name = _require(item, "generator", f"{where}[{j}]")
        if name not in GENERATORS:
            raise ConfigError(f"{where}[{j}].generator must be one of {sorted(GENERATORS)}, got {name!r}")
        fn, size_key = GENERATORS[name]
        center = _require(item, "center", f"{where}[{j}]")
        size = _number(_require(item, size_key, f"{where}[{j}]"), f"{where}[{j}].{size_key}")
        amp = _number(item.get("amplitude", 1.0), f"{where}[{j}].amplitude")
        total += fn(grid, center, size, amp).values
    return GridFunction(grid, total)


def build_measure(spec, dim: int, grid: BoxGrid | None, base_dir: Path, where: str) -> Measure:
    if spec is None or spec == "zero":
        return Measure.zero(dim)
    if isinstance(spec, str):
        return read_measure(base_dir / spec)
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be null, a file name or a mapping")
    try:
        rows = np.asarray(spec.get("atoms") or [], dtype=float)
        if rows.size and (rows.ndim != 2 or rows.shape[1] != dim + 1):
            raise ConfigError(f"{where}.atoms rows must be [x_1, ..., x_{dim}, mass]")
        rows = rows.reshape(-1, dim + 1)
        m = Measure(dim, rows[:, :dim], rows[:, dim])
        if spec.get("density") is not None:
            m = m + Measure.from_density(_density(spec["density"], grid, base_dir, f"{where}.density"))
        return m
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def build_problem(raw: dict, base_dir: Path) -> ProblemSpec:
    kernel = build_kernel(_require(raw, "kernel", "config"), base_dir)
    dim = kernel.n
    grid = build_grid(raw.get("grid"), dim)
    terms_raw = _require(raw, "terms", "config")
    if not isinstance(terms_raw, list) or not terms_raw:
        raise ConfigError("config.terms must be a nonempty list")
    terms = []
    for i, t in enumerate(terms_raw):
        q = _number(_require(t, "q", f"terms[{i}]"), f"terms[{i}].q")
        if not 0 < q < 1:
            raise ConfigError(f"terms[{i}].q: q must lie in (0,1), got {q}")
        terms.append((build_measure(t.get("sigma"), dim, grid, base_dir, f"terms[{i}].sigma"), q))
    omega = build_measure(raw.get("omega"), dim, grid, base_dir, "omega")
    gamma = _number(_require(raw, "gamma", "config"), "gamma")
    if not gamma > 0:
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    if all(s.is_zero for s, _ in terms) and omega.is_zero:
        raise ZeroDataError("(sigma_1, ..., sigma_M, omega) are all zero: the problem has only the zero solution")
    try:
        return ProblemSpec(kernel, tuple(terms), omega, gamma, grid)
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} does not parse: {exc}") from None
    return config_from_dict(raw, path.parent)


def config_from_dict(raw: dict, base_dir: Path) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = copy.deepcopy(raw)
    problem = build_problem(raw, base_dir)
    tol = _number(raw.get("tol", 1e-8), "tol")
    max_iter = int(raw.get("max_iter", 500))
    out_dir = base_dir / str(raw.get("out_dir", "out"))
    seed = int(raw.get("seed", DEFAULT_SEED))
    return RunConfig(raw, base_dir, problem, tol, max_iter, out_dir, seed)
