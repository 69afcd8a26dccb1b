"""Domain types: box grids, grid functions, measures and problem specifications."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BoxGrid:
    """Regular box grid. ``origin`` is the center of cell ``(0, ..., 0)``."""

    origin: tuple[float, ...]
    spacing: float
    shape: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(self.origin) != len(self.shape):
            raise ValueError("origin and shape must have the same length")
        if len(self.shape) < 1:
            raise ValueError("grid needs at least one axis")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if any(s < 1 for s in self.shape):
            raise ValueError("every shape entry must be >= 1")

    @classmethod
    def cube(cls, dim: int, half_width: float, cells: int, center=None) -> "BoxGrid":
        """Grid of ``cells**dim`` cells tiling the cube ``center + [-half_width, half_width]^dim``."""
        h = 2.0 * half_width / cells
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        origin = c - half_width + 0.5 * h
        return cls(tuple(origin), h, (cells,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return prod(self.shape)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def lower(self) -> np.ndarray:
        """Lower corner of the box (cell edge, not center)."""
        return np.asarray(self.origin) - 0.5 * self.spacing

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(self.shape) - 0.5) * self.spacing

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def axes(self) -> list[np.ndarray]:
        return [o + self.spacing * np.arange(s) for o, s in zip(self.origin, self.shape)]

    def centers(self) -> np.ndarray:
        """Cell centers, shape ``(size, dim)``, row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def locate(self, points, atol: float = 1e-9) -> np.ndarray:
        """Flat index of the cell whose center coincides with each point, -1 if none."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (pts - np.asarray(self.origin)) / self.spacing
        idx = np.rint(rel)
        ok = np.all(np.abs(rel - idx) <= atol, axis=1)
        ok &= np.all((idx >= 0) & (idx < np.asarray(self.shape)), axis=1)
        flat = np.full(len(pts), -1, dtype=np.int64)
        if ok.any():
            flat[ok] = np.ravel_multi_index(idx[ok].astype(np.int64).T, self.shape)
        return flat

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the cells of a :class:`BoxGrid`, stored flat in row-major order.

    ``+inf`` is allowed (potentials of atoms); ``nan`` is not.
    """

    grid: BoxGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        if np.isnan(v).any():
            raise ValueError("grid function values must not be NaN")
        object.__setattr__(self, "values", _frozen(v.copy()))

    @classmethod
    def from_callable(cls, grid: BoxGrid, fn) -> "GridFunction":
        return cls(grid, fn(grid.centers()))

    @classmethod
    def zeros(cls, grid: BoxGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.size))

    def array(self) -> np.ndarray:
        """Values reshaped to ``grid.shape`` (read-only view)."""
        return self.values.reshape(self.grid.shape)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def scaled(self, lam: float) -> "GridFunction":
        return GridFunction(self.grid, lam * self.values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise ValueError("cannot add grid functions on different grids")
        return GridFunction(self.grid, self.values + other.values)


@dataclass(frozen=True, eq=False)
class Measure:
    """Nonnegative measure: finitely many atoms plus an optional density on a box grid."""

    dim: int
    atom_locations: np.ndarray = field(default=None)
    atom_masses: np.ndarray = field(default=None)
    density: GridFunction | None = None

    def __post_init__(self):
        locs = self.atom_locations
        masses = self.atom_masses
        if locs is None:
            locs = np.zeros((0, self.dim))
        if masses is None:
            masses = np.zeros(0)
        locs = np.asarray(locs, dtype=float).reshape(-1, self.dim)
        masses = np.asarray(masses, dtype=float).ravel()
        if len(locs) != len(masses):
            raise ValueError("one mass per atom location is required")
        if (masses < 0).any() or not np.isfinite(masses).all():
            raise ValueError("atom masses must be finite and >= 0")
        if not np.isfinite(locs).all():
            raise ValueError("atom locations must be finite")
        if self.density is not None:
            if self.density.grid.dim != self.dim:
                raise ValueError("density grid dimension does not match measure dimension")
            d = self.density.values
            if (d < 0).any() or not np.isfinite(d).all():
                raise ValueError("density values must be finite and >= 0")
        object.__setattr__(self, "atom_locations", _frozen(locs.copy()))
        object.__setattr__(self, "atom_masses", _frozen(masses.copy()))

    @classmethod
    def zero(cls, dim: int) -> "Measure":
        return cls(dim)

    @classmethod
    def from_atoms(cls, locations, masses) -> "Measure":
        locs = np.atleast_2d(np.asarray(locations, dtype=float))
        return cls(locs.shape[1], locs, np.atleast_1d(masses))

    @classmethod
    def from_density(cls, density: GridFunction) -> "Measure":
        return cls(density.grid.dim, density=density)

    @property
    def grid(self) -> BoxGrid | None:
        return None if self.density is None else self.density.grid

    @property
    def has_atoms(self) -> bool:
        return bool((self.atom_masses > 0).any())

    @property
    def is_zero(self) -> bool:
        dens_zero = self.density is None or not (self.density.values > 0).any()
        return dens_zero and not self.has_atoms

    def cell_masses(self) -> np.ndarray:
        """Mass carried by each density cell (zeros if there is no density)."""
        if self.density is None:
            return np.zeros(0)
        return self.density.values * self.density.grid.cell_volume

    def support_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations and masses of all atoms and all positive-density cell centers."""
        locs = [self.atom_locations[self.atom_masses > 0]]
        masses = [self.atom_masses[self.atom_masses > 0]]
        if self.density is not None:
            cm = self.cell_masses()
            pos = cm > 0
            locs.append(self.density.grid.centers()[pos])
            masses.append(cm[pos])
        return np.concatenate(locs, axis=0), np.concatenate(masses)

    def scaled(self, lam: float) -> "Measure":
        if lam < 0:
            raise ValueError("scale factor must be >= 0")
        dens = None if self.density is None else self.density.scaled(lam)
        return Measure(self.dim, self.atom_locations, lam * self.atom_masses, dens)

    def __add__(self, other: "Measure") -> "Measure":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        if self.density is not None and other.density is not None:
            dens = self.density + other.density
        else:
            dens = self.density if self.density is not None else other.density
        return Measure(
            self.dim,
            np.concatenate([self.atom_locations, other.atom_locations]),
            np.concatenate([self.atom_masses, other.atom_masses]),
            dens,
        )

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        locs, _ = self.support_points()
        if len(locs) == 0:
            return None
        return locs.min(axis=0), locs.max(axis=0)


def total_mass(m: Measure) -> float:
    """Sum of atom masses plus density times cell volume, flat index order."""
    total = 0.0
    for w in m.atom_masses:
        total += float(w)
    if m.density is not None:
        total += float(np.sum(m.cell_masses()))
    return total


def restrict_to_ball(m: Measure, center, radius: float) -> Measure:
    """Keep atoms and cells whose location lies strictly inside ``B(center, radius)``.

    Density cells are kept or dropped whole, decided by the cell center.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, dtype=float)
    inside = np.linalg.norm(m.atom_locations - c, axis=1) < radius
    dens = None
    if m.density is not None:
        g = m.density.grid
        keep = np.linalg.norm(g.centers() - c, axis=1) < radius
        dens = GridFunction(g, np.where(keep, m.density.values, 0.0))
    return Measure(m.dim, m.atom_locations[inside], m.atom_masses[inside], dens)


@dataclass(frozen=True)
class LorentzPair:
    r: float
    rho: float

    def __post_init__(self):
        for name in ("r", "rho"):
            v = getattr(self, name)
            if not (v > 0 and v < float("inf")):
                raise ValueError(f"Lorentz exponent {name} must be finite and positive, got {v}")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of ``u = sum_i G(u^{q_i} sigma_i) + G omega``.

    ``grid`` is the solution grid. When omitted it is taken from the first
    density found among the measures; all densities must live on it.
    Matrix kernels carry their own node set and need no grid.
    """

    kernel: "KernelSpec"  # noqa: F821
    terms: tuple[tuple[Measure, float], ...]
    omega: Measure
    gamma: float
    grid: BoxGrid | None = None

    def __post_init__(self):
        terms = tuple((s, float(q)) for s, q in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("at least one (sigma, q) term is required")
        for _, q in terms:
            if not 0.0 < q < 1.0:
                raise ValueError(f"q must lie in (0,1), got {q}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        measures = [s for s, _ in terms] + [self.omega]
        dims = {m.dim for m in measures}
        if len(dims) != 1:
            raise ValueError("all measures must share one dimension")
        if all(m.is_zero for m in measures):
            raise ValueError("(sigma_1, ..., sigma_M, omega) must not all be zero")
        grid = self.grid
        for m in measures:
            if m.density is None:
                continue
            if grid is None:
                grid = m.density.grid
            elif m.density.grid != grid:
                raise ValueError("all densities must live on the solution grid")
        object.__setattr__(self, "grid", grid)

    @property
    def sigmas(self) -> list[Measure]:
        return [s for s, _ in self.terms]

    @property
    def qs(self) -> list[float]:
        return [q for _, q in self.terms]

    @property
    def dim(self) -> int:
        return self.omega.dim


def as_points(x: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))
