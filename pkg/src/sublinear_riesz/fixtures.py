"""Density generators and the reference problems used by tests, scripts and the CLI."""

from __future__ import annotations

import numpy as np

from .core import BoxGrid, GridFunction, Measure, ProblemSpec
from .kernels import green_ball_kernel, matrix_kernel, riesz_kernel


def bump(grid: BoxGrid, center, radius: float, amplitude: float = 1.0) -> GridFunction:
    """amplitude * (1 - |x-c|^2/radius^2)^2 inside the ball, 0 outside."""
    r2 = np.sum((grid.centers() - np.asarray(center, float)) ** 2, axis=1) / radius**2
    return GridFunction(grid, amplitude * np.where(r2 < 1, (1 - r2) ** 2, 0.0))


def gaussian(grid: BoxGrid, center, width: float, amplitude: float = 1.0, cutoff: float = 3.0) -> GridFunction:
    """Gaussian profile truncated at ``cutoff`` widths so the support stays compact."""
    r2 = np.sum((grid.centers() - np.asarray(center, float)) ** 2, axis=1) / width**2
    return GridFunction(grid, amplitude * np.where(r2 < cutoff**2, np.exp(-0.5 * r2), 0.0))


def indicator_ball(grid: BoxGrid, center, radius: float, amplitude: float = 1.0) -> GridFunction:
    r = np.linalg.norm(grid.centers() - np.asarray(center, float), axis=1)
    return GridFunction(grid, amplitude * (r < radius))


def random_bumps(grid: BoxGrid, rng: np.random.Generator, count=(1, 3), spread: float = 0.5,
                 radius=(0.15, 0.4), amplitude=(0.5, 2.0)) -> GridFunction:
    """Sum of a random number of bumps with centers in ``[-spread, spread]^n``."""
    total = np.zeros(grid.size)
    for _ in range(int(rng.integers(count[0], count[1] + 1))):
        c = rng.uniform(-spread, spread, grid.dim)
        total += bump(grid, c, rng.uniform(*radius), rng.uniform(*amplitude)).values
    return GridFunction(grid, total)


def random_bump_pair(grid: BoxGrid, rng: np.random.Generator, count=(1, 3), spread: float = 0.5,
                     max_jitter: float = 0.3) -> tuple[GridFunction, GridFunction]:
    """Two bump densities whose bumps are paired: the second copy of each bump
    has its center moved by Gaussian noise of a random scale in ``[0, max_jitter]``
    its radius rescaled by up to 30% and its amplitude redrawn.
    """
    first, second = np.zeros(grid.size), np.zeros(grid.size)
    jitter = rng.uniform(0.0, max_jitter)
    lim = spread + 0.1
    for _ in range(int(rng.integers(count[0], count[1] + 1))):
        c = rng.uniform(-spread, spread, grid.dim)
        r = rng.uniform(0.15, 0.4)
        first += bump(grid, c, r, rng.uniform(0.5, 2.0)).values
        c2 = np.clip(c + rng.normal(0.0, jitter, grid.dim), -lim, lim)
        second += bump(grid, c2, r * rng.uniform(0.7, 1.3), rng.uniform(0.5, 2.0)).values
    return GridFunction(grid, first), GridFunction(grid, second)


def density_measure(f: GridFunction) -> Measure:
    return Measure.from_density(f)


# reference problems ----------------------------------------------------------------


def two_term_problem(cells: int = 64, gamma: float = 1.0) -> ProblemSpec:
    """Two sublinear terms (q = 1/4, 1/2) and smooth data, n = 2, alpha = 1, box [-1, 1]^2."""
    grid = BoxGrid.cube(2, 1.0, cells)
    s1 = bump(grid, (-0.3, 0.0), 0.4, 1.0)
    s2 = bump(grid, (0.3, 0.1), 0.35, 2.0)
    om = bump(grid, (0.0, -0.3), 0.3, 1.0)
    k = riesz_kernel(1.0, 2)
    return ProblemSpec(k, ((Measure.from_density(s1), 0.25), (Measure.from_density(s2), 0.5)),
                       Measure.from_density(om), gamma)


def single_term_problem(cells: int = 32, gamma: float = 1.0, q: float = 0.5) -> ProblemSpec:
    """One sublinear term, n = 2, alpha = 1, box [-1, 1]^2."""
    grid = BoxGrid.cube(2, 1.0, cells)
    sigma = bump(grid, (0.0, 0.0), 0.4, 1.0)
    om = bump(grid, (0.15, -0.1), 0.25, 1.0)
    k = riesz_kernel(1.0, 2)
    return ProblemSpec(k, ((Measure.from_density(sigma), q),), Measure.from_density(om), gamma)


def green_ball_problem(cells: int = 32, gamma: float = 1.0, q: float = 0.5) -> ProblemSpec:
    """Newtonian Green kernel of the unit ball in R^3 on the grid of [-1, 1]^3."""
    grid = BoxGrid.cube(3, 1.0, cells)
    sigma = bump(grid, (0.0, 0.0, 0.0), 0.5, 1.0)
    om = bump(grid, (0.2, 0.0, -0.1), 0.3, 1.0)
    return ProblemSpec(green_ball_kernel(3), ((Measure.from_density(sigma), q),), Measure.from_density(om), gamma)


def scalar_problem(g: float = 1.0, sigma: float = 1.0, q: float = 0.5, omega: float = 2.0) -> ProblemSpec:
    """One-node matrix kernel: u = g*sigma*u^q + g*omega (u = 4 for the defaults)."""
    pts = np.zeros((1, 2))
    k = matrix_kernel(pts, [[g]])
    s = Measure.from_atoms(pts, [sigma])
    om = Measure.from_atoms(pts, [omega]) if omega > 0 else Measure.zero(2)
    return ProblemSpec(k, ((s, q),), om, 1.0)
