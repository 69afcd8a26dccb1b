"""Potentials of measures: direct summation, FFT convolution, Havin-Maz'ya
potentials and the intrinsic potential built from localized weighted norm
constants.

Density cells are treated as point masses at their centers, except that a
cell acting on its own center uses :meth:`KernelSpec.self_cell`.
"""

from __future__ import annotations

import os
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.optimize import minimize_scalar

from .core import BoxGrid, GridFunction, Measure, as_points, restrict_to_ball
from .kernels import KernelSpec, Riesz, riesz_kernel

_CHUNK = 2_000_000  # kernel entries evaluated per block


def fft_workers() -> int:
    """Worker count for FFTs, capped by ``RS_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("RS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(eq=False)
class PotentialField:
    targets: BoxGrid | np.ndarray
    values: np.ndarray
    kernel: KernelSpec
    measure: Measure

    def as_grid_function(self) -> GridFunction:
        if not isinstance(self.targets, BoxGrid):
            raise TypeError("potential was evaluated on a point list, not a grid")
        return GridFunction(self.targets, self.values)


def _target_points(targets) -> np.ndarray:
    return targets.centers() if isinstance(targets, BoxGrid) else as_points(targets)


def _block_sum(k: KernelSpec, X: np.ndarray, Y: np.ndarray, w: np.ndarray, self_value=None, tol=0.0):
    """Sum_j w_j K(x_i, y_j) with optional replacement of coincident pairs."""
    out = np.zeros(len(X))
    if len(Y) == 0 or len(X) == 0:
        return out
    step = max(1, _CHUNK // len(Y))
    for s in range(0, len(X), step):
        Xb = X[s : s + step]
        K = k.pairwise(Xb, Y)
        if self_value is not None:
            diff = np.zeros(K.shape)
            for a in range(X.shape[1]):
                diff += (Xb[:, a, None] - Y[None, :, a]) ** 2
            i, j = np.nonzero(diff <= tol * tol)
            K[i, j] = self_value[j]
        with np.errstate(invalid="ignore"):
            out[s : s + step] = K @ w
    return out


def potential_direct(k: KernelSpec, m: Measure, targets) -> PotentialField:
    """Evaluate G m at the targets by direct summation.

    Atoms contribute ``mass * G(x, loc)`` (``+inf`` on top of an atom),
    density cells ``density * cell_volume * G(x, center)``. Grid targets
    outside the kernel domain get 0.
    """
    X = _target_points(targets)
    values = np.zeros(len(X))
    if isinstance(targets, BoxGrid) and not k.is_matrix:
        active = k.in_domain(X)
    else:
        active = np.ones(len(X), dtype=bool)
        if not k.in_domain(X).all():
            raise ValueError("target outside the kernel domain")
    Xa = X[active]
    pos = m.atom_masses > 0
    if pos.any():
        values[active] += _block_sum(k, Xa, m.atom_locations[pos], m.atom_masses[pos])
    if m.density is not None:
        if k.is_matrix:
            raise ValueError("matrix kernels act on atoms placed at their nodes")
        g = m.density.grid
        cm = m.cell_masses()
        nz = cm > 0
        C = g.centers()[nz]
        if not k.in_domain(C).all():
            raise ValueError("density support leaves the kernel domain")
        selfv = k.self_cell(C, g.cell_volume)
        values[active] += _block_sum(k, Xa, C, cm[nz], selfv, tol=1e-9 * g.spacing)
    return PotentialField(targets, values, k, m)


class RieszConvolver:
    """Riesz potential of grid densities by zero-padded linear convolution.

    The padded kernel holds c|z|^{alpha-n} at every lattice offset z and the
    self-cell value at z = 0, so the result equals direct summation up to
    rounding.
    """

    def __init__(self, k: KernelSpec, grid: BoxGrid):
        if not isinstance(k.variant, Riesz):
            raise TypeError("FFT evaluation needs a Riesz kernel")
        if k.n != grid.dim:
            raise ValueError("kernel and grid dimensions differ")
        self.kernel = k
        self.grid = grid
        self.padded = tuple(sfft.next_fast_len(2 * s - 1, real=True) for s in grid.shape)
        mesh = np.meshgrid(
            *[np.minimum(np.arange(P), P - np.arange(P)) * grid.spacing for P in self.padded],
            indexing="ij",
        )
        r = np.sqrt(sum(m * m for m in mesh))
        v = k.variant
        with np.errstate(divide="ignore"):
            ker = v.constant * r ** (v.alpha - v.n)
        ker[(0,) * grid.dim] = k.self_cell(np.zeros((1, grid.dim)), grid.cell_volume)[0]
        self._kernel_hat = sfft.rfftn(ker, self.padded, workers=fft_workers())

    def apply(self, density: np.ndarray) -> np.ndarray:
        """Potential at every cell center of ``density`` (flat or shaped) times cell volume."""
        f = np.asarray(density, dtype=float).reshape(self.grid.shape) * self.grid.cell_volume
        w = fft_workers()
        out = sfft.irfftn(sfft.rfftn(f, self.padded, workers=w) * self._kernel_hat, self.padded, workers=w)
        sl = tuple(slice(0, s) for s in self.grid.shape)
        return out[sl].ravel()


class DenseOperator:
    """Potential of grid densities for kernels without translation invariance.

    Only columns for ``sources`` (a boolean cell mask) are stored; rows cover
    every cell, with zeros outside the kernel domain.
    """

    def __init__(self, k: KernelSpec, grid: BoxGrid, sources: np.ndarray):
        self.kernel = k
        self.grid = grid
        centers = grid.centers()
        self.rows = k.in_domain(centers)
        self.sources = np.asarray(sources, dtype=bool) & self.rows
        if (np.asarray(sources, dtype=bool) & ~self.rows).any():
            raise ValueError("density support leaves the kernel domain")
        C = centers[self.sources]
        X = centers[self.rows]
        M = np.empty((len(X), len(C)))
        selfv = k.self_cell(C, grid.cell_volume) if len(C) else np.zeros(0)
        col_of = np.full(grid.size, -1)
        col_of[np.nonzero(self.sources)[0]] = np.arange(len(C))
        row_ids = np.nonzero(self.rows)[0]
        step = max(1, _CHUNK // max(len(C), 1))
        for s in range(0, len(X), step):
            blk = k.pairwise(X[s : s + step], C)
            ids = row_ids[s : s + step]
            j = col_of[ids]
            hit = j >= 0
            blk[np.nonzero(hit)[0], j[hit]] = selfv[j[hit]]
            M[s : s + step] = blk
        self.matrix = M * grid.cell_volume

    def apply(self, density: np.ndarray) -> np.ndarray:
        d = np.asarray(density, dtype=float).ravel()
        if (d[~self.sources] != 0).any():
            raise ValueError("density has mass outside the operator's source cells")
        out = np.zeros(self.grid.size)
        out[self.rows] = self.matrix @ d[self.sources]
        return out


def grid_operator(k: KernelSpec, grid: BoxGrid, sources: np.ndarray | None = None):
    """Operator mapping a density on ``grid`` to its potential at all cells."""
    if k.is_convolution:
        return RieszConvolver(k, grid)
    if k.is_matrix:
        raise TypeError("matrix kernels have no grid operator")
    if sources is None:
        sources = np.ones(grid.size, dtype=bool)
    return DenseOperator(k, grid, sources)


@lru_cache(maxsize=16)
def cached_convolver(k: KernelSpec, grid: BoxGrid) -> RieszConvolver:
    return RieszConvolver(k, grid)


@lru_cache(maxsize=8)
def _cached_dense(k: KernelSpec, grid: BoxGrid, key: bytes) -> DenseOperator:
    return DenseOperator(k, grid, np.frombuffer(key, dtype=bool))


def cached_operator(k: KernelSpec, grid: BoxGrid, sources: np.ndarray | None = None):
    """Memoized :func:`grid_operator`."""
    if k.is_convolution:
        return cached_convolver(k, grid)
    if sources is None:
        sources = np.ones(grid.size, dtype=bool)
    return _cached_dense(k, grid, np.ascontiguousarray(sources, dtype=bool).tobytes())


def potential_on_support(k: KernelSpec, source: Measure, target: Measure) -> np.ndarray:
    """G(source) at the support points of ``target``, in ``target.support_points()`` order.

    Grid densities sharing one grid under a Riesz kernel go through the FFT;
    everything else is summed directly.
    """
    locs, _ = target.support_points()
    if source.is_zero:
        return np.zeros(len(locs))
    same_grid = (
        source.density is not None
        and target.density is not None
        and source.density.grid == target.density.grid
    )
    if k.is_convolution and same_grid and not source.has_atoms and not target.has_atoms:
        vals = cached_convolver(k, source.density.grid).apply(source.density.values)
        return vals[target.cell_masses() > 0]
    return potential_direct(k, source, locs).values


def potential_grid_fft(k: KernelSpec, m: Measure) -> PotentialField:
    """Riesz potential of a grid density at every cell of its grid, via FFT.

    Atoms, if any, are added by direct summation.
    """
    if m.density is None:
        raise ValueError("FFT evaluation needs a density on a grid")
    grid = m.density.grid
    values = RieszConvolver(k, grid).apply(m.density.values)
    if m.has_atoms:
        values = values + potential_direct(k, Measure(m.dim, m.atom_locations, m.atom_masses), grid).values
    return PotentialField(grid, values, k, m)


def riesz_on_grid(f: GridFunction, alpha: float, normalization: str = "classical") -> GridFunction:
    """I_alpha f at the cells of f's grid (f read as a density)."""
    k = riesz_kernel(alpha, f.grid.dim, normalization)
    return GridFunction(f.grid, RieszConvolver(k, f.grid).apply(f.values))


def havin_mazya(alpha: float, p: float, f: GridFunction, normalization: str = "classical") -> GridFunction:
    """V_{alpha,p} f = I_alpha (I_alpha |f|)^{1/(p-1)} on f's grid."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    inner = riesz_on_grid(GridFunction(f.grid, np.abs(f.values)), alpha, normalization)
    return riesz_on_grid(inner.with_values(inner.values ** (1.0 / (p - 1.0))), alpha, normalization)


# localized weighted norm constant -----------------------------------------------


@dataclass
class KappaResult:
    """Frank-Wolfe maximization of ||G nu||_{L^q(sigma_B)} over probability measures on the candidates.

    ``value`` is attained by ``weights`` and is a lower bound for the
    supremum; ``upper`` bounds the supremum over the candidate simplex.
    """

    value: float
    weights: np.ndarray
    history: list[float] = field(default_factory=list)
    upper: float = float("inf")
    iterations: int = 0


def default_candidates(sigma_b: Measure, grid: BoxGrid | None = None, shell: float = 3.0, cap: int = 256) -> np.ndarray:
    """Cell centers at distance between one cell and ``shell`` cells from supp sigma_B."""
    grid = grid or sigma_b.grid
    if grid is None:
        raise ValueError("candidate set needs a grid")
    locs, _ = sigma_b.support_points()
    centers = grid.centers()
    if len(locs) == 0:
        return centers[:0]
    lo, hi = locs.min(0) - shell * grid.spacing, locs.max(0) + shell * grid.spacing
    near = np.all((centers >= lo - 1e-12) & (centers <= hi + 1e-12), axis=1)
    cand = centers[near]
    dmin = np.full(len(cand), np.inf)
    for s in range(0, len(locs), 512):
        blk = locs[s : s + 512]
        d2 = np.zeros((len(cand), len(blk)))
        for a in range(grid.dim):
            d2 += (cand[:, a, None] - blk[None, :, a]) ** 2
        dmin = np.minimum(dmin, np.sqrt(d2.min(axis=1)))
    h = grid.spacing
    keep = (dmin >= h * (1 - 1e-9)) & (dmin <= shell * h * (1 + 1e-9))
    cand = cand[keep]
    if len(cand) > cap:
        cand = cand[np.linspace(0, len(cand) - 1, cap).round().astype(int)]
    return cand


def kappa_ball_trace(
    sigma_b: Measure,
    q: float,
    kernel: KernelSpec,
    candidates=None,
    budget: int = 200,
    rtol: float = 1e-8,
) -> KappaResult:
    """Frank-Wolfe ascent for the localized weighted norm constant.

    The objective nu -> (sum_k m_k (G nu)(x_k)^q)^{1/q} is concave on the
    simplex for 0 < q < 1. The linear oracle picks the candidate with the
    largest supergradient entry; the step is an exact line search, accepted
    only if it increases the objective, so the history is nondecreasing.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0,1)")
    pts, masses = sigma_b.support_points()
    if len(pts) == 0:
        return KappaResult(0.0, np.zeros(0), [0.0], 0.0, 0)
    C = default_candidates(sigma_b) if candidates is None else as_points(candidates)
    if len(C) == 0:
        raise ValueError("empty candidate set")
    A = kernel.pairwise(pts, C)
    if not np.isfinite(A).all():
        raise ValueError("candidates must avoid the support of sigma_B")

    def objective(g):
        return float(masses @ g**q) ** (1.0 / q)

    vertex_vals = (masses @ A**q) ** (1.0 / q)
    j = int(np.argmax(vertex_vals))
    nu = np.zeros(len(C))
    nu[j] = 1.0
    g = A[:, j].copy()
    f = float(vertex_vals[j])
    history = [f]
    upper = np.inf
    it = 0
    for it in range(1, budget + 1):
        grad = f ** (1 - q) * (A.T @ (masses * g ** (q - 1)))
        j = int(np.argmax(grad))
        # Euler: grad . nu = f, so max(grad) bounds the simplex maximum
        upper = min(upper, float(grad[j]))
        if grad[j] - f <= rtol * f:
            break
        d = A[:, j] - g
        res = minimize_scalar(lambda t: -objective(g + t * d), bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": 1e-10})
        t = float(res.x)
        f_new = objective(g + t * d)
        if not f_new > f:
            break
        nu *= 1 - t
        nu[j] += t
        g = g + t * d
        gain = (f_new - f) / f
        f = f_new
        history.append(f)
        if gain < rtol:
            break
    return KappaResult(f, nu, history, max(upper, f), it)


def kappa_ball(sigma_b: Measure, q: float, kernel: KernelSpec, candidates=None, budget: int = 200) -> float:
    """Lower bound for kappa(B): best value of the Frank-Wolfe ascent."""
    return kappa_ball_trace(sigma_b, q, kernel, candidates, budget).value


def default_radii(sigma: Measure, x, r_count: int = 64) -> np.ndarray:
    """Log-spaced radii from half a cell to past the whole support seen from x."""
    locs, _ = sigma.support_points()
    grid = sigma.grid
    if grid is None:
        raise ValueError("default radii need a density grid")
    diam = float(np.linalg.norm(locs.max(0) - locs.min(0))) if len(locs) else grid.spacing
    reach = float(np.linalg.norm(locs - np.asarray(x, float), axis=1).max()) if len(locs) else 0.0
    r_max = max(4.0 * max(diam, grid.spacing), 2.0 * reach)
    return np.geomspace(0.5 * grid.spacing, r_max, r_count)


def intrinsic_potential(
    sigma: Measure,
    q: float,
    kernel: KernelSpec,
    x,
    radii=None,
    r_count: int = 64,
    budget: int = 100,
    method: str = "trapezoid",
    cache: dict | None = None,
) -> float:
    """K sigma(x) = int_0^inf kappa(B(x,r))^{q/(1-q)} r^{alpha-n} dr/r.

    ``trapezoid`` integrates in log r over ``radii`` and adds the tail past
    the last radius in closed form (kappa is constant once the ball holds the
    whole support). ``exact`` uses that kappa only changes when r crosses a
    support point, integrating r^{alpha-n-1} exactly between those
    distances; contributions below the first radius are dropped in both.
    """
    x = np.asarray(x, dtype=float)
    n, alpha = kernel.n, kernel.alpha
    if not alpha < n:
        raise ValueError("the intrinsic potential needs alpha < n")
    if sigma.is_zero:
        return 0.0
    locs, _ = sigma.support_points()
    dist = np.linalg.norm(locs - x, axis=1)
    radii = default_radii(sigma, x, r_count) if radii is None else np.asarray(radii, dtype=float)
    if radii[-1] <= dist.max():
        raise ValueError("largest radius must enclose the whole support")
    cache = {} if cache is None else cache
    expo = q / (1.0 - q)

    def kappa_at(r):
        keep = dist < r
        key = keep.tobytes()
        if key not in cache:
            sb = restrict_to_ball(sigma, x, r)
            cache[key] = 0.0 if sb.is_zero else kappa_ball(sb, q, kernel, budget=budget)
        return cache[key]

    if method == "exact":
        r0 = radii[0]
        breaks = np.unique(np.concatenate([[r0], dist[dist > r0]]))
        total = 0.0
        for a, b in zip(breaks[:-1], breaks[1:]):
            kap = kappa_at(0.5 * (a + b))
            total += kap**expo * (a ** (alpha - n) - b ** (alpha - n)) / (n - alpha)
        kap = kappa_at(breaks[-1] * (1 + 1e-12) + 1e-300)
        return total + kap**expo * breaks[-1] ** (alpha - n) / (n - alpha)
    if method != "trapezoid":
        raise ValueError("method must be 'trapezoid' or 'exact'")
    kap = np.array([kappa_at(r) for r in radii])
    integrand = kap**expo * radii ** (alpha - n)
    total = float(np.trapezoid(integrand, np.log(radii)))
    return total + kap[-1] ** expo * radii[-1] ** (alpha - n) / (n - alpha)
