"""Homogeneous fractional seminorms, the energy identity and hidden convexity."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.special import gamma as gamma_fn

from .core import BoxGrid, GridFunction, ProblemSpec
from .kernels import Riesz, riesz_constant, unit_ball_volume
from .potentials import RieszConvolver, fft_workers
from .solver import discretize

GAGLIARDO_CELL_BUDGET = 20_000


def boundary_ratio(u: GridFunction) -> float:
    """max |u| on the outer layer of cells over max |u| overall."""
    a = np.abs(u.array())
    top = a.max()
    if top == 0:
        return 0.0
    edge = 0.0
    for ax in range(a.ndim):
        edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
    return float(edge / top)


def fractional_seminorm_sq(u: GridFunction, alpha: float, pad: int = 1) -> float:
    """int |xi|^alpha |u^(xi)|^2 dxi / (2 pi)^n on the grid, by DFT.

    The grid is zero-padded by ``pad`` whole boxes along every axis to keep
    periodic images apart. A warning is issued when u has not decayed at the
    box boundary (outer layer above 1e-3 of the maximum).
    """
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    if boundary_ratio(u) > 1e-3:
        warnings.warn("u does not vanish at the box boundary; the seminorm sees a truncated function",
                      RuntimeWarning, stacklevel=2)
    g = u.grid
    shape = tuple((pad + 1) * s for s in g.shape)
    U = sfft.rfftn(u.array(), shape, workers=fft_workers())
    freqs = [2 * np.pi * sfft.fftfreq(s, g.spacing) for s in shape[:-1]]
    freqs.append(2 * np.pi * sfft.rfftfreq(shape[-1], g.spacing))
    xi2 = sum(f**2 for f in np.meshgrid(*freqs, indexing="ij", sparse=True))
    w = np.abs(U) ** 2 * xi2 ** (alpha / 2)
    # rfft keeps half the spectrum: double every column that has a mirror image
    mirrored = np.full(shape[-1] // 2 + 1, 2.0)
    mirrored[0] = 1.0
    if shape[-1] % 2 == 0:
        mirrored[-1] = 1.0
    total = float(np.sum(w * mirrored))
    return total * g.cell_volume / math.prod(shape)


def gagliardo_constant(n: int, alpha: float) -> float:
    """C(n, s)/2 with s = alpha/2, the factor turning the double integral into the Fourier form."""
    s = alpha / 2
    return 4**s * gamma_fn(n / 2 + s) / (np.pi ** (n / 2) * abs(gamma_fn(-s))) / 2


def lattice_kernel_sum(n: int, alpha: float, spacing: float, radius_cells: int | None = None) -> float:
    """sum over nonzero lattice points z of |z|^{-n-alpha} spacing^n, with the
    tail past the summation ball added as an integral."""
    R = radius_cells or (400 if n == 2 else 60)
    ax = np.arange(-R, R + 1, dtype=float)
    r2 = sum(m * m for m in np.meshgrid(*([ax] * n), indexing="ij", sparse=True))
    r2 = r2[(r2 > 0) & (r2 <= R * R)]
    near = float(np.sum(r2 ** (-(n + alpha) / 2)))
    sphere = n * unit_ball_volume(n)
    tail = sphere * R ** (-alpha) / alpha
    return (near + tail) * spacing ** (-alpha)


@lru_cache(maxsize=None)
def lattice_diagonal_defect(n: int, alpha: float) -> float:
    """int |z|^{2-n-alpha} dz minus its sum over nonzero unit-lattice points.

    Both diverge at infinity; the difference is taken with the Gaussian
    cutoff exp(-|z|^2/R^2), whose error decays like R^{-2}, and extrapolated
    from R and 2R.
    """
    s = n + alpha - 2

    def defect(R):
        L = int(7 * R)
        ax = np.arange(-L, L + 1, dtype=float)
        r2 = sum(m * m for m in np.meshgrid(*([ax] * n), indexing="ij", sparse=True))
        r2 = r2[r2 > 0]
        lattice = float(np.sum(r2 ** (-s / 2) * np.exp(-r2 / R**2)))
        integral = np.pi ** (n / 2) / gamma_fn(n / 2) * R ** (n - s) * gamma_fn((n - s) / 2)
        return integral - lattice

    R = 20 if n == 2 else 6
    return (4 * defect(2 * R) - defect(R)) / 3


def gagliardo_seminorm_sq(u: GridFunction, alpha: float, normalized: bool = True, exterior: bool = True) -> float:
    """Double sum of |u(x)-u(y)|^2 |x-y|^{-n-alpha} vol^2 over ordered pairs of distinct cells.

    With ``exterior`` the pairs with one cell outside the box (where u = 0)
    are added, through the lattice sum of the kernel. ``normalized`` adds
    the near-diagonal part the lattice sum misses, h^{2-alpha} |grad u|^2 D / n
    per cell (D from :func:`lattice_diagonal_defect`, gradients by central
    differences), and multiplies by C(n, alpha/2)/2 so the value is
    comparable with :func:`fractional_seminorm_sq`.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    g = u.grid
    if g.size > GAGLIARDO_CELL_BUDGET:
        raise ValueError(f"grid of {g.size} cells exceeds the double-sum budget {GAGLIARDO_CELL_BUDGET}")
    n, vol = g.dim, g.cell_volume
    X = g.centers()
    v = np.asarray(u.values, dtype=float)
    inner = 0.0
    near = np.zeros(g.size)
    step = max(1, 2_000_000 // g.size)
    for s in range(0, g.size, step):
        d2 = np.zeros((min(step, g.size - s), g.size))
        for a in range(n):
            d2 += (X[s : s + step, a, None] - X[None, :, a]) ** 2
        with np.errstate(divide="ignore"):
            K = np.where(d2 > 0, d2 ** (-(n + alpha) / 2), 0.0)
        inner += float(np.sum(K * (v[s : s + step, None] - v[None, :]) ** 2))
        near[s : s + step] = K.sum(axis=1) * vol
    total = inner * vol**2
    if exterior:
        outside = lattice_kernel_sum(n, alpha, g.spacing) - near
        total += 2.0 * float(np.sum(v**2 * outside)) * vol
    if not normalized:
        return total
    padded = np.pad(u.array(), 1)
    grads = np.gradient(padded, g.spacing)
    grads = grads if isinstance(grads, (list, tuple)) else [grads]
    inner_sl = (slice(1, -1),) * n
    grad_sq = sum(gr[inner_sl] ** 2 for gr in grads)
    total += float(np.sum(grad_sq)) * vol * g.spacing ** (2 - alpha) * lattice_diagonal_defect(n, alpha) / n
    return total * gagliardo_constant(n, alpha)


# energy identity --------------------------------------------------------------------


@dataclass
class EnergyReport:
    seminorm_sq: float
    rhs_identity: float
    relative_gap: float
    gagliardo_sq: float | None = None
    extension: int = 1
    warning: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def extended_grid(grid: BoxGrid, factor: int) -> BoxGrid:
    """Same spacing, ``factor`` times the extent, same center; factor is made odd."""
    factor = factor if factor % 2 else factor + 1
    off = factor // 2
    shape = tuple(factor * s for s in grid.shape)
    origin = np.asarray(grid.origin) - off * grid.spacing * np.asarray(grid.shape)
    return BoxGrid(tuple(origin), grid.spacing, shape)


def extend_potential(kernel, density: GridFunction, factor: int) -> GridFunction:
    """Riesz potential of a grid density evaluated on the enlarged grid."""
    big = extended_grid(density.grid, factor)
    off = (factor if factor % 2 else factor + 1) // 2
    arr = np.zeros(big.shape)
    sl = tuple(slice(off * s, (off + 1) * s) for s in density.grid.shape)
    arr[sl] = density.array()
    return GridFunction(big, RieszConvolver(kernel, big).apply(arr))


def _default_extension(dim: int) -> int:
    return 17 if dim == 2 else 5


def energy_identity_check(p: ProblemSpec, u, extension: int | None = None) -> EnergyReport:
    """Compare the energy of u with sum_i int u^{1+q_i} d sigma_i + int u d omega (gamma = 1).

    Riesz problems: u is the potential of mu = sum u^{q_i} sigma_i + omega,
    so it is re-evaluated from mu on a grid ``extension`` times larger before
    the Fourier seminorm of order alpha is taken; a unit-normalized kernel is
    rescaled to the classical one. Green problems: u already vanishes
    outside the domain and the seminorm of order 2 is taken on the grid.
    """
    if p.gamma != 1:
        raise ValueError("energy identity requires gamma = 1")
    k = p.kernel
    if k.is_matrix:
        raise ValueError("the energy identity needs a grid problem")
    if p.omega.has_atoms or any(s.has_atoms for s in p.sigmas):
        raise ValueError("the energy identity needs density data (atoms have infinite energy)")
    d = discretize(p)
    grid = p.grid
    v = np.asarray(u.values, dtype=float)
    vol = grid.cell_volume
    mu = np.zeros(grid.size) if p.omega.density is None else p.omega.density.values.copy()
    rhs = float(np.sum(mu * v)) * vol
    for i, q in enumerate(p.qs):
        w = d.weights[i]
        pos = w > 0
        rhs += float(np.sum(w[pos] * v[pos] ** (1 + q))) * vol
        mu[pos] += w[pos] * v[pos] ** q
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if isinstance(k.variant, Riesz):
            ext = extension or _default_extension(grid.dim)
            field = extend_potential(k, GridFunction(grid, mu), ext)
            scale = riesz_constant(k.n, k.alpha) / k.variant.constant
            lhs = fractional_seminorm_sq(field, k.alpha) * scale
        else:
            ext = 1
            lhs = fractional_seminorm_sq(GridFunction(grid, v), 2.0)
    gap = abs(lhs - rhs) / rhs if rhs > 0 else (0.0 if lhs == 0 else float("inf"))
    note = "; ".join(sorted({str(w.message) for w in caught}))
    return EnergyReport(lhs, rhs, gap, extension=ext, warning=note)


# hidden convexity ---------------------------------------------------------------------


@dataclass
class ConvexityReport:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def convex_path(u: GridFunction, v: GridFunction, t: float) -> GridFunction:
    """Gamma_t = ((1-t) v^2 + t u^2)^{1/2}, written so t = 0, t = 1 and u = v are exact."""
    if t == 1:
        return u
    a, b = np.asarray(u.values, float), np.asarray(v.values, float)
    return v.with_values(np.sqrt(b * b + t * (a * a - b * b)))


def hidden_convexity_check(u: GridFunction, v: GridFunction, t: float, alpha: float,
                           form: str = "gagliardo") -> ConvexityReport:
    """Energy of Gamma_t against the convex combination of the energies of v and u."""
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if (np.asarray(u.values) < 0).any() or (np.asarray(v.values) < 0).any():
        raise ValueError("u and v must be nonnegative")
    if form == "gagliardo":
        def energy(f):
            return gagliardo_seminorm_sq(f, alpha, normalized=False)
    elif form == "fourier":
        def energy(f):
            return fractional_seminorm_sq(f, alpha)
    else:
        raise ValueError("form must be 'gagliardo' or 'fourier'")
    eu, ev = energy(u), energy(v)
    lhs = energy(convex_path(u, v, t))
    rhs = eu if t == 1 else ev + t * (eu - ev)
    return ConvexityReport(lhs, rhs)
