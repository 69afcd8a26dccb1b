"""Pointwise and norm inequalities checked on computed potentials and solutions."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion

from .core import BoxGrid, GridFunction, Measure, ProblemSpec, as_points, restrict_to_ball
from .kernels import KernelSpec
from .lorentz import lorentz_norm
from .potentials import (
    cached_operator,
    default_candidates,
    default_radii,
    havin_mazya,
    kappa_ball,
    potential_direct,
)
from .solver import discretize, downward_solve


def _density(m: Measure) -> GridFunction:
    if m.has_atoms or m.density is None:
        raise ValueError("a density measure without atoms is required")
    return m.density


def _grid_potential(k: KernelSpec, f: GridFunction) -> np.ndarray:
    """G(f dx) at every cell of f's grid."""
    if k.is_convolution:
        return cached_operator(k, f.grid).apply(f.values)
    return potential_direct(k, Measure.from_density(f), f.grid).values


def _potential_at(k: KernelSpec, f: GridFunction, probes) -> np.ndarray:
    if probes is None:
        return _grid_potential(k, f)
    return potential_direct(k, Measure.from_density(f), as_points(probes)).values


# iterated inequalities ---------------------------------------------------------------


def iterated_check(sigma: Measure, a: float, k: KernelSpec, probes=None) -> float:
    """Largest relative violation of the iterated inequality at the probes.

    For a >= 1 the claim is (G sigma)^a <= a h^{a-1} G((G sigma)^{a-1} sigma);
    for 0 < a <= 1 the inequality is reversed. Probes default to every cell of
    sigma's grid. A nonpositive return value means the inequality holds.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if sigma.is_zero:
        return 0.0
    f = _density(sigma)
    h = k.wmp_h
    gs_grid = _grid_potential(k, f)
    pos = f.values > 0
    weight = np.zeros(f.grid.size)
    weight[pos] = f.values[pos] * gs_grid[pos] ** (a - 1.0)
    weighted = f.with_values(weight)
    if probes is None:
        lhs = gs_grid**a
        rhs = a * h ** (a - 1.0) * _grid_potential(k, weighted)
        keep = k.in_domain(f.grid.centers()) & (rhs > 0)
        lhs, rhs = lhs[keep], rhs[keep]
    else:
        lhs = _potential_at(k, f, probes) ** a
        rhs = a * h ** (a - 1.0) * _potential_at(k, weighted, probes)
    if len(rhs) == 0:
        return 0.0
    gap = (lhs - rhs) / rhs if a >= 1 else (rhs - lhs) / rhs
    return float(np.max(gap))


# bilateral bracket ---------------------------------------------------------------------


@dataclass
class BracketReport:
    """Empirical constants with c_low B + G omega <= u <= c_up B + G omega on the probes,
    where B = (G sigma)^{1/(1-q)} + K sigma.

    K sigma uses the Frank-Wolfe lower bound for each ball constant, so c_up
    is certified while c_low is conservative.
    """

    c_low: float
    c_up: float
    probes: np.ndarray
    bracket: np.ndarray
    excess: np.ndarray
    degenerate: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("probes", "bracket", "excess"):
            d[key] = np.asarray(d[key]).tolist()
        return d


@dataclass(frozen=True)
class IntrinsicSettings:
    """Cost controls for the intrinsic potential inside the bracket."""

    r_count: int = 32
    budget: int = 50
    cap: int = 128


def default_probes(grid: BoxGrid, measures, collar: int = 2, count: int = 25, k: KernelSpec | None = None) -> np.ndarray:
    """Cell centers at least ``collar`` cells away from every support boundary.

    A cell qualifies when the (2 collar + 1)-cube of cells around it lies
    entirely inside or entirely outside each support; ``count`` of them are
    taken at evenly spaced positions.
    """
    ok = np.ones(grid.shape, dtype=bool)
    st = np.ones((3,) * grid.dim, dtype=bool)
    for m in measures:
        if m.density is None:
            continue
        s = (m.density.values > 0).reshape(grid.shape)
        inner = binary_erosion(s, st, iterations=collar, border_value=0)
        outer = ~binary_dilation(s, st, iterations=collar)
        ok &= inner | outer
    ok = ok.ravel()
    if k is not None:
        ok &= k.interior(grid.centers())
    idx = np.nonzero(ok)[0]
    if len(idx) > count:
        idx = idx[np.linspace(0, len(idx) - 1, count).round().astype(int)]
    return grid.centers()[idx]


def bracket_terms(sigma: Measure, q: float, k: KernelSpec, points, settings=IntrinsicSettings()) -> np.ndarray:
    """B = (G sigma)^{1/(1-q)} + K sigma at the given points."""
    pts = as_points(points)
    if sigma.is_zero:
        return np.zeros(len(pts))
    gs = potential_direct(k, sigma, pts).values
    cache: dict = {}
    kvals = np.empty(len(pts))
    for j, x in enumerate(pts):
        kvals[j] = _intrinsic(sigma, q, k, x, settings, cache)
    return gs ** (1.0 / (1.0 - q)) + kvals


def _intrinsic(sigma, q, k, x, settings, cache):
    # same quadrature as intrinsic_potential, with a capped candidate set
    grid = sigma.grid
    locs, _ = sigma.support_points()
    dist = np.linalg.norm(locs - x, axis=1)
    radii = default_radii(sigma, x, settings.r_count)
    expo = q / (1.0 - q)
    n, alpha = k.n, k.alpha

    def kappa_at(r):
        keep = dist < r
        key = keep.tobytes()
        if key not in cache:
            sb = restrict_to_ball(sigma, x, r)
            if sb.is_zero:
                cache[key] = 0.0
            else:
                cand = default_candidates(sb, grid, cap=settings.cap)
                cand = cand[k.in_domain(cand)]
                cache[key] = kappa_ball(sb, q, k, cand, settings.budget)
        return cache[key]

    kap = np.array([kappa_at(r) for r in radii])
    integrand = kap**expo * radii ** (alpha - n)
    total = float(np.trapezoid(integrand, np.log(radii)))
    return total + kap[-1] ** expo * radii[-1] ** (alpha - n) / (n - alpha)


def bilateral_bracket(u, p: ProblemSpec, probes=None, settings=IntrinsicSettings()) -> BracketReport:
    """Best constants of the two-sided estimate for a one-term problem.

    ``u`` is a solution on the problem grid; probes default to
    :func:`default_probes`. Probes where u exceeds G omega but B vanishes
    make the bracket impossible and raise.
    """
    if len(p.terms) != 1:
        raise ValueError("the bilateral bracket is stated for one sublinear term")
    (sigma, q), = p.terms
    grid = p.grid
    k = p.kernel
    pts = default_probes(grid, [sigma, p.omega], k=k) if probes is None else as_points(probes)
    vals = np.asarray(u.values)[grid.locate(pts)]
    d = discretize(p)
    g_om = d.g_omega[grid.locate(pts)]
    if sigma.is_zero:
        return BracketReport(0.0, 0.0, pts, np.zeros(len(pts)), vals - g_om, degenerate=True)
    B = bracket_terms(sigma, q, k, pts, settings)
    excess = vals - g_om
    bad = (B <= 0) & (excess > 1e-12 * np.abs(vals).max())
    if bad.any():
        raise ValueError("bracket vanishes at a probe where u exceeds G omega")
    ok = B > 0
    ratio = excess[ok] / B[ok]
    return BracketReport(float(ratio.min()), float(ratio.max()), pts, B, excess)


def bracket_supersolution(p: ProblemSpec, c: float, settings=IntrinsicSettings(), max_doublings: int = 20):
    """A supersolution of the form c B + G omega, with c doubled until it qualifies.

    B is only evaluated on supp sigma: the map u -> sum G(u^q sigma) + G omega
    reads u there alone, so the start is c B + G omega on the support and
    its image elsewhere. Returns (start, c actually used).
    """
    if len(p.terms) != 1:
        raise ValueError("the bilateral bracket is stated for one sublinear term")
    (sigma, q), = p.terms
    d = discretize(p)
    grid = p.grid
    support = d.weights[0] > 0
    B = np.zeros(grid.size)
    B[support] = bracket_terms(sigma, q, p.kernel, grid.centers()[support], settings)
    for _ in range(max_doublings):
        start = d.g_omega + c * B
        image = d.operator(start)
        start = np.where(support, start, image)
        if np.all(start[support] >= image[support]):
            return GridFunction(grid, start), c
        c *= 2.0
    raise RuntimeError("no supersolution found along c B + G omega")


def bracket_downward(p: ProblemSpec, c: float, tol: float = 1e-8, max_iter: int = 500, settings=IntrinsicSettings()):
    """downward_solve started from :func:`bracket_supersolution`."""
    start, c_used = bracket_supersolution(p, c, settings)
    u, rep = downward_solve(p, start, tol, max_iter)
    return u, rep, c_used


# Lorentz inequalities ---------------------------------------------------------------


@dataclass
class NormRatio:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else float("inf")
        return self.lhs / self.rhs


def key_lorentz_check(sigma: Measure, beta: float, k: KernelSpec) -> NormRatio:
    """||G sigma||_{L^{r,rho}} against (int (G sigma)^beta d sigma)^{1/(beta+1)},
    with r = n(beta+1)/(n-alpha) and rho = beta+1.

    The Lorentz norm is taken over the grid of sigma's density.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if sigma.is_zero:
        return NormRatio(0.0, 0.0)
    f = _density(sigma)
    n, alpha = k.n, k.alpha
    r, rho = n * (beta + 1) / (n - alpha), beta + 1
    g = _grid_potential(k, f)
    lhs = lorentz_norm(f.with_values(g), (r, rho))
    cm = sigma.cell_masses()
    rhs = float(np.sum(cm * g**beta)) ** (1.0 / (beta + 1))
    return NormRatio(lhs, rhs)


def havin_mazya_exponents(alpha: float, p: float, s: float, t: float, n: int) -> tuple[float, float]:
    """Lorentz exponents of the Havin-Maz'ya potential for f in L^{s,t}."""
    if not (p > 1 and 1 < s < n / (alpha * p)):
        raise ValueError("need p > 1 and 1 < s < n/(alpha p)")
    return s * n * (p - 1) / (n - s * alpha * p), t * (p - 1)


def havin_mazya_bound_check(f: GridFunction, alpha: float, p: float, s: float, t: float) -> NormRatio:
    """||V_{alpha,p} f|| in its target Lorentz space against ||f||_{L^{s,t}}^{1/(p-1)}."""
    n = f.grid.dim
    r_out, rho_out = havin_mazya_exponents(alpha, p, s, t, n)
    if not np.any(f.values):
        return NormRatio(0.0, 0.0)
    v = havin_mazya(alpha, p, f)
    lhs = lorentz_norm(v, (r_out, rho_out))
    rhs = lorentz_norm(f, (s, t)) ** (1.0 / (p - 1.0))
    return NormRatio(lhs, rhs)
