"""Riesz and Green kernels, explicit matrix kernels, and checks of the kernel axioms.

All kernels here are positive and lower semicontinuous. Each :class:`KernelSpec`
carries the quasi-symmetry constant ``a`` and the weak-maximum-principle
constant ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as Gamma, pi

import numpy as np

from .core import Measure, as_points


def riesz_constant(n: int, alpha: float) -> float:
    """Normalization c(n, alpha) making I_alpha the inverse of (-Delta)^{alpha/2}."""
    return Gamma((n - alpha) / 2) / (2**alpha * pi ** (n / 2) * Gamma(alpha / 2))


def newton_constant(n: int) -> float:
    """Constant of the Newtonian kernel c_n |x|^{2-n}, n >= 3."""
    return riesz_constant(n, 2.0)


def unit_ball_volume(n: int) -> float:
    return pi ** (n / 2) / Gamma(n / 2 + 1)


@dataclass(frozen=True)
class Riesz:
    alpha: float
    n: int
    normalization: str = "classical"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if not 0 < self.alpha < self.n:
            raise ValueError(f"Riesz order must satisfy 0 < alpha < n, got alpha={self.alpha}, n={self.n}")
        if self.normalization not in ("classical", "unit"):
            raise ValueError("normalization must be 'classical' or 'unit'")

    @property
    def constant(self) -> float:
        return riesz_constant(self.n, self.alpha) if self.normalization == "classical" else 1.0


@dataclass(frozen=True)
class GreenBall:
    n: int
    radius: float = 1.0
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("Green kernels are provided for n >= 3")
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        c = (0.0,) * self.n if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.n:
            raise ValueError("center has wrong dimension")
        object.__setattr__(self, "center", c)


@dataclass(frozen=True)
class GreenHalfSpace:
    """Green function of the Laplacian on ``{x : x_n > 0}``."""

    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("Green kernels are provided for n >= 3")


@dataclass(frozen=True, eq=False)
class MatrixKernel:
    """Kernel on a finite point set given by an explicit nonnegative matrix ``G[i, j] = G(x_i, x_j)``."""

    points: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        G = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if G.shape != (len(pts), len(pts)):
            raise ValueError("matrix kernel needs a square matrix matching the point count")
        if (G < 0).any() or not np.isfinite(G).all():
            raise ValueError("matrix kernel entries must be finite and >= 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "entries", G)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def index_of(self, x, atol: float = 1e-12) -> np.ndarray:
        pts = as_points(x)
        d = np.linalg.norm(pts[:, None, :] - self.points[None, :, :], axis=-1)
        idx = d.argmin(axis=1)
        if (d[np.arange(len(pts)), idx] > atol).any():
            raise ValueError("point is not a node of the matrix kernel")
        return idx

    def max_asymmetry(self) -> float:
        G = self.entries
        off = ~np.eye(len(G), dtype=bool)
        a, b = G[off], G.T[off]
        if ((a == 0) != (b == 0)).any():
            return float("inf")
        nz = a > 0
        if not nz.any():
            return 1.0
        return float(np.max(np.maximum(a[nz] / b[nz], b[nz] / a[nz])))


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A kernel variant with its quasi-symmetry constant ``a`` and WMP constant ``h``.

    ``wmp_estimated`` flags an ``h`` that is a configured guess rather than
    a known value (Riesz kernels with alpha > 2).
    """

    variant: Riesz | GreenBall | GreenHalfSpace | MatrixKernel
    quasi_sym_a: float = 1.0
    wmp_h: float = 1.0
    wmp_estimated: bool = field(default=False)

    def __post_init__(self):
        if self.quasi_sym_a < 1 or self.wmp_h < 1:
            raise ValueError("quasi-symmetry and WMP constants must be >= 1")
        v = self.variant
        strong = isinstance(v, (GreenBall, GreenHalfSpace)) or (isinstance(v, Riesz) and v.alpha <= 2)
        if strong and self.wmp_h != 1.0:
            raise ValueError("this kernel satisfies the strong maximum principle; wmp_h must be 1")
        if isinstance(v, MatrixKernel) and v.max_asymmetry() > self.quasi_sym_a * (1 + 1e-12):
            raise ValueError(
                f"matrix kernel is not quasi-symmetric with a={self.quasi_sym_a} "
                f"(needs a >= {v.max_asymmetry()})"
            )

    @property
    def n(self) -> int:
        return self.variant.n

    @property
    def alpha(self) -> float:
        """Order of the Riesz kernel bounding this kernel (2 for Green kernels)."""
        v = self.variant
        if isinstance(v, Riesz):
            return v.alpha
        if isinstance(v, (GreenBall, GreenHalfSpace)):
            return 2.0
        raise AttributeError("matrix kernels have no Riesz order")

    @property
    def riesz_bound_constant(self) -> float:
        """Constant c with G(x, y) <= c |x - y|^{alpha - n}."""
        v = self.variant
        if isinstance(v, Riesz):
            return v.constant
        if isinstance(v, (GreenBall, GreenHalfSpace)):
            return newton_constant(v.n)
        raise AttributeError("matrix kernels have no Riesz bound")

    @property
    def is_convolution(self) -> bool:
        return isinstance(self.variant, Riesz)

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.variant, MatrixKernel)

    # evaluation -----------------------------------------------------------

    def in_domain(self, x) -> np.ndarray:
        """True for points in the closed domain of the kernel."""
        pts = as_points(x)
        v = self.variant
        if isinstance(v, GreenBall):
            r = np.linalg.norm(pts - np.asarray(v.center), axis=1)
            return r <= v.radius * (1 + 1e-12)
        if isinstance(v, GreenHalfSpace):
            return pts[:, -1] >= 0
        if isinstance(v, MatrixKernel):
            d = np.linalg.norm(pts[:, None, :] - v.points[None, :, :], axis=-1)
            return d.min(axis=1) <= 1e-12
        return np.ones(len(pts), dtype=bool)

    def interior(self, x) -> np.ndarray:
        pts = as_points(x)
        v = self.variant
        if isinstance(v, GreenBall):
            return np.linalg.norm(pts - np.asarray(v.center), axis=1) < v.radius
        if isinstance(v, GreenHalfSpace):
            return pts[:, -1] > 0
        return self.in_domain(pts)

    def pairwise(self, x, y) -> np.ndarray:
        """Kernel matrix ``K[i, j] = G(x_i, y_j)``; ``+inf`` where ``x_i == y_j``."""
        X, Y = as_points(x), as_points(y)
        v = self.variant
        if isinstance(v, MatrixKernel):
            return v.entries[np.ix_(v.index_of(X), v.index_of(Y))]
        if not (self.in_domain(X).all() and self.in_domain(Y).all()):
            raise ValueError("point outside the kernel domain")
        if isinstance(v, Riesz):
            d = _distances(X, Y)
            with np.errstate(divide="ignore"):
                return v.constant * d ** (v.alpha - v.n)
        if isinstance(v, GreenBall):
            return _green_ball(X, Y, v)
        return _green_half_space(X, Y, v)

    def __call__(self, x, y) -> np.ndarray:
        """Elementwise G(x_k, y_k) for broadcastable point arrays."""
        X, Y = np.broadcast_arrays(as_points(x), as_points(y))
        return np.array([self.pairwise(X[k], Y[k])[0, 0] for k in range(len(X))])

    def self_cell(self, centers, cell_volume: float) -> np.ndarray:
        """Value a grid cell assigns to itself.

        The singular part c|z|^{alpha-n} is replaced by its average over the
        ball of equal volume, (n/alpha) rho^{alpha-n}; the regular part of a
        Green kernel is evaluated at the center.
        """
        pts = as_points(centers)
        v = self.variant
        if isinstance(v, MatrixKernel):
            idx = v.index_of(pts)
            return v.entries[idx, idx]
        n, a = self.n, self.alpha
        rho = (cell_volume / unit_ball_volume(n)) ** (1.0 / n)
        singular = self.riesz_bound_constant * (n / a) * rho ** (a - n)
        if isinstance(v, Riesz):
            return np.full(len(pts), singular)
        return singular - _green_regular_part(pts, v)


def kernel_eval(k: KernelSpec, x, y) -> float:
    """G(x, y) for a single pair of points (``+inf`` when they coincide)."""
    return float(k.pairwise(x, y)[0, 0])


def _distances(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    d2 = np.zeros((len(X), len(Y)))
    for k in range(X.shape[1]):
        d2 += (X[:, k, None] - Y[None, :, k]) ** 2
    return np.sqrt(d2)


def _green_ball(X, Y, v: GreenBall) -> np.ndarray:
    c = newton_constant(v.n)
    x = X - np.asarray(v.center)
    y = Y - np.asarray(v.center)
    d = _distances(x, y)
    R2 = v.radius**2
    # |y|/R * |x - y*| written symmetrically; equals R when y = 0
    img_sq = np.outer((x * x).sum(1), (y * y).sum(1)) / R2 - 2.0 * x @ y.T + R2
    img = np.sqrt(np.maximum(img_sq, 0.0))
    p = 2 - v.n
    with np.errstate(divide="ignore"):
        out = c * (d**p - img**p)
    return np.where(d == 0, np.inf, np.maximum(out, 0.0))


def _green_half_space(X, Y, v: GreenHalfSpace) -> np.ndarray:
    c = newton_constant(v.n)
    Yr = Y.copy()
    Yr[:, -1] = -Yr[:, -1]
    d = _distances(X, Y)
    dr = _distances(X, Yr)
    p = 2 - v.n
    with np.errstate(divide="ignore"):
        out = c * (d**p - dr**p)
    return np.where(d == 0, np.inf, np.maximum(out, 0.0))


def _green_regular_part(pts: np.ndarray, v) -> np.ndarray:
    """Image-charge term H(x, x) with G(x, y) = c|x-y|^{2-n} - H(x, y)."""
    c = newton_constant(v.n)
    p = 2 - v.n
    if isinstance(v, GreenBall):
        x = pts - np.asarray(v.center)
        r2 = (x * x).sum(1)
        R2 = v.radius**2
        img = (r2 * r2 / R2 - 2 * r2 + R2) ** 0.5  # = (R^2 - |x|^2)/R
        return c * img**p
    return c * (2 * pts[:, -1]) ** p


# constructors --------------------------------------------------------------


def riesz_kernel(alpha: float, n: int, normalization: str = "classical", wmp_h: float | None = None) -> KernelSpec:
    """Riesz kernel c|x-y|^{alpha-n}.

    For alpha <= 2 the strong maximum principle holds (h = 1). For larger
    alpha no numeric h is known here; the default 2 is flagged as estimated.
    """
    variant = Riesz(float(alpha), int(n), normalization)
    if alpha <= 2:
        if wmp_h not in (None, 1, 1.0):
            raise ValueError("Riesz kernels with alpha <= 2 have h = 1")
        return KernelSpec(variant, 1.0, 1.0, False)
    return KernelSpec(variant, 1.0, 2.0 if wmp_h is None else float(wmp_h), True)


def green_ball_kernel(n: int, radius: float = 1.0, center=None) -> KernelSpec:
    return KernelSpec(GreenBall(int(n), float(radius), None if center is None else tuple(center)))


def green_half_space_kernel(n: int) -> KernelSpec:
    return KernelSpec(GreenHalfSpace(int(n)))


def matrix_kernel(points, entries, quasi_sym_a: float | None = None, wmp_h: float = 1.0) -> KernelSpec:
    """Explicit kernel on a point set. ``quasi_sym_a`` defaults to the smallest valid constant."""
    variant = MatrixKernel(points, entries)
    a = variant.max_asymmetry() if quasi_sym_a is None else float(quasi_sym_a)
    return KernelSpec(variant, max(a, 1.0), float(wmp_h), False)


def load_matrix_kernel(path, quasi_sym_a: float | None = None, wmp_h: float = 1.0) -> KernelSpec:
    """Read a matrix kernel from a text file.

    The file holds one matrix row per line (whitespace separated). Lines
    starting with ``# point`` give the node coordinates in order; without
    them the nodes are placed at 0, 1, 2, ... on the first axis.
    """
    rows, pts = [], []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("# point"):
                pts.append([float(t) for t in s.split()[2:]])
            elif not s.startswith("#"):
                rows.append([float(t) for t in s.split()])
    G = np.array(rows, dtype=float)
    if not pts:
        pts = np.column_stack([np.arange(len(G), dtype=float), np.zeros(len(G))])
    return matrix_kernel(np.array(pts), G, quasi_sym_a, wmp_h)


# axiom checks ----------------------------------------------------------------


def check_quasi_symmetry(k: KernelSpec, pairs) -> float:
    """Largest ratio max(G(x,y)/G(y,x), G(y,x)/G(x,y)) over the sampled pairs."""
    worst = 1.0
    for x, y in pairs:
        gxy = float(k.pairwise(x, y)[0, 0])
        gyx = float(k.pairwise(y, x)[0, 0])
        if gxy == gyx:
            continue
        if gxy == 0 or gyx == 0:
            return float("inf")
        worst = max(worst, gxy / gyx, gyx / gxy)
    return worst


@dataclass
class WMPVerdict:
    sup_on_support: float
    sup_on_probes: float
    h: float
    holds: bool
    witness: np.ndarray | None = None


def check_wmp_empirical(k: KernelSpec, sigma: Measure, probes) -> WMPVerdict:
    """Compare sup of G sigma over the probes with h times its sup over supp sigma.

    A violation is reported in the verdict (with the worst probe as witness),
    never raised.
    """
    from .potentials import potential_direct

    locs, _ = sigma.support_points()
    if len(locs) == 0:
        raise ValueError("sigma must have nonempty support")
    probes = as_points(probes)
    on_support = potential_direct(k, sigma, locs).values
    on_probes = potential_direct(k, sigma, probes).values
    s_sup = float(np.max(on_support))
    p_sup = float(np.max(on_probes))
    holds = p_sup <= k.wmp_h * s_sup * (1 + 1e-9)
    witness = None if holds else probes[int(np.argmax(on_probes))]
    return WMPVerdict(s_sup, p_sup, k.wmp_h, bool(holds), witness)
