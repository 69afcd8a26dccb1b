"""Monotone iteration for the minimal solution of u = sum_i G(u^{q_i} sigma_i) + G omega.

Grid problems work on the cell centers of ``ProblemSpec.grid``; problems
with a matrix kernel work on the kernel nodes and exchange plain arrays
instead of grid functions.
"""

from __future__ import annotations

import weakref
from dataclasses import asdict, dataclass, field

import numpy as np

from .conditions import ATOMS_REJECTED, solution_exponents
from .core import GridFunction, Measure, ProblemSpec
from .lorentz import lorentz_norm
from .potentials import cached_operator, potential_direct

EPS_MONO = 1e-12


class DegenerateInstanceError(ValueError):
    """An infinite value of u entered a sigma-weighted sum."""


class Discretization:
    """Nodes, per-term weights, G omega and the potential operator of a problem."""

    def __init__(self, p: ProblemSpec):
        k = p.kernel
        self.problem = p
        self.grid = None if k.is_matrix else p.grid
        if k.is_matrix:
            self._init_matrix(p)
        else:
            self._init_grid(p)
        self.finite = np.isfinite(self.g_omega)
        for w in self.weights:
            if (w[~self.finite] > 0).any():
                raise DegenerateInstanceError("G omega is infinite on the support of a sigma_i")

    def _init_matrix(self, p: ProblemSpec):
        mk = p.kernel.variant
        self.nodes = mk.points

        def node_masses(m: Measure):
            if m.density is not None:
                raise ValueError("matrix-kernel problems take atoms placed at the kernel nodes")
            out = np.zeros(len(mk.points))
            if len(m.atom_masses):
                np.add.at(out, mk.index_of(m.atom_locations), m.atom_masses)
            return out

        self.weights = [node_masses(s) for s in p.sigmas]
        G = mk.entries
        self._apply = lambda dens: G @ dens
        self.g_omega = G @ node_masses(p.omega)

    def _init_grid(self, p: ProblemSpec):
        k, grid = p.kernel, p.grid
        if grid is None:
            raise ValueError("grid problems need a solution grid (give ProblemSpec.grid)")
        for s in p.sigmas:
            if s.has_atoms:
                raise ValueError(ATOMS_REJECTED)
        self.nodes = grid.centers()
        # density values on the grid (not masses): the operators multiply by cell volume
        self.weights = [
            np.zeros(grid.size) if s.density is None else np.asarray(s.density.values, dtype=float)
            for s in p.sigmas
        ]
        sources = np.zeros(grid.size, dtype=bool)
        for w in self.weights:
            sources |= w > 0
        op = cached_operator(k, grid, None if k.is_convolution else sources)
        self._apply = op.apply
        om = p.omega
        g_omega = np.zeros(grid.size)
        if k.is_convolution and om.density is not None:
            g_omega += op.apply(om.density.values)
            if om.has_atoms:
                atoms = Measure(om.dim, om.atom_locations, om.atom_masses)
                g_omega += potential_direct(k, atoms, grid).values
        elif not om.is_zero:
            g_omega += potential_direct(k, om, grid).values
        self.g_omega = g_omega

    @property
    def size(self) -> int:
        return len(self.nodes)

    def term_potential(self, i: int, f: np.ndarray) -> np.ndarray:
        """G(f sigma_i) at every node."""
        w = self.weights[i]
        pos = w > 0
        if np.isnan(f[pos]).any():
            raise FloatingPointError("NaN in iterate")
        if np.isinf(f[pos]).any():
            raise DegenerateInstanceError("u = +inf on the support of a sigma_i")
        dens = np.where(pos, f, 0.0) * w
        return self._apply(dens)

    def sigma_potential(self, i: int) -> np.ndarray:
        return self.term_potential(i, np.ones(self.size))

    def operator(self, u: np.ndarray) -> np.ndarray:
        out = self.g_omega.copy()
        for i, q in enumerate(self.problem.qs):
            pos = self.weights[i] > 0
            f = np.zeros(self.size)
            f[pos] = u[pos] ** q
            out += self.term_potential(i, f)
        if np.isnan(out).any():
            raise FloatingPointError("NaN in iterate")
        return out

    def wrap(self, values: np.ndarray):
        return values if self.grid is None else GridFunction(self.grid, values)


_CACHE: "weakref.WeakKeyDictionary[ProblemSpec, Discretization]" = weakref.WeakKeyDictionary()


def discretize(p: ProblemSpec) -> Discretization:
    d = _CACHE.get(p)
    if d is None:
        d = Discretization(p)
        _CACHE[p] = d
    return d


def _values(u) -> np.ndarray:
    return np.asarray(u.values if isinstance(u, GridFunction) else u, dtype=float)


@dataclass
class SolveReport:
    iterate_count: int = 0
    residual_history: list[float] = field(default_factory=list)
    final_residual_fp: float = float("nan")
    monotonicity_violations: int = 0
    norms: list[float] = field(default_factory=list)
    lorentz_norm: float | None = None
    converged: bool = False
    tol: float = 0.0
    direction: str = "up"
    kappas: list[float] = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


# starting point ----------------------------------------------------------------------


def initial_constants(p: ProblemSpec) -> list[float]:
    """Per-term constants kappa_i = min{(1/c_i)^{1/(1-q_i)}, C_i}.

    c_i = a h^{a-1} with a = 1/(1-q_i) is the iterated-inequality constant
    and C_i = (1-q_i)^{1/(1-q_i)} h^{-q_i/(1-q_i)} the pointwise lower-bound
    constant. The first makes kappa_i (G sigma_i)^{1/(1-q_i)} a subsolution
    of the i-th term, the second puts it below every supersolution.
    """
    h = p.kernel.wmp_h
    out = []
    for q in p.qs:
        a = 1.0 / (1.0 - q)
        c = a * h ** (a - 1.0)
        lower = (1.0 - q) ** a * h ** (-q * a)
        kappa = min((1.0 / c) ** a, lower)
        if not kappa > 0:
            raise ValueError("nonpositive starting constant")
        out.append(kappa)
    return out


def _initial_terms(p: ProblemSpec, verify: bool = True):
    d = discretize(p)
    kappas = initial_constants(p)
    terms = []
    for i, q in enumerate(p.qs):
        gs = d.sigma_potential(i)
        kap = kappas[i]
        for _ in range(60):
            u0 = kap * gs ** (1.0 / (1.0 - q))
            if not verify:
                break
            rhs = d.term_potential(i, u0**q)
            if np.all(u0 <= rhs * (1 + 1e-9) + 1e-300):
                break
            kap *= 0.5
        else:
            raise RuntimeError("could not certify the starting subsolution")
        kappas[i] = kap
        terms.append(u0)
    return terms, kappas


def initial_lower(p: ProblemSpec) -> list:
    """u_i^(0) = kappa_i (G sigma_i)^{1/(1-q_i)}, each checked to satisfy
    u_i^(0) <= G((u_i^(0))^{q_i} sigma_i) at every node (1e-9 relative).

    Should the discrete check fail, kappa_i is halved until it passes.
    """
    d = discretize(p)
    terms, _ = _initial_terms(p)
    return [d.wrap(t) for t in terms]


def iterate_once(p: ProblemSpec, u):
    """sum_i G(u^{q_i} sigma_i) + G omega."""
    d = discretize(p)
    v = _values(u)
    if (v < 0).any():
        raise ValueError("u must be nonnegative")
    return d.wrap(d.operator(v))


def residual(p: ProblemSpec, u) -> float:
    """sup |u - iterate_once(u)| over nodes where G omega is finite."""
    d = discretize(p)
    v = _values(u)
    fin = d.finite
    diff = np.abs(v[fin] - d.operator(v)[fin])
    return float(diff.max()) if diff.size else 0.0


def _report_norms(p: ProblemSpec, d: Discretization, u: np.ndarray, rep: SolveReport) -> None:
    norms = []
    for i, q in enumerate(p.qs):
        w = d.weights[i]
        pos = w > 0
        vol = 1.0 if d.grid is None else d.grid.cell_volume
        e = p.gamma + q
        norms.append(float(np.sum(w[pos] * vol * u[pos] ** e) ** (1.0 / e)))
    rep.norms = norms
    if d.grid is not None:
        if np.isfinite(u).all():
            pair = solution_exponents(p.gamma, p.kernel.alpha, p.kernel.n)
            rep.lorentz_norm = lorentz_norm(GridFunction(d.grid, u), pair)
        else:
            rep.lorentz_norm = float("inf")


def _iterate(p, d, u, tol, max_iter, rep: SolveReport, increasing: bool):
    scale_floor = 1.0
    for _ in range(max_iter):
        nxt = d.operator(u)
        fin = d.finite
        step = nxt[fin] - u[fin]
        diff = float(np.max(np.abs(step))) if step.size else 0.0
        slack = EPS_MONO * max(scale_floor, float(np.max(np.abs(u[fin]))) if step.size else 0.0)
        bad = step < -slack if increasing else step > slack
        rep.monotonicity_violations += int(np.count_nonzero(bad))
        rep.residual_history.append(diff)
        rep.iterate_count += 1
        u = nxt
        if diff <= tol:
            rep.converged = True
            break
    rep.final_residual_fp = residual(p, u)
    if not rep.converged:
        rep.message = f"no convergence within {max_iter} iterations"
    _report_norms(p, d, u, rep)
    return d.wrap(u), rep


def solve_minimal(p: ProblemSpec, tol: float = 1e-8, max_iter: int = 500):
    """Monotone iteration from u_0 = sum_i G((u_i^(0))^{q_i} sigma_i) + G omega.

    Stops once sup |u_{j+1} - u_j| <= tol (over nodes with finite G omega).
    Returns the last iterate and a :class:`SolveReport`; non-convergence is
    reported, not raised.
    """
    d = discretize(p)
    terms, kappas = _initial_terms(p)
    u = d.g_omega.copy()
    for i, q in enumerate(p.qs):
        u += d.term_potential(i, terms[i] ** q)
    rep = SolveReport(tol=tol, direction="up", kappas=kappas)
    return _iterate(p, d, u, tol, max_iter, rep, increasing=True)


def downward_solve(p: ProblemSpec, start, tol: float = 1e-8, max_iter: int = 500):
    """Iterate down from a supersolution ``start`` (start >= iterate_once(start) - tol)."""
    d = discretize(p)
    u = _values(start).copy()
    img = d.operator(u)
    if (u[d.finite] < img[d.finite] - tol).any():
        raise ValueError("start is not a supersolution")
    rep = SolveReport(tol=tol, direction="down")
    return _iterate(p, d, u, tol, max_iter, rep, increasing=False)


def scaled_supersolution(p: ProblemSpec, u, lam: float = 2.0):
    """lam * u, a supersolution when u solves the problem and lam >= 1."""
    if lam < 1:
        raise ValueError("scaling factor must be >= 1")
    d = discretize(p)
    return d.wrap(lam * _values(u))


# norm bound --------------------------------------------------------------------------


@dataclass
class NormBoundReport:
    norms: list[float]
    c1: float
    c2: float
    q_max: float
    bound: float
    intermediate: float

    @property
    def holds(self) -> bool:
        return max(self.norms) <= max(1.0, self.bound) * (1 + 1e-12)


def norm_bound(p: ProblemSpec, u) -> NormBoundReport:
    """A priori bound on the L^{gamma+q_i}(sigma_i) norms of a solution.

    With x_i those norms, C1 = max_{i,l} ||G(u^{q_l} sigma_l)||_{L^{gamma+q_i}(sigma_i)} / x_l^{q_l}
    and C2 = max_i ||G omega||_{L^{gamma+q_i}(sigma_i)}, every x_i is bounded by
    (C1 M)^{1/(1-q)} + C2/(1-q) with q = max q_i, once max x_i >= 1 (Young's
    inequality with exponents 1/(1-q) and 1/q). ``intermediate`` is the
    pre-absorption quantity (1-q)(C1 M)^{1/(1-q)} + q max x_i + C2.
    """
    d = discretize(p)
    v = _values(u)
    vol = 1.0 if d.grid is None else d.grid.cell_volume
    g = p.gamma
    qs = p.qs

    def lnorm(i, f):
        w = d.weights[i]
        pos = w > 0
        e = g + qs[i]
        return float(np.sum(w[pos] * vol * f[pos] ** e) ** (1.0 / e))

    x = [lnorm(i, v) for i in range(len(qs))]
    c1 = 0.0
    for l, ql in enumerate(qs):
        pot = d.term_potential(l, np.where(d.weights[l] > 0, v, 0.0) ** ql)
        for i in range(len(qs)):
            if x[l] > 0:
                c1 = max(c1, lnorm(i, pot) / x[l] ** ql)
    c2 = max(lnorm(i, d.g_omega) for i in range(len(qs)))
    q = max(qs)
    M = len(qs)
    bound = (c1 * M) ** (1 / (1 - q)) + c2 / (1 - q)
    inter = (1 - q) * (c1 * M) ** (1 / (1 - q)) + q * max(x) + c2
    return NormBoundReport(x, c1, c2, q, bound, inter)
