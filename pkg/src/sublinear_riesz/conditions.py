"""Existence conditions, exponent formulas and weighted norm audits.

Condition integrals evaluate potentials at cell centers with the same
singular-cell rule as :mod:`potentials`, so every integral here is an exact
finite sum on the discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GridFunction, LorentzPair, Measure, ProblemSpec
from .fixtures import random_bump_pair
from .kernels import KernelSpec
from .lorentz import lorentz_norm, lp_norm_measure
from .potentials import cached_operator, potential_direct, potential_on_support

DEFAULT_SEED = 20240607

ATOMS_REJECTED = "atomic sigma is rejected: the condition integral diverges at atoms"


def require_density(sigma: Measure, k: KernelSpec | None = None) -> None:
    """Reject atomic sigma, except under matrix kernels whose diagonal is finite."""
    if sigma.has_atoms and not (k is not None and k.is_matrix):
        raise ValueError(ATOMS_REJECTED)


def _integral(values: np.ndarray, masses: np.ndarray, power: float) -> float:
    if len(masses) == 0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.sum(masses * values**power))


def sigma_energy(sigma: Measure, q: float, gamma: float, k: KernelSpec) -> float:
    """int (G sigma)^{(gamma+q)/(1-q)} d sigma."""
    require_density(sigma, k)
    if sigma.is_zero:
        return 0.0
    _, masses = sigma.support_points()
    return _integral(potential_on_support(k, sigma, sigma), masses, (gamma + q) / (1 - q))


def omega_energy(omega: Measure, gamma: float, k: KernelSpec) -> float:
    """int (G omega)^gamma d omega (gamma = 1 is the dual energy).

    ``inf`` when omega has atoms, unless the kernel is a matrix kernel.
    """
    if omega.is_zero:
        return 0.0
    if omega.has_atoms and not k.is_matrix:
        return float("inf")
    _, masses = omega.support_points()
    return _integral(potential_on_support(k, omega, omega), masses, gamma)


def cross_integral(omega: Measure, sigma: Measure, q: float, gamma: float, k: KernelSpec) -> float:
    """int (G omega)^{gamma+q} d sigma."""
    require_density(sigma, k)
    if sigma.is_zero or omega.is_zero:
        return 0.0
    _, masses = sigma.support_points()
    return _integral(potential_on_support(k, omega, sigma), masses, gamma + q)


# exponents -----------------------------------------------------------------------


def solution_exponents(gamma, alpha, n) -> LorentzPair:
    """(r, rho) = (n(gamma+1)/(n-alpha), gamma+1). Exact for Fraction inputs."""
    if not 0 < alpha < n:
        raise ValueError("need 0 < alpha < n")
    return LorentzPair(n * (gamma + 1) / (n - alpha), gamma + 1)


def sufficient_exponents(gamma, q, alpha, n):
    """Lorentz exponents sufficient for the existence conditions.

    Returns ``(term_pairs, omega_pair)``; ``term_pairs`` is one pair when
    ``q`` is a scalar and a list when ``q`` is a sequence.
    """

    def term(qi):
        return LorentzPair(n * (gamma + 1) / (n * (1 - qi) + alpha * (gamma + qi)), (gamma + 1) / (1 - qi))

    om = LorentzPair(n * (gamma + 1) / (n + alpha * gamma), gamma + 1)
    if isinstance(q, (list, tuple)):
        return [term(qi) for qi in q], om
    return term(q), om


def green_sufficient_exponents(gamma, q, n):
    """Lorentz exponents for the Laplacian Green kernel, written out directly for n >= 3."""
    r_i = n * (gamma + 1) / (n * (1 - q) + 2 * (gamma + q))
    rho_i = (gamma + 1) / (1 - q)
    return LorentzPair(r_i, rho_i), LorentzPair(n * (gamma + 1) / (n + 2 * gamma), gamma + 1)


def lorentz_weighted_exponent(r, n, alpha, q):
    """s = (r(n-alpha) - n(1-q))/(nq), the L^s(d sigma) exponent on the right of the Lorentz weighted inequality."""
    return (r * (n - alpha) - n * (1 - q)) / (n * q)


# report ------------------------------------------------------------------------------


@dataclass
class ConditionReport:
    sigma_integrals: list[float]
    omega_integral: float
    cross_integrals: list[float]
    verdict: bool
    solution_pair: LorentzPair | None = None
    term_pairs: list[LorentzPair] = field(default_factory=list)
    omega_pair: LorentzPair | None = None
    data_lorentz_norms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def pair(p):
            return None if p is None else [float(p.r), float(p.rho)]

        return {
            "sigma_integrals": self.sigma_integrals,
            "omega_integral": self.omega_integral,
            "cross_integrals": self.cross_integrals,
            "verdict": self.verdict,
            "solution_pair": pair(self.solution_pair),
            "term_pairs": [pair(p) for p in self.term_pairs],
            "omega_pair": pair(self.omega_pair),
            "data_lorentz_norms": self.data_lorentz_norms,
        }


def condition_report(p: ProblemSpec) -> ConditionReport:
    """Evaluate every existence condition of the problem and the associated exponents."""
    k, g = p.kernel, p.gamma
    sig = [sigma_energy(s, q, g, k) for s, q in p.terms]
    om = omega_energy(p.omega, g, k)
    cross = [cross_integral(p.omega, s, q, g, k) for s, q in p.terms]
    verdict = all(np.isfinite(v) for v in sig + cross + [om])
    rep = ConditionReport(sig, om, cross, bool(verdict))
    if not k.is_matrix:
        n, a = k.n, k.alpha
        rep.solution_pair = solution_exponents(g, a, n)
        rep.term_pairs, rep.omega_pair = sufficient_exponents(g, list(p.qs), a, n)
        norms = {}
        for i, (s, _) in enumerate(p.terms):
            if s.density is not None:
                norms[f"sigma_{i + 1}"] = lorentz_norm(s.density, rep.term_pairs[i])
        if p.omega.density is not None:
            norms["omega"] = lorentz_norm(p.omega.density, rep.omega_pair)
        rep.data_lorentz_norms = norms
    return rep


# two-weight estimate ---------------------------------------------------------------


@dataclass
class TwoWeightReport:
    lhs: float
    rhs: float
    ratio: float
    degenerate: bool = False


def two_weight_check(sigma: Measure, omega: Measure, q: float, gamma: float, k: KernelSpec) -> TwoWeightReport:
    """Compare int (G omega)^{gamma+q} d sigma with
    [int (G omega)^gamma d omega]^{(gamma+q)/(gamma+1)} [int (G sigma)^{(gamma+q)/(1-q)} d sigma]^{(1-q)/(gamma+1)}.

    Valid for -gamma < q < 1. A zero right side with a positive left side
    is reported with ``degenerate=True`` and ``ratio = inf``.
    """
    if not (-gamma < q < 1):
        raise ValueError("need -gamma < q < 1")
    require_density(sigma, k)
    lhs = 0.0
    if not (sigma.is_zero or omega.is_zero):
        _, ms = sigma.support_points()
        lhs = _integral(potential_on_support(k, omega, sigma), ms, gamma + q)
    e_om = omega_energy(omega, gamma, k)
    e_sig = 0.0
    if not sigma.is_zero:
        _, ms = sigma.support_points()
        e_sig = _integral(potential_on_support(k, sigma, sigma), ms, (gamma + q) / (1 - q))
    rhs = e_om ** ((gamma + q) / (gamma + 1)) * e_sig ** ((1 - q) / (gamma + 1))
    if rhs == 0:
        return TwoWeightReport(lhs, rhs, float("inf") if lhs > 0 else 0.0, lhs > 0)
    return TwoWeightReport(lhs, rhs, lhs / rhs)


@dataclass
class AuditReport:
    """Empirical ratios from a seeded randomized audit. ``budget`` is a configured bound, not a theorem."""

    ratios: np.ndarray
    seed: int
    budget: float | None = None

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios)) if len(self.ratios) else 0.0

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.max_ratio <= self.budget


def two_weight_audit(grid, k: KernelSpec, trials: int = 50, gamma: float = 1.0, q: float = 0.5,
                     seed: int = DEFAULT_SEED, budget: float = 10.0) -> AuditReport:
    """Two-weight ratios over ``trials`` seeded random pairs of bump densities on ``grid``.

    Pairs are drawn with overlapping bumps (:func:`random_bump_pair`) since the
    ratio is largest when the two measures concentrate together.
    """
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        fs, fw = random_bump_pair(grid, rng)
        s, w = Measure.from_density(fs), Measure.from_density(fw)
        ratios.append(two_weight_check(s, w, q, gamma, k).ratio)
    return AuditReport(np.array(ratios), seed, budget)


# weighted norm inequalities ----------------------------------------------------------


def _potential_of_weighted(k: KernelSpec, sigma: Measure, f: np.ndarray) -> np.ndarray:
    """G(f sigma) at every cell of sigma's grid; ``f`` is aligned with the support cells."""
    grid = sigma.grid
    mask = sigma.cell_masses() > 0
    dens = np.zeros(grid.size)
    dens[mask] = f * sigma.density.values[mask]
    return cached_operator(k, grid, mask).apply(dens)


def _random_test_functions(rng, size: int, trials: int):
    yield np.ones(size)
    for j in range(1, trials):
        if j % 2:
            yield rng.random(size)
        else:
            yield rng.random(size) ** 4


def weighted_norm_audit(sigma: Measure, q: float, gamma: float, k: KernelSpec, trials: int = 100,
                        seed: int = DEFAULT_SEED) -> AuditReport:
    """Ratios ||G(f sigma)||_{L^{gamma+q}(sigma)} / ||f||_{L^{(gamma+q)/q}(sigma)}.

    The first trial is f = 1; the rest are seeded random nonnegative f on
    supp sigma.
    """
    require_density(sigma, k)
    if sigma.is_zero:
        return AuditReport(np.zeros(1), seed)
    rng = np.random.default_rng(seed)
    _, ms = sigma.support_points()
    mask = sigma.cell_masses() > 0
    r, p = gamma + q, (gamma + q) / q
    ratios = []
    for f in _random_test_functions(rng, len(ms), trials):
        pot = _potential_of_weighted(k, sigma, f)[mask]
        num = float(np.sum(ms * pot**r)) ** (1 / r)
        den = float(np.sum(ms * f**p)) ** (1 / p)
        ratios.append(num / den if den > 0 else 0.0)
    return AuditReport(np.array(ratios), seed)


@dataclass
class LorentzAuditReport(AuditReport):
    s: float = float("nan")
    sigma_factor: float = float("nan")


def lorentz_weighted_audit(sigma: Measure, q: float, pair: LorentzPair, k: KernelSpec, trials: int = 100,
                           seed: int = DEFAULT_SEED) -> LorentzAuditReport:
    """Ratios ||G(f sigma)||_{L^{r,rho}} / (||G sigma||^{1/s'}_{L^{r/(1-q),rho/(1-q)}} ||f||_{L^s(sigma)}).

    Requires n/(n-alpha) < r; ``s`` must exceed 1.
    """
    require_density(sigma, k)
    n, a = k.n, k.alpha
    r, rho = float(pair.r), float(pair.rho)
    if not n / (n - a) < r:
        raise ValueError("need n/(n-alpha) < r")
    s = float(lorentz_weighted_exponent(r, n, a, q))
    if not s > 1:
        raise ValueError(f"exponent s = {s} must exceed 1")
    if sigma.is_zero:
        return LorentzAuditReport(np.zeros(1), seed, None, s, 0.0)
    grid = sigma.grid
    rng = np.random.default_rng(seed)
    _, ms = sigma.support_points()
    g_sigma = GridFunction(grid, _potential_of_weighted(k, sigma, np.ones(len(ms))))
    s_conj = s / (s - 1)
    factor = lorentz_norm(g_sigma, (r / (1 - q), rho / (1 - q))) ** (1 / s_conj)
    ratios = []
    for f in _random_test_functions(rng, len(ms), trials):
        num = lorentz_norm(GridFunction(grid, _potential_of_weighted(k, sigma, f)), (r, rho))
        den = factor * float(np.sum(ms * f**s)) ** (1 / s)
        ratios.append(num / den if den > 0 else 0.0)
    return LorentzAuditReport(np.array(ratios), seed, None, s, factor)


@dataclass
class HolderReport:
    lhs: float
    potential_norm: float
    data_norm: float
    s: float
    t: float

    @property
    def product(self) -> float:
        return self.potential_norm * self.data_norm

    @property
    def holds(self) -> bool:
        return self.lhs <= self.product * (1 + 1e-9)


def data_holder_check(omega_density: GridFunction, beta: float, k: KernelSpec) -> HolderReport:
    """int (G omega)^beta d omega against ||G omega||^beta_{L^{beta s', beta t'}} ||omega||_{L^{s,t}}
    with s = n(beta+1)/(n + alpha beta), t = beta + 1.

    The inequality is Hardy-Littlewood plus Hoelder in dt/t, which holds
    exactly for step functions on a grid.
    """
    n, a = k.n, k.alpha
    s = n * (beta + 1) / (n + a * beta)
    t = beta + 1
    om = Measure.from_density(omega_density)
    if om.is_zero:
        return HolderReport(0.0, 0.0, 0.0, s, t)
    grid = omega_density.grid
    pot = _potential_of_weighted(k, om, np.ones(int(np.count_nonzero(om.cell_masses() > 0))))
    lhs = float(np.sum(pot**beta * omega_density.values) * grid.cell_volume)
    s_c, t_c = s / (s - 1), t / (t - 1)
    pn = lorentz_norm(GridFunction(grid, pot), (beta * s_c, beta * t_c)) ** beta
    dn = lorentz_norm(omega_density, (s, t))
    return HolderReport(lhs, pn, dn, s, t)


def potential_lp_on(k: KernelSpec, source: Measure, target: Measure, p: float) -> float:
    """||G source||_{L^p(target)}."""
    return lp_norm_measure(lambda pts: potential_direct(k, source, pts).values, p, target)
