from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublinear_riesz.conditions import (
    ATOMS_REJECTED,
    condition_report,
    cross_integral,
    data_holder_check,
    green_sufficient_exponents,
    lorentz_weighted_audit,
    lorentz_weighted_exponent,
    omega_energy,
    sigma_energy,
    solution_exponents,
    sufficient_exponents,
    two_weight_audit,
    two_weight_check,
    weighted_norm_audit,
)
from sublinear_riesz.core import BoxGrid, GridFunction, LorentzPair, Measure
from sublinear_riesz.fixtures import bump, random_bumps, scalar_problem, single_term_problem
from sublinear_riesz.kernels import riesz_kernel, unit_ball_volume
from sublinear_riesz.potentials import potential_direct

GRID = BoxGrid.cube(2, 1.0, 16)
K = riesz_kernel(1.0, 2)


def one_cell(grid, index, density=1.0):
    v = np.zeros(grid.size)
    v[index] = density
    return Measure.from_density(GridFunction(grid, v))


def self_value(n, alpha, vol):
    rho = (vol / unit_ball_volume(n)) ** (1 / n)
    return n / alpha * rho ** (alpha - n)


def test_zero_measures_give_zero():
    z = Measure.zero(2)
    assert sigma_energy(z, 0.5, 1.0, K) == 0.0
    assert omega_energy(z, 1.0, K) == 0.0
    assert cross_integral(z, one_cell(GRID, 3), 0.5, 1.0, K) == 0.0


def test_single_cell_sigma_energy_with_unit_exponent():
    # (gamma + q)/(1 - q) = 1 for gamma = 1/2, q = 1/4
    k = riesz_kernel(1.0, 2, "unit")
    sigma = one_cell(GRID, 37, 3.0)
    mass = 3.0 * GRID.cell_volume
    expected = mass**2 * self_value(2, 1.0, GRID.cell_volume)
    assert sigma_energy(sigma, 0.25, 0.5, k) == pytest.approx(expected, rel=1e-14)


def test_single_cell_dual_energy():
    k = riesz_kernel(1.5, 3, "unit")
    grid = BoxGrid.cube(3, 1.0, 6)
    om = one_cell(grid, 10, 2.0)
    mass = 2.0 * grid.cell_volume
    assert omega_energy(om, 1.0, k) == pytest.approx(mass**2 * self_value(3, 1.5, grid.cell_volume), rel=1e-14)


def test_two_far_cells_dual_energy_by_hand():
    k = riesz_kernel(1.0, 2, "unit")
    i, j = 0, GRID.size - 1
    v = np.zeros(GRID.size)
    v[i], v[j] = 1.0, 2.0
    om = Measure.from_density(GridFunction(GRID, v))
    vol = GRID.cell_volume
    m1, m2 = vol, 2 * vol
    X = GRID.centers()
    cross = 1.0 / np.linalg.norm(X[i] - X[j])
    s = self_value(2, 1.0, vol)
    expected = m1 * (m1 * s + m2 * cross) + m2 * (m2 * s + m1 * cross)
    assert omega_energy(om, 1.0, k) == pytest.approx(expected, rel=1e-12)
    direct = potential_direct(k, om, X[[i, j]]).values
    assert omega_energy(om, 1.0, k) == pytest.approx(m1 * direct[0] + m2 * direct[1], rel=1e-12)


def test_atomic_sigma_rejected():
    atoms = Measure.from_atoms([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError, match=ATOMS_REJECTED):
        sigma_energy(atoms, 0.5, 1.0, K)
    with pytest.raises(ValueError, match=ATOMS_REJECTED):
        two_weight_check(atoms, one_cell(GRID, 0), 0.5, 1.0, K)


def test_atomic_omega_has_infinite_energy():
    assert omega_energy(Measure.from_atoms([[0.0, 0.0]], [1.0]), 1.0, K) == np.inf


def test_sigma_energy_settles_under_refinement():
    vals = [sigma_energy(Measure.from_density(bump(BoxGrid.cube(2, 1.0, c), (0, 0), 0.5)), 0.5, 1.0, K)
            for c in (16, 32, 64)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) < 0.02 * vals[2]


@given(st.floats(0.05, 20), st.floats(0.05, 0.95), st.floats(0.2, 3))
def test_sigma_energy_scaling_law(lam, q, gamma):
    sigma = Measure.from_density(bump(GRID, (0.1, 0.0), 0.5))
    base = sigma_energy(sigma, q, gamma, K)
    scaled = sigma_energy(sigma.scaled(lam), q, gamma, K)
    assert scaled == pytest.approx(lam ** (1 + (gamma + q) / (1 - q)) * base, rel=1e-10)


def test_condition_report_of_scalar_problem():
    rep = condition_report(scalar_problem())
    assert rep.sigma_integrals == [pytest.approx(1.0)]
    assert rep.omega_integral == pytest.approx(4.0)
    assert rep.cross_integrals == [pytest.approx(2 * np.sqrt(2))]
    assert rep.verdict


def test_condition_report_flags_atomic_omega():
    p = single_term_problem(16)
    from sublinear_riesz.core import ProblemSpec

    q = ProblemSpec(p.kernel, p.terms, Measure.from_atoms([[0.0625, 0.0625]], [1.0]), 1.0)
    rep = condition_report(q)
    assert not rep.verdict and rep.omega_integral == np.inf


def test_condition_report_exponents_and_data_norms():
    rep = condition_report(single_term_problem(16))
    assert (rep.solution_pair.r, rep.solution_pair.rho) == (4.0, 2.0)
    assert set(rep.data_lorentz_norms) == {"sigma_1", "omega"}
    assert all(v > 0 for v in rep.data_lorentz_norms.values())


def test_two_weight_constant_potential_ratio_one():
    cell = one_cell(GRID, 100, 2.0)
    rep = two_weight_check(cell, cell, 0.5, 1.0, K)
    assert rep.ratio == pytest.approx(1.0, abs=1e-12)


def test_two_weight_zero_omega():
    rep = two_weight_check(one_cell(GRID, 5), Measure.zero(2), 0.5, 1.0, K)
    assert rep.lhs == 0.0 and rep.ratio == 0.0 and not rep.degenerate


def test_two_weight_extended_range_and_invalid_q():
    s = Measure.from_density(bump(GRID, (0, 0), 0.5))
    w = Measure.from_density(bump(GRID, (0.2, 0), 0.4))
    assert np.isfinite(two_weight_check(s, w, -0.5, 1.0, K).ratio)
    with pytest.raises(ValueError):
        two_weight_check(s, w, -1.5, 1.0, K)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(0.01, 100))
def test_two_weight_ratio_scale_invariant(seed, lam, mu):
    rng = np.random.default_rng(seed)
    s = Measure.from_density(random_bumps(GRID, rng))
    w = Measure.from_density(random_bumps(GRID, rng))
    base = two_weight_check(s, w, 0.5, 1.0, K).ratio
    assert two_weight_check(s.scaled(lam), w.scaled(mu), 0.5, 1.0, K).ratio == pytest.approx(base, rel=1e-9)


def test_two_weight_audit_within_budget():
    rep = two_weight_audit(BoxGrid.cube(2, 1.0, 32), K, trials=50)
    assert len(rep.ratios) == 50
    assert rep.within_budget


def test_solution_exponents_exact():
    p = solution_exponents(F(1), F(2), 3)
    assert (p.r, p.rho) == (6, 2)
    p = solution_exponents(F(1), F(1), 2)
    assert (p.r, p.rho) == (4, 2)


def test_solution_exponents_small_alpha_limit():
    p = solution_exponents(F(1), F(1, 10**9), 3)
    assert p.r == pytest.approx(float(p.rho), rel=1e-8)


def test_sufficient_exponents_exact():
    term, om = sufficient_exponents(F(1), F(1, 2), F(2), 3)
    assert (term.r, term.rho, om.r, om.rho) == (F(4, 3), 4, F(6, 5), 2)


def test_sufficient_exponents_at_q_zero_coincide():
    term, om = sufficient_exponents(F(3, 2), F(0), F(1), 2)
    assert (term.r, term.rho) == (om.r, om.rho)


def test_green_exponents_are_alpha_two_specialization():
    for q in (F(1, 4), F(1, 2), F(3, 4)):
        term, om = sufficient_exponents(F(1), q, F(2), 3)
        gterm, gom = green_sufficient_exponents(F(1), q, 3)
        assert (term.r, term.rho, om.r, om.rho) == (gterm.r, gterm.rho, gom.r, gom.rho)


def test_lorentz_weighted_exponent_example():
    assert lorentz_weighted_exponent(F(6), 3, F(2), F(1, 2)) == 3


def test_weighted_norm_audit_first_trial_is_constant_function():
    sigma = Measure.from_density(bump(GRID, (0, 0), 0.5))
    q, gamma = 0.5, 1.0
    rep = weighted_norm_audit(sigma, q, gamma, K, trials=5)
    locs, ms = sigma.support_points()
    pot = potential_direct(K, sigma, locs).values
    expected = float(np.sum(ms * pot ** (gamma + q))) ** (1 / (gamma + q)) / ms.sum() ** (q / (gamma + q))
    assert rep.ratios[0] == pytest.approx(expected, rel=1e-12)


def test_weighted_norm_audit_zero_sigma():
    assert weighted_norm_audit(Measure.zero(2), 0.5, 1.0, K).max_ratio == 0.0


def test_weighted_norm_audit_stable_when_trials_double():
    sigma = Measure.from_density(bump(BoxGrid.cube(2, 1.0, 32), (0, 0), 0.5))
    a = weighted_norm_audit(sigma, 0.5, 1.0, K, trials=100).max_ratio
    b = weighted_norm_audit(sigma, 0.5, 1.0, K, trials=200).max_ratio
    assert abs(b - a) <= 0.05 * a


def test_lorentz_weighted_audit_stable_and_s_value():
    k = riesz_kernel(2.0, 3)
    sigma = Measure.from_density(bump(BoxGrid.cube(3, 1.0, 12), (0, 0, 0), 0.5))
    pair = LorentzPair(6.0, 2.0)
    a = lorentz_weighted_audit(sigma, 0.5, pair, k, trials=50)
    b = lorentz_weighted_audit(sigma, 0.5, pair, k, trials=100)
    assert a.s == pytest.approx(3.0)
    assert np.isfinite(a.max_ratio) and abs(b.max_ratio - a.max_ratio) <= 0.05 * a.max_ratio


def test_lorentz_weighted_audit_rejects_small_r():
    # s > 1 is the same condition as r > n/(n-alpha)
    k = riesz_kernel(2.0, 3)
    sigma = Measure.from_density(bump(BoxGrid.cube(3, 1.0, 8), (0, 0, 0), 0.5))
    with pytest.raises(ValueError):
        lorentz_weighted_audit(sigma, 0.5, LorentzPair(2.5, 2.0), k)


def test_holder_check_zero_data():
    rep = data_holder_check(GridFunction.zeros(GRID), 1.0, K)
    assert (rep.lhs, rep.product) == (0.0, 0.0)


def test_holder_check_single_cell_lhs():
    k = riesz_kernel(1.0, 2, "unit")
    f = one_cell(GRID, 50, 4.0).density
    mass = 4.0 * GRID.cell_volume
    rep = data_holder_check(f, 2.0, k)
    assert rep.lhs == pytest.approx(mass * (mass * self_value(2, 1.0, GRID.cell_volume)) ** 2, rel=1e-12)
    assert rep.holds


@given(st.integers(0, 2**32 - 1), st.floats(0.5, 3.0))
def test_holder_check_holds_on_random_densities(seed, beta):
    rng = np.random.default_rng(seed)
    rep = data_holder_check(random_bumps(GRID, rng), beta, K)
    assert rep.holds
