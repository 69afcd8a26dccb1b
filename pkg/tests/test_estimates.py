import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublinear_riesz.core import BoxGrid, GridFunction, Measure, ProblemSpec
from sublinear_riesz.estimates import (
    bilateral_bracket,
    bracket_downward,
    default_probes,
    havin_mazya_bound_check,
    havin_mazya_exponents,
    iterated_check,
    key_lorentz_check,
)
from sublinear_riesz.fixtures import bump, random_bumps, single_term_problem
from sublinear_riesz.kernels import riesz_kernel
from sublinear_riesz.potentials import potential_direct
from sublinear_riesz.solver import solve_minimal

K = riesz_kernel(1.0, 2)


def two_cell_sigma():
    grid = BoxGrid.cube(3, 1.0, 6)
    v = np.zeros(grid.size)
    v[[40, 130]] = [1.0, 2.5]
    return Measure.from_density(GridFunction(grid, v))


def brute_sides(sigma, a, k, probes):
    """Both sides of the iterated inequality (h = 1) by direct summation."""
    lhs = potential_direct(k, sigma, probes).values ** a
    f = sigma.density.values.copy()
    pos = f > 0
    f[pos] *= potential_direct(k, sigma, sigma.grid.centers()[pos]).values ** (a - 1)
    rhs = a * potential_direct(k, Measure.from_density(sigma.density.with_values(f)), probes).values
    return lhs, rhs


def test_identity_exponent_gives_zero():
    sigma = Measure.from_density(bump(BoxGrid.cube(2, 1.0, 24), (0, 0), 0.5))
    assert iterated_check(sigma, 1.0, K) == 0.0


@pytest.mark.parametrize("a", [2.0, 0.5])
def test_two_cell_instance_by_direct_summation(a):
    k = riesz_kernel(2.0, 3)
    sigma = two_cell_sigma()
    probes = np.random.default_rng(3).uniform(-1.5, 1.5, (30, 3))
    lhs, rhs = brute_sides(sigma, a, k, probes)
    gap = (lhs - rhs) / rhs if a >= 1 else (rhs - lhs) / rhs
    assert gap.max() <= 1e-9
    assert iterated_check(sigma, a, k, probes) == pytest.approx(gap.max(), rel=1e-9, abs=1e-12)


def test_zero_sigma_has_no_violation():
    assert iterated_check(Measure.zero(2), 2.0, K) == 0.0


def test_exponent_must_be_positive():
    with pytest.raises(ValueError):
        iterated_check(two_cell_sigma(), 0.0, riesz_kernel(2.0, 3))


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 3.0]))
def test_iterated_inequalities_on_random_densities(seed, a):
    rng = np.random.default_rng(seed)
    sigma = Measure.from_density(random_bumps(BoxGrid.cube(2, 1.0, 16), rng))
    assert iterated_check(sigma, a, K) <= 1e-9


def test_default_probes_keep_collar():
    grid = BoxGrid.cube(2, 1.0, 32)
    sigma = Measure.from_density(bump(grid, (0, 0), 0.4))
    probes = default_probes(grid, [sigma], count=1000)
    support = (sigma.density.values > 0).reshape(grid.shape)
    for i in grid.locate(probes):
        r, c = np.unravel_index(i, grid.shape)
        patch = support[max(r - 2, 0) : r + 3, max(c - 2, 0) : c + 3]
        assert patch.all() or not patch.any()


def test_bracket_on_omega_only_problem_is_degenerate():
    p0 = single_term_problem(16)
    p = ProblemSpec(p0.kernel, ((Measure.zero(2), 0.5),), p0.omega, 1.0, p0.grid)
    u, _ = solve_minimal(p)
    rep = bilateral_bracket(u, p)
    assert rep.degenerate and rep.c_low == rep.c_up == 0.0


def test_bracket_needs_one_term():
    from sublinear_riesz.fixtures import two_term_problem

    p = two_term_problem(16)
    with pytest.raises(ValueError):
        bilateral_bracket(solve_minimal(p)[0], p)


def test_bracket_sigma_only_respects_lower_bound():
    p0 = single_term_problem(32)
    p = ProblemSpec(p0.kernel, p0.terms, Measure.zero(2), 1.0)
    rep = bilateral_bracket(solve_minimal(p)[0], p)
    assert rep.c_low >= 0.25
    assert rep.c_low <= rep.c_up < np.inf


def test_bracket_regression_on_fixture():
    p = single_term_problem(32)
    rep = bilateral_bracket(solve_minimal(p)[0], p)
    assert 0 < rep.c_low <= rep.c_up < np.inf
    assert rep.c_low == pytest.approx(0.6522011163730779, rel=1e-6)
    assert rep.c_up / rep.c_low == pytest.approx(1.054284543038831, rel=1e-6)
    assert len(rep.to_dict()["probes"]) == 25


def test_downward_from_bracket_on_small_grid():
    p = single_term_problem(16)
    tol = 1e-8
    u, _ = solve_minimal(p, tol)
    v, rep, c = bracket_downward(p, 1.0, tol)
    assert c >= 1.0 and rep.converged
    assert np.max(np.abs(v.values - u.values)) <= 10 * tol


def test_key_lorentz_zero():
    rep = key_lorentz_check(Measure.zero(2), 1.0, K)
    assert (rep.lhs, rep.rhs, rep.ratio) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_key_lorentz_scale_invariant(lam):
    sigma = Measure.from_density(bump(BoxGrid.cube(2, 1.0, 32), (0.1, 0), 0.5))
    base = key_lorentz_check(sigma, 1.0, K)
    scaled = key_lorentz_check(sigma.scaled(lam), 1.0, K)
    assert scaled.lhs == pytest.approx(lam * base.lhs, rel=1e-13)
    assert scaled.rhs == pytest.approx(lam * base.rhs, rel=1e-13)
    assert scaled.ratio == pytest.approx(base.ratio, rel=1e-13)


def test_key_lorentz_max_ratio_stable_under_doubling():
    grid = BoxGrid.cube(2, 1.0, 32)

    def max_ratio(trials):
        rng = np.random.default_rng(7)
        return max(key_lorentz_check(Measure.from_density(random_bumps(grid, rng)), 1.0, K).ratio
                   for _ in range(trials))

    a, b = max_ratio(20), max_ratio(40)
    assert b >= a and b <= 1.05 * a


def test_havin_mazya_exponent_range():
    assert havin_mazya_exponents(0.5, 2.0, 1.5, 2.0, 3) == pytest.approx((3.0, 2.0))
    with pytest.raises(ValueError):
        havin_mazya_exponents(1.0, 2.0, 1.6, 2.0, 3)


def test_havin_mazya_bound_of_zero():
    rep = havin_mazya_bound_check(GridFunction.zeros(BoxGrid.cube(3, 1.0, 8)), 0.5, 2.0, 1.5, 2.0)
    assert (rep.lhs, rep.rhs) == (0.0, 0.0)


def test_havin_mazya_ratio_settles_under_refinement():
    ratios = [havin_mazya_bound_check(bump(BoxGrid.cube(3, 2.0, c), (0, 0, 0), 0.6), 0.5, 2.0, 1.5, 2.0).ratio
              for c in (32, 64)]
    assert abs(ratios[1] - ratios[0]) <= 0.1 * ratios[1]


def test_havin_mazya_indicator_data_norm_closed_form():
    # a unit-volume set: ||1_E||_{s,t} = (s/t)^{1/t}
    grid = BoxGrid((0.05, 0.05, 0.05), 0.1, (20, 20, 20))
    v = np.zeros(grid.size)
    v[:1000] = 1.0
    rep = havin_mazya_bound_check(GridFunction(grid, v), 0.5, 2.0, 1.5, 2.0)
    assert rep.rhs == pytest.approx((1.5 / 2.0) ** 0.5, rel=1e-12)
