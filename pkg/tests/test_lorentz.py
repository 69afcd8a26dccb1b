import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublinear_riesz.core import BoxGrid, GridFunction, Measure
from sublinear_riesz.lorentz import lorentz_norm, lp_norm_grid, lp_norm_measure, rearrange
from sublinear_riesz.oracle import lorentz_by_quadrature
from sublinear_riesz.potentials import potential_direct
from sublinear_riesz.kernels import riesz_kernel

# 10 x 10 cells of side 0.1: total volume 1
UNIT = BoxGrid((0.05, 0.05), 0.1, (10, 10))


def indicator(grid, cells):
    v = np.zeros(grid.size)
    v[:cells] = 1.0
    return GridFunction(grid, v)


def test_constant_rearranges_to_one_step():
    fs = rearrange(GridFunction(UNIT, np.full(UNIT.size, 2.5)))
    np.testing.assert_array_equal(fs.levels, [2.5])
    np.testing.assert_allclose(fs.breakpoints, [0.0, 1.0])


def test_indicator_rearrangement():
    grid = BoxGrid((0.05, 0.05), 0.1, (20, 10))
    fs = rearrange(indicator(grid, 100))
    np.testing.assert_array_equal(fs.levels, [1.0, 0.0])
    np.testing.assert_allclose(fs.breakpoints, [0.0, 1.0, 2.0])
    assert fs(0.5) == 1.0 and fs(1.5) == 0.0


def test_distribution_matches_histogram(rng):
    f = GridFunction(UNIT, rng.normal(size=UNIT.size))
    fs = rearrange(f)
    for lam in np.linspace(0.0, 2.5, 20):
        brute = np.count_nonzero(np.abs(f.values) > lam) * UNIT.cell_volume
        assert fs.distribution(lam) == pytest.approx(brute, abs=1e-12)


def test_indicator_lorentz_r_equals_rho():
    assert lorentz_norm(indicator(UNIT, 100), (3, 3)) == pytest.approx(1.0, rel=1e-15)


def test_indicator_lorentz_six_two_is_sqrt_three():
    assert lorentz_norm(indicator(UNIT, 100), (6, 2)) == pytest.approx(math.sqrt(3), rel=1e-15)


def test_rho_infinity_is_sup_at_breakpoints():
    assert lorentz_norm(indicator(UNIT, 25), (2, math.inf)) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("p", [1.0, 2.0, 6.0])
def test_diagonal_lorentz_equals_lebesgue(rng, p):
    f = GridFunction(UNIT, rng.exponential(size=UNIT.size))
    assert lorentz_norm(f, (p, p)) == pytest.approx(lp_norm_grid(f, p), rel=1e-12)


def test_lorentz_matches_quadrature(rng):
    f = GridFunction(UNIT, rng.exponential(size=UNIT.size))
    for r, rho in [(6, 2), (4 / 3, 4), (2, 2), (3, 1.5)]:
        assert lorentz_norm(f, (r, rho)) == pytest.approx(
            lorentz_by_quadrature(f.values, UNIT.cell_volume, r, rho), rel=1e-6)


def test_lp_norm_of_one_against_probability_measure():
    m = Measure.from_atoms([[0.0, 0.0], [0.3, 0.1]], [0.25, 0.75])
    assert lp_norm_measure(lambda x: np.ones(len(x)), 3.7, m) == pytest.approx(1.0, rel=1e-15)


def test_lp_norm_of_distance_against_one_atom():
    m = Measure.from_atoms([[2.0, 0.0]], [3.0])
    val = lp_norm_measure(lambda x: np.linalg.norm(x, axis=1), 2.0, m)
    assert val == pytest.approx(math.sqrt(12.0), rel=1e-15)


def test_lp_norm_p1_is_grid_inner_product(rng):
    f = GridFunction(UNIT, rng.uniform(size=UNIT.size))
    w = GridFunction(UNIT, rng.uniform(size=UNIT.size))
    expected = float(np.sum(f.values * w.values)) * UNIT.cell_volume
    assert lp_norm_measure(f, 1.0, Measure.from_density(w)) == pytest.approx(expected, rel=1e-13)


def test_lp_norm_propagates_infinity():
    k = riesz_kernel(1.0, 2)
    m = Measure.from_atoms([[0.0, 0.0]], [1.0])
    field = potential_direct(k, m, [[0.0, 0.0], [1.0, 0.0]])
    assert lp_norm_measure(field, 2.0, m) == math.inf


def test_lp_norm_rejects_missing_atom():
    m = Measure.from_atoms([[0.33, 0.0]], [1.0])
    with pytest.raises(ValueError):
        lp_norm_measure(GridFunction.zeros(UNIT), 1.0, m)


values = st.lists(st.floats(0, 100), min_size=UNIT.size, max_size=UNIT.size)
pairs = st.sampled_from([(6, 2), (2, 2), (4 / 3, 4), (3, 1), (1.5, 6)])


@given(values, pairs, st.floats(0.01, 100))
def test_homogeneous(vals, pair, c):
    f = GridFunction(UNIT, vals)
    assert lorentz_norm(f.scaled(c), pair) == pytest.approx(c * lorentz_norm(f, pair), rel=1e-12)


@given(values, pairs, st.randoms(use_true_random=False))
def test_rearrangement_invariant(vals, pair, rnd):
    f = GridFunction(UNIT, vals)
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    assert lorentz_norm(GridFunction(UNIT, shuffled), pair) == lorentz_norm(f, pair)


@given(values, values, pairs)
def test_monotone(a, b, pair):
    small = np.minimum(np.abs(a), np.abs(b))
    assert lorentz_norm(GridFunction(UNIT, small), pair) <= lorentz_norm(GridFunction(UNIT, b), pair) * (1 + 1e-12)


@given(values, st.floats(1.0, 8.0), st.floats(0.5, 4.0), st.floats(1.01, 4.0))
def test_nesting_in_second_exponent(vals, r, rho1, factor):
    rho2 = rho1 * factor
    f = GridFunction(UNIT, vals)
    # sharp on indicators: ||.||_{r,inf} <= (rho/r)^{1/rho} ||.||_{r,rho}
    const = (rho1 / r) ** (1 / rho1 - 1 / rho2)
    assert lorentz_norm(f, (r, rho2)) <= const * lorentz_norm(f, (r, rho1)) * (1 + 1e-12)
    ind = indicator(UNIT, 37)
    ratio = lorentz_norm(ind, (r, rho2)) / lorentz_norm(ind, (r, rho1))
    expected = (r / rho2) ** (1 / rho2) / (r / rho1) ** (1 / rho1)
    assert ratio == pytest.approx(expected, rel=1e-12)
    assert ratio <= const * (1 + 1e-12)
