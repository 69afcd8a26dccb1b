import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublinear_riesz.core import BoxGrid, GridFunction, LorentzPair, Measure, ProblemSpec, restrict_to_ball, total_mass
from sublinear_riesz.kernels import riesz_kernel


def test_total_mass_of_zero_measure():
    assert total_mass(Measure.zero(2)) == 0.0


def test_total_mass_single_atom():
    assert total_mass(Measure.from_atoms([[0.0, 0.0]], [2.5])) == 2.5


def test_total_mass_uniform_density():
    g = BoxGrid((0.25, 0.25), 0.5, (4, 4))
    assert total_mass(Measure.from_density(GridFunction(g, np.ones(16)))) == pytest.approx(4.0, rel=1e-15)


def test_restrict_drops_far_atom():
    m = Measure.from_atoms([[2.0, 0.0]], [1.0])
    assert restrict_to_ball(m, [0, 0], 1.0).is_zero


def test_restrict_keeps_atom_at_center():
    m = Measure.from_atoms([[0.0, 0.0]], [1.0])
    out = restrict_to_ball(m, [0, 0], 1.0)
    assert total_mass(out) == 1.0
    np.testing.assert_array_equal(out.atom_locations, m.atom_locations)


def test_restrict_uniform_density_area():
    g = BoxGrid.cube(2, 1.0, 256)
    m = Measure.from_density(GridFunction(g, np.ones(g.size)))
    assert total_mass(restrict_to_ball(m, [0, 0], 0.5)) == pytest.approx(np.pi * 0.25, rel=5e-3)


def test_restrict_needs_positive_radius():
    with pytest.raises(ValueError):
        restrict_to_ball(Measure.zero(2), [0, 0], 0.0)


def test_grid_function_rejects_wrong_length():
    with pytest.raises(ValueError):
        GridFunction(BoxGrid.cube(2, 1.0, 4), np.ones(3))


def test_grid_locate_roundtrip():
    g = BoxGrid.cube(3, 1.0, 5)
    idx = np.array([0, 7, 124])
    np.testing.assert_array_equal(g.locate(g.centers()[idx]), idx)
    assert g.locate([[5.0, 5.0, 5.0]])[0] == -1


def test_measure_rejects_negative_mass():
    with pytest.raises(ValueError):
        Measure.from_atoms([[0.0, 0.0]], [-1.0])


def test_lorentz_pair_must_be_finite():
    with pytest.raises(ValueError):
        LorentzPair(float("inf"), 2.0)


def test_problem_rejects_q_outside_unit_interval():
    m = Measure.from_atoms([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError, match=r"q must lie in \(0,1\)"):
        ProblemSpec(riesz_kernel(1.0, 2), ((m, 1.5),), m, 1.0)


def test_problem_rejects_all_zero_data():
    z = Measure.zero(2)
    with pytest.raises(ValueError, match="must not all be zero"):
        ProblemSpec(riesz_kernel(1.0, 2), ((z, 0.5),), z, 1.0)


def test_problem_takes_grid_from_density():
    g = BoxGrid.cube(2, 1.0, 4)
    s = Measure.from_density(GridFunction(g, np.ones(16)))
    p = ProblemSpec(riesz_kernel(1.0, 2), ((s, 0.5),), Measure.zero(2), 1.0)
    assert p.grid == g


densities = st.lists(st.floats(0, 10, allow_nan=False), min_size=36, max_size=36)
grid6 = BoxGrid.cube(2, 1.0, 6)


@given(densities, st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 2))
def test_restriction_is_idempotent_and_nonnegative(vals, cx, cy, r):
    m = Measure(2, [[0.1, 0.2], [0.9, -0.4]], [1.0, 3.0], GridFunction(grid6, vals))
    once = restrict_to_ball(m, [cx, cy], r)
    twice = restrict_to_ball(once, [cx, cy], r)
    np.testing.assert_array_equal(once.density.values, twice.density.values)
    np.testing.assert_array_equal(once.atom_masses, twice.atom_masses)
    assert (once.density.values >= 0).all()
    assert total_mass(once) <= total_mass(m)


@given(densities, st.integers(1, 35))
def test_total_mass_additive_over_disjoint_supports(vals, cut):
    v = np.asarray(vals)
    a = np.where(np.arange(36) < cut, v, 0.0)
    b = np.where(np.arange(36) >= cut, v, 0.0)
    ma, mb = Measure.from_density(GridFunction(grid6, a)), Measure.from_density(GridFunction(grid6, b))
    assert total_mass(ma + mb) == pytest.approx(total_mass(ma) + total_mass(mb), rel=1e-12, abs=1e-300)
