import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoprofile.errors import InfeasibleMass, LogConcavityRequired
from isoprofile.model1d import (CustomDensity, GaussianDensity, PExponentialDensity,
                                iso_profile_halfline, oscillating_density)
from isoprofile.oracle1d import GridMeasure, IntervalUnion, brute_force_iso, oracle_vs_halfline


@pytest.fixture(scope="module")
def gauss_grid():
    return GridMeasure.from_density(GaussianDensity(), 2000, -8.0, 8.0, spacing="uniform")


@pytest.fixture(scope="module")
def gauss_mixed():
    return GridMeasure.from_density(GaussianDensity(), 3000)


@pytest.fixture(scope="module")
def expo_grid():
    return GridMeasure.from_density(PExponentialDensity(1.0, 1.0), 3000)


def test_gaussian_half_mass(gauss_grid):
    res = brute_force_iso(gauss_grid, 0.5, k=1)
    assert res.value == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-3)
    assert res.witness.is_half_line


def test_exponential_quarter(expo_grid):
    res = brute_force_iso(expo_grid, 0.25, k=2)
    assert res.value == pytest.approx(0.25, rel=1e-3)
    assert res.witness.is_half_line


@pytest.mark.parametrize("v", [0.0, 1.0, -0.1, 1.5])
def test_mass_out_of_range(gauss_grid, v):
    with pytest.raises(InfeasibleMass):
        brute_force_iso(gauss_grid, v)


def test_k_range(gauss_grid):
    with pytest.raises(ValueError):
        brute_force_iso(gauss_grid, 0.3, k=5)


def test_coarse_grid_is_infeasible():
    m = GridMeasure.from_values([0.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    with pytest.raises(InfeasibleMass, match="refine"):
        brute_force_iso(m, 0.3, mass_tol=1e-3)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridMeasure.from_values([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        GridMeasure.from_values([0.0, 2.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        GridMeasure.from_values([0.0, 1.0, 2.0], [1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        GridMeasure.from_density(GaussianDensity(), 100, spacing="random")


def test_mixed_grid_caps_cell_mass():
    m = GridMeasure.from_density(PExponentialDensity(1.0), 2000)
    assert m.cell_mass.max() <= 2.0 / 2000 * 1.01
    assert m.mass[0] == 0.0 and m.mass[-1] == 1.0


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.02, max_value=0.98))
def test_complement_symmetry(gauss_mixed, v):
    # the complement of a half-line is a half-line with the same boundary
    a = brute_force_iso(gauss_mixed, v, k=2).value
    b = brute_force_iso(gauss_mixed, 1.0 - v, k=2).value
    assert a == pytest.approx(b, rel=2e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.02, max_value=0.98))
def test_oracle_matches_halfline_within_grid_error(gauss_mixed, v):
    # half-lines are admissible and extremal, so the oracle sits on them up to grid error
    res = brute_force_iso(gauss_mixed, v, k=2)
    exact = iso_profile_halfline(GaussianDensity(), v)
    assert exact * (1 - 2e-3) <= res.value <= exact * (1 + 2e-3)
    assert res.witness.is_half_line


def test_refinement_shrinks_discrepancy():
    d = GaussianDensity()
    vs = [0.05, 0.2, 0.4]
    coarse = oracle_vs_halfline(d, vs, grid_size=600, mass_tol=4e-3).extras["max_rel_discrepancy"]
    fine = oracle_vs_halfline(d, vs, grid_size=4000).extras["max_rel_discrepancy"]
    assert fine < coarse


def test_three_intervals_run(gauss_mixed):
    one = brute_force_iso(gauss_mixed, 0.3, k=1)
    three = brute_force_iso(gauss_mixed, 0.3, k=3)
    assert three.value <= one.value
    assert three.value == pytest.approx(one.value, rel=1e-3)
    assert three.witness.is_half_line


def test_bimodal_grid_prefers_valley_cut():
    # two separated bumps: cutting through the valley beats any half-line through a bump
    x = np.linspace(-10.0, 10.0, 4001)
    rho = np.exp(-0.5 * (x - 5) ** 2) + np.exp(-0.5 * (x + 5) ** 2)
    m = GridMeasure.from_values(x, rho)
    res = brute_force_iso(m, 0.5, k=2)
    assert res.witness.is_half_line
    assert abs(res.witness.intervals[0][1] if res.witness.intervals[0][0] == -math.inf
               else res.witness.intervals[0][0]) < 0.05
    assert res.value < 1e-4


def test_oracle_vs_halfline_report():
    rep = oracle_vs_halfline(GaussianDensity(), [0.1, 0.3], grid_size=2000)
    assert rep.extras["all_half_lines"]
    assert rep.extras["max_rel_discrepancy"] < 1e-3
    assert len(rep.extras["witnesses"]) == 2
    json.loads(rep.to_json())


def test_oracle_requires_log_concavity_for_halfline_comparison():
    with pytest.raises(LogConcavityRequired):
        oracle_vs_halfline(oscillating_density(), [0.3])


def test_oracle_runs_on_non_log_concave_grid():
    d = oscillating_density()
    m = GridMeasure.from_density(d, 3000)
    res = brute_force_iso(m, 0.3, k=2)
    assert res.value > 0


def test_custom_table_density():
    d = CustomDensity(psi_table=[(-3.0, 3.0), (0.0, 0.0), (3.0, 3.0)])
    rep = oracle_vs_halfline(d, [0.1, 0.25, 0.45], grid_size=3000)
    assert rep.extras["max_rel_discrepancy"] < 2e-3


def test_interval_union_json():
    w = IntervalUnion(((-math.inf, 0.5),))
    assert w.is_half_line
    assert w.to_json() == [["-inf", 0.5]]
    assert not IntervalUnion(((-math.inf, 0.0), (1.0, math.inf))).is_half_line
