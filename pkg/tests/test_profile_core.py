import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from isoprofile.errors import GrowthConditionViolated
from isoprofile.profile_core import (INF, LOG2, ConcProfileSpec, MonotoneFn, Tail, closed_form,
                                     gamma_transform, gen_inverse)

from monotone_gen import KINDS, check_inverse_properties, random_monotone


def step_fn():
    # 0 on [0, 1), 3 on [1, inf)
    return MonotoneFn([(0.0, 0.0), (1.0, 0.0), (1.0, 3.0)])


# --- evaluation


def test_identity_eval():
    f = MonotoneFn([(0, 0), (10, 10)], Tail.linear(1.0))
    assert f(3.0) == 3.0
    assert f(12.5) == 12.5


def test_quadratic_tail_eval():
    f = MonotoneFn([(0, 0), (1, 2)], Tail.quadratic(1.0, 2.0))
    assert f(2.0) == 8.0


def test_gaussian_closed_form_at_zero():
    f = MonotoneFn.named("gaussian-conc")
    assert f(0.0) == pytest.approx(LOG2, rel=1e-15)


def test_vector_and_scalar_agree():
    rng = np.random.default_rng(3)
    for _ in range(30):
        f = random_monotone(rng)
        r = np.concatenate([rng.uniform(0, f.r_last + 3, 50), [p[0] for p in f.breakpoints]])
        vec = f(r)
        for x, y in zip(r, vec):
            assert f(float(x)) == pytest.approx(y, rel=1e-14)


def test_step_is_right_continuous():
    f = step_fn()
    assert f(1.0) == 3.0
    assert f(1.0 - 1e-12) == 0.0


def test_negative_r_rejected():
    with pytest.raises(ValueError):
        MonotoneFn.identity()(-1.0)


def test_validation_rejects_decrease_and_clamps_noise():
    with pytest.raises(ValueError):
        MonotoneFn([(0, 1.0), (1, 0.5)])
    f = MonotoneFn([(0, 1.0), (1, 1.0 - 1e-14), (2, 2.0)])
    assert f.breakpoints[1][1] == 1.0


def test_validation_rejects_decreasing_r():
    with pytest.raises(ValueError):
        MonotoneFn([(1, 0), (0, 1)])


def test_infinity_persists():
    with pytest.raises(ValueError):
        MonotoneFn([(0, 0), (1, "inf"), (2, 5)])


def test_closed_form_must_agree_with_breakpoints():
    cf = closed_form("identity")
    with pytest.raises(ValueError):
        MonotoneFn([(0, 0), (1, 1.1)], closed_form=cf)


# --- generalized inverse


def test_inverse_examples():
    assert MonotoneFn.identity().inverse(5.0) == 5.0
    const = MonotoneFn.constant(LOG2)
    assert const.inverse(LOG2) == INF
    assert const.inverse(0.1) == 0.0
    assert gen_inverse(step_fn(), 2.0) == 1.0


def test_inverse_flat_segment_takes_right_end():
    f = MonotoneFn([(0, 0), (1, 1), (3, 1), (4, 2)])
    assert f.inverse(1.0) == 3.0
    assert f.inverse(1.5) == 3.5


def test_inverse_below_start_is_zero():
    f = MonotoneFn([(2, 1.0), (3, 2.0)], Tail.linear(1.0))
    assert f.inverse(0.5) == 0.0
    assert f.inverse(1.0) == 2.0


def test_inverse_of_infinite_level():
    f = MonotoneFn([(0, 0), (1, 1), (1, "inf")])
    assert f.inverse(0.5) == 0.5
    assert f.inverse(10.0) == 1.0
    assert f.inverse(INF) == INF


def test_inverse_rejects_nan():
    with pytest.raises(ValueError):
        MonotoneFn.identity().inverse(float("nan"))


@pytest.mark.parametrize("name,params,fn", [
    ("power", {"c": 2.0, "p": 3.0}, lambda s: (s / 2.0) ** (1 / 3)),
    ("power-conc", {"p": 2.0}, lambda s: 2.0 * (math.sqrt(s) - math.sqrt(LOG2))),
    ("exp-conc", {}, lambda s: math.log(s / LOG2)),
    ("gaussian-conc", {}, lambda s: -special.ndtri(math.exp(-s))),
])
def test_closed_form_inverse_matches_bisection(name, params, fn):
    f = MonotoneFn.named(name, **params)
    tab = MonotoneFn(f.breakpoints, Tail.constant())
    for s in np.linspace(1.0, 30.0, 37):
        exact = fn(s)
        assert f.inverse(s) == pytest.approx(exact, rel=1e-10)
        if exact < tab.r_last:
            # the tabulated copy interpolates linearly, so it only agrees on the grid scale
            assert abs(tab.inverse(s) - exact) < 1e-2 * max(1.0, exact)


def test_inverse_without_closed_inverse_uses_bisection():
    base = closed_form("power", c=1.0, p=2.0)
    from isoprofile.profile_core import ClosedForm
    bare = ClosedForm("bare-square", (), base.fn, None)
    f = MonotoneFn([(0.0, 0.0), (2.0, 4.0)], closed_form=bare)
    for s in (0.5, 4.0, 17.0):
        assert f.inverse(s) == pytest.approx(math.sqrt(s), abs=1e-11)


def test_gaussian_inverse_deep_tail():
    f = MonotoneFn.named("gaussian-conc")
    for r in (10.0, 30.0, 40.0):
        assert f.inverse(f(r)) == pytest.approx(r, rel=1e-10)


@pytest.mark.parametrize("kind", KINDS)
def test_inverse_properties_each_kind(kind):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(20):
        f = random_monotone(rng, kind)
        assert check_inverse_properties(f, rng, points=40) == []


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_inverse_properties_hypothesis(seed):
    rng = np.random.default_rng(seed)
    f = random_monotone(rng)
    assert check_inverse_properties(f, rng, points=25) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_sampled_evaluation_non_decreasing(seed):
    rng = np.random.default_rng(seed)
    f = random_monotone(rng)
    r = np.linspace(0, f.r_last + 10, 2001)
    vals = f(r)
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_inverse_non_decreasing_in_level(seed):
    rng = np.random.default_rng(seed)
    f = random_monotone(rng)
    levels = np.sort(rng.uniform(-5, 40, 200))
    inv = [f.inverse(s) for s in levels]
    assert all(a <= b for a, b in zip(inv, inv[1:]))


# --- gamma transform


def test_gamma_examples():
    assert gamma_transform(MonotoneFn.identity(), 4.0) == 1.0
    assert gamma_transform(MonotoneFn.named("power", c=1.0, p=2.0), 9.0) == pytest.approx(3.0)
    assert gamma_transform(MonotoneFn.named("power-conc", p=1.0), LOG2) == INF


def test_gamma_is_zero_for_trivial_concentration():
    spec = ConcProfileSpec(MonotoneFn.constant(LOG2))
    assert spec.trivially_concentrated
    assert spec.gamma(2.0) == 0.0


def test_gamma_requires_positive_argument():
    with pytest.raises(ValueError):
        gamma_transform(MonotoneFn.identity(), 0.0)


# --- specs and growth


def test_spec_requires_constants_when_curved():
    with pytest.raises(ValueError):
        ConcProfileSpec(MonotoneFn.identity(), kappa=1.0)


def test_growth_check_passes_and_fails():
    quad = MonotoneFn([(0.0, 0.0)], Tail.quadratic(1.0, 1.0))
    ConcProfileSpec(quad, 1.0, 0.75, 0.0).check_growth()
    with pytest.raises(GrowthConditionViolated):
        ConcProfileSpec(quad, 1.0, 1.5, 0.0).check_growth()
    with pytest.raises(GrowthConditionViolated):
        ConcProfileSpec(quad, 1.0, 0.4, 0.0).check_growth()


def test_growth_check_catches_slow_tail_beyond_table():
    # quadratic on the table, linear afterwards
    pts = [(r, 0.8 * r * r) for r in np.linspace(0, 5, 11)]
    f = MonotoneFn(pts, Tail.linear(8.0))
    with pytest.raises(GrowthConditionViolated, match="growth condition"):
        ConcProfileSpec(f, 1.0, 0.75, 0.0).check_growth()


def test_growth_check_ignores_region_below_r0():
    f = MonotoneFn([(0.0, 0.0), (2.0, 0.0), (3.0, 9.0)], Tail.quadratic(1.0, 1.0))
    ConcProfileSpec(f, 1.0, 0.6, 3.0).check_growth()
    with pytest.raises(GrowthConditionViolated):
        ConcProfileSpec(f, 1.0, 0.6, 1.0).check_growth()


# --- serialization


def test_json_round_trip_tabulated():
    rng = np.random.default_rng(11)
    for _ in range(20):
        f = random_monotone(rng)
        g = MonotoneFn.from_json(json.loads(json.dumps(f.to_json())))
        r = np.linspace(0, f.r_last + 4, 301)
        assert np.array_equal(f(r), g(r))
        assert g.tail == f.tail


def test_json_round_trip_closed_form_and_inf_literal():
    f = MonotoneFn([(0, 0), (1, 1), (1, "inf")])
    d = f.to_json()
    assert d["breakpoints"][-1][1] == "inf"
    assert d["closed_form"] is None
    g = MonotoneFn.named("power-conc", p=3.0)
    h = MonotoneFn.from_json(json.loads(json.dumps(g.to_json())))
    assert h.closed_form.name == "power-conc"
    assert h(7.0) == g(7.0)


def test_json_rejects_unknown_keys():
    with pytest.raises(ValueError):
        MonotoneFn.from_json({"breakpoints": [[0, 0]], "color": "red"})


def test_shifted_construction():
    beta = MonotoneFn.identity()
    alpha = beta.shifted(LOG2)
    assert alpha(0.5) == 0.0
    assert alpha(LOG2) == 0.0
    assert alpha(LOG2 + 2.0) == pytest.approx(2.0)
    assert alpha.inverse(3.0) == pytest.approx(3.0 + LOG2)
    tab = MonotoneFn([(0, 0), (4, 4)], Tail.linear(1.0)).shifted(1.0)
    assert tab(0.999) == 0.0 and tab(3.0) == 2.0 and tab(10.0) == 9.0
