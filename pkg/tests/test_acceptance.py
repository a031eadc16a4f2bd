"""One test per acceptance criterion; each prints a PASS/FAIL line with timing."""

import contextlib
import math
import time

import mpmath as mp
import numpy as np
import pytest

from isoprofile.errors import GrowthConditionViolated
from isoprofile.model1d import (CustomDensity, GaussianDensity, PExponentialDensity,
                                conc_profile_1d, conc_profile_fn, gaussian_ratio_check,
                                iso_profile_halfline)
from isoprofile.oracle1d import oracle_vs_halfline
from isoprofile.profile_core import LOG2, ConcProfileSpec, MonotoneFn, Tail
from isoprofile.transfer import (convex_bound, iso_to_conc, semiconvex_bound,
                                 semiconvex_constants)

from monotone_gen import check_inverse_properties, random_monotone

# regression pins, frozen from the runs recorded in the decisions ledger
TRUTH_OVER_BOUND_MAX = {"gaussian": 2.64, "p=1": 1.81, "p=1.5": 2.21, "p=2": 2.64, "p=4": 4.65}
POWER_RATE_FLOOR = 0.575
LOGLOG_BAND = (0.45, 0.65)


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number, budget, label):
        start = time.perf_counter()
        status, detail = "FAIL", ""
        try:
            yield
            elapsed = time.perf_counter() - start
            status = "PASS" if elapsed < budget else "FAIL"
            detail = f"{elapsed:.2f}s (budget {budget}s)"
            assert elapsed < budget, f"criterion {number} took {elapsed:.2f}s"
        except AssertionError as exc:
            detail = detail or str(exc).splitlines()[0]
            raise
        finally:
            with capsys.disabled():
                print(f"\ncriterion {number}: {status} {label} {detail}")
    return run


def test_criterion_1_generalized_inverse(criterion):
    with criterion(1, 5.0, "generalized inverse properties"):
        rng = np.random.default_rng(20240601)
        failures = []
        for _ in range(200):
            failures += check_inverse_properties(random_monotone(rng), rng, points=100, tol=1e-10)
        assert failures == []


def test_criterion_2_gaussian_exactness(criterion):
    mp.mp.dps = 40
    with criterion(2, 5.0, "gaussian exactness"):
        g = GaussianDensity()
        for v in np.geomspace(1e-6, 0.5, 50):
            exact = float(mp.npdf(-mp.sqrt(2) * mp.erfinv(1 - 2 * mp.mpf(v))))
            assert iso_profile_halfline(g, v) == pytest.approx(exact, rel=1e-8)
        for r in np.linspace(0.0, 8.0, 41):
            exact = -float(mp.log(1 - mp.ncdf(r)))
            assert conc_profile_1d(g, r) == pytest.approx(exact, rel=1e-8)


def test_criterion_3_convex_soundness(criterion):
    with criterion(3, 30.0, "convex-case soundness"):
        models = {"gaussian": GaussianDensity(), "p=1": PExponentialDensity(1.0),
                  "p=1.5": PExponentialDensity(1.5), "p=2": PExponentialDensity(2.0),
                  "p=4": PExponentialDensity(4.0)}
        vs = np.geomspace(1e-6, 0.5, 50)
        for name, d in models.items():
            b = convex_bound(ConcProfileSpec(conc_profile_fn(d)), None, "weak")
            ratios = []
            for v in vs:
                bound, truth = b(v), iso_profile_halfline(d, v)
                assert 0 < bound <= truth, (name, v)
                ratios.append(truth / bound)
            assert max(ratios) <= TRUTH_OVER_BOUND_MAX[name], name


def test_criterion_4_power_rate_round_trip(criterion):
    with criterion(4, 30.0, "power-rate round trip"):
        vs = np.geomspace(1e-12, 0.25, 60)
        for p in (1.0, 2.0, 4.0, 8.0):
            spec = iso_to_conc(lambda y, p=p: y ** (1.0 - 1.0 / p))
            for r in np.linspace(0.0, 20.0, 81):
                exact = (r / p + LOG2 ** (1.0 / p)) ** p
                assert spec.alpha(r) == pytest.approx(exact, rel=1e-6)
            b = convex_bound(spec)
            for v in vs:
                assert b(v) >= POWER_RATE_FLOOR / p * v * math.log(1 / v) ** (1 - 1 / p)


def test_criterion_5_loglog_gap(criterion):
    with criterion(5, 10.0, "log-log gap for exponential concentration"):
        b = convex_bound(iso_to_conc(lambda y: y))
        lo, hi = LOGLOG_BAND
        for v in np.geomspace(1e-8, 1e-2, 60):
            ratio = b(v) * math.log(math.log(2 / v)) / (v * math.log(1 / v))
            assert lo <= ratio <= hi


def test_criterion_6_growth_necessity(criterion):
    with criterion(6, 5.0, "quadratic growth hypothesis"):
        for delta in (0.1, 0.3, 0.45, 0.499):
            for kappa in (0.5, 1.0, 4.0):
                alpha = MonotoneFn([(0.0, 0.0)], Tail.quadratic(delta, kappa))
                with pytest.raises(GrowthConditionViolated):
                    semiconvex_bound(ConcProfileSpec(alpha, kappa, delta, 0.0))
        alpha = MonotoneFn([(0.0, 0.0)], Tail.quadratic(1.0, 1.0))
        k = semiconvex_constants(ConcProfileSpec(alpha, 1.0, 1.0, 0.0))
        assert k.lambda0 == pytest.approx(1 / 256, rel=1e-12)
        assert k.c_delta0 == pytest.approx(math.e / (16 * math.e + 2) / 2, rel=1e-12)
        assert k.R0 == pytest.approx(math.sqrt(math.log(256)) + math.sqrt(math.log(4)), rel=1e-12)


def test_criterion_7_oracle_extremality(criterion):
    with criterion(7, 60.0, "oracle half-line extremality"):
        vs = np.linspace(0.05, 0.5, 9)
        for d in (GaussianDensity(), PExponentialDensity(1.0, 1.0)):
            rep = oracle_vs_halfline(d, vs, grid_size=4000, k=2)
            assert rep.extras["max_rel_discrepancy"] < 5e-3
            assert rep.extras["all_half_lines"]


def test_criterion_8_profile_monotonicity(criterion):
    with criterion(8, 5.0, "profile over mass non-increasing"):
        models = [GaussianDensity()] + [PExponentialDensity(p) for p in (1.0, 1.5, 2.0, 4.0, 8.0)]
        models += [CustomDensity(psi=lambda x: x ** 4 + 0.5 * x * x, label="quartic"),
                   CustomDensity(psi_table=[(-1.0, 2.0), (0.0, 0.0), (2.0, 1.0)], label="tent")]
        vs = np.unique(np.concatenate([np.geomspace(1e-8, 0.5, 100), np.linspace(0.01, 0.5, 100)]))
        for d in models:
            r = [iso_profile_halfline(d, v) / v for v in vs]
            assert all(a >= b * (1 - 1e-9) for a, b in zip(r, r[1:]))
            assert min(r) == pytest.approx(2 * iso_profile_halfline(d, 0.5), rel=1e-6)


def test_criterion_9_gaussian_ratio(criterion):
    with criterion(9, 5.0, "gaussian ratio constants"):
        c1, c2 = gaussian_ratio_check(np.geomspace(1e-12, 0.5, 400))
        assert math.isfinite(c1) and math.isfinite(c2) and c1 > 0
        assert c2 / c1 < 3
