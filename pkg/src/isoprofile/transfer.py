"""Transfers between concentration and isoperimetric profiles.

Concentration to isoperimetry: a concentration lower bound ``alpha`` gives an
isoperimetric lower bound built from the rate ``gamma(x) = x / alpha^{-1}(x)``
(``convex_bound`` for the log-concave case, ``semiconvex_bound`` when the
curvature is bounded below by ``-kappa`` and alpha grows quadratically).

Isoperimetry to concentration: ``iso_to_conc`` integrates
``alpha^{-1}(x) = int_{log 2}^x dy / gamma(y)``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .numerics import adaptive_simpson
from .profile_core import (INF, LOG2, ConcProfileSpec, IsoProfile, MonotoneFn, Tail,
                           check_growth, gen_inverse)

LAMBDA_GRID_SIZE = 64
LAMBDA_GRID_MARGIN = 1e-4
SEMICONVEX_PREFACTOR = math.e / (16.0 * math.e + 2.0)


# ---------------------------------------------------------------------------
# scalar solver and small-set constants


def _solve_y_plus_log_y(t):
    """Vectorized Newton on z = log y for exp(z) + z = t.

    The map is convex and increasing and every start lies right of the root,
    so the iteration decreases monotonically and cannot overshoot.
    """
    t = np.asarray(t, dtype=float)
    z = np.where(t > 1.0, np.log(np.maximum(t, 1.0)), 0.0)
    for _ in range(200):
        ez = np.exp(z)
        step = (ez + z - t) / (ez + 1.0)
        z = z - step
        if np.all(np.abs(step) <= 1e-16 * np.maximum(1.0, np.abs(z))):
            break
    return np.exp(z)


def solve_y_plus_log_y(t) -> float:
    """The unique y > 0 with y + log(y) = t."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"target must be finite, got {t}")
    return float(_solve_y_plus_log_y(np.array([t]))[0])


def _small_set_ratio(log_delta):
    """b(delta)/log(1/delta) where b(delta) + log b(delta) = log(1/(2 delta) - 1)."""
    log_delta = np.asarray(log_delta, dtype=float)
    delta = np.exp(log_delta)
    t = np.log1p(-2.0 * delta) - np.log(2.0 * delta)
    return _solve_y_plus_log_y(t) / -log_delta


@lru_cache(maxsize=4096)
def small_set_constant(lam) -> float:
    """inf over delta in (0, lam] of b(delta)/log(1/delta).

    The infimum is taken on a log-spaced grid down to delta = 1e-300 (where the
    ratio is already within 1% of its limit 1) and refined by bounded scalar
    minimization around the best grid point; the grid is doubled until the
    result is stable to 1e-6 relative.
    """
    lam = float(lam)
    if not 0.0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    lo = math.log(1e-300)
    hi = math.log(lam)
    prev = None
    for n in (256, 512, 1024, 2048, 4096):
        grid = np.linspace(lo, hi, n)
        vals = _small_set_ratio(grid)
        i = int(np.argmin(vals))
        best = float(vals[i])
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
        res = minimize_scalar(lambda x: float(_small_set_ratio(x)), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
        if prev is not None and abs(best - prev) <= 1e-6 * abs(best):
            return best
        prev = best
    return prev


def lambda_grid():
    """Geometric grid of candidate lambda used by the sup-over-lambda mode."""
    return np.geomspace(LAMBDA_GRID_MARGIN, 0.5 - LAMBDA_GRID_MARGIN, LAMBDA_GRID_SIZE)


# ---------------------------------------------------------------------------
# concentration -> isoperimetry


def _check_v(v):
    if not 0.0 < v <= 0.5:
        raise ValueError(f"v must lie in (0, 1/2], got {v}")


def _rate_term(spec: ConcProfileSpec):
    def term(v):
        return v * spec.gamma(math.log(1.0 / v))
    return term


def convex_bound(spec: ConcProfileSpec, lam=None, variant="weak", first_term=None) -> IsoProfile:
    """Isoperimetric lower bound for a log-concave space from a concentration bound.

    For fixed ``lam`` the bound is ``c * min(v*gamma(log 1/v), cap)`` with
    ``c = small_set_constant(lam)`` and ``cap = lam*gamma(log 1/lam)``; the weak
    variant multiplies ``cap`` by ``lam/(1-lam)``.  With ``lam=None`` the
    pointwise maximum over :func:`lambda_grid` is returned.

    The strong variant additionally relies on concavity of the profile,
    which is not verified here; the weak variant is the default.
    """
    if spec.kappa != 0:
        raise ValueError("convex_bound needs kappa = 0; use semiconvex_bound for kappa > 0")
    if variant not in ("weak", "strong"):
        raise ValueError(f"variant must be 'weak' or 'strong', got {variant!r}")
    lams = lambda_grid() if lam is None else [float(lam)]
    g = first_term or _rate_term(spec)
    cs, caps = [], []
    for lm in lams:
        c = small_set_constant(lm)
        cap = lm * spec.gamma(math.log(1.0 / lm))
        if variant == "weak":
            cap *= lm / (1.0 - lm)
        cs.append(c)
        caps.append(c * cap)
    cs = np.array(cs)
    caps = np.array(caps)

    def fn(v):
        _check_v(v)
        gv = g(v)
        if gv == 0:
            return 0.0
        return float(np.max(np.minimum(cs * gv, caps)))

    tag = f"conc-to-iso:convex:{variant}:" + ("sup-lambda" if lam is None else f"lambda={float(lam):.17g}")
    return IsoProfile(fn, tag, convex_setting=True)


@dataclass(frozen=True)
class SemiconvexConstants:
    delta0: float
    alpha_r0: float
    lambda0: float
    c_delta0: float
    R0: float

    def to_json(self):
        return {k: ("inf" if v == INF else v) for k, v in self.__dict__.items()}


def semiconvex_constants(spec: ConcProfileSpec) -> SemiconvexConstants:
    """Constants of the three-term bound; checks the growth condition when kappa > 0."""
    if spec.kappa > 0:
        spec.check_growth()
    delta0 = INF if spec.delta0 is None else float(spec.delta0)
    if not delta0 > 0.5:
        raise ValueError(f"delta0 must exceed 1/2, got {delta0}")
    r0 = 0.0 if spec.r0 is None else float(spec.r0)
    alpha_r0 = spec.alpha(r0)
    if alpha_r0 == INF:
        raise ValueError("alpha(r0) is infinite; choose a smaller r0")
    shrink = 1.0 - 0.5 / delta0
    lambda0 = min(math.exp(-alpha_r0) if alpha_r0 > -700 else INF,
                  math.exp(-math.log(16.0) / shrink))
    c_delta0 = SEMICONVEX_PREFACTOR * shrink
    R0 = gen_inverse(spec.alpha, math.log(1.0 / lambda0)) + gen_inverse(spec.alpha, math.log(4.0))
    return SemiconvexConstants(delta0, alpha_r0, lambda0, c_delta0, R0)


def semiconvex_bound(spec: ConcProfileSpec, first_term=None) -> IsoProfile:
    """Three-term isoperimetric lower bound under curvature >= -kappa.

    ``min(c v gamma(log 1/v), c lambda0 gamma(log 1/lambda0), exp(-kappa R0^2/2)/(4 R0))``.
    Raises GrowthConditionViolated when kappa > 0 and alpha does not dominate
    ``delta0*kappa*r^2`` beyond r0.
    """
    k = semiconvex_constants(spec)
    g = first_term or _rate_term(spec)
    middle = k.c_delta0 * k.lambda0 * spec.gamma(math.log(1.0 / k.lambda0))
    if k.R0 == INF:
        far = 0.0
    elif k.R0 == 0:
        far = INF
    else:
        far = math.exp(-0.5 * spec.kappa * k.R0 * k.R0) / (4.0 * k.R0)

    def fn(v):
        _check_v(v)
        gv = g(v)
        first = 0.0 if gv == 0 else k.c_delta0 * gv
        return min(first, middle, far)

    return IsoProfile(fn, f"conc-to-iso:semiconvex:kappa={spec.kappa:.17g}",
                      convex_setting=spec.kappa == 0)


# ---------------------------------------------------------------------------
# integrability (shifted) concentration


@dataclass(frozen=True)
class ShiftedConcentration:
    """Concentration bound obtained from an integrability profile beta.

    ``alpha`` is 0 below ``R = beta^{-1}(log 2)`` and ``beta(r - R)`` above it.
    ``delta0``/``r0`` are the adjusted growth constants valid for alpha.
    """

    alpha: MonotoneFn
    R: float
    delta0: float | None
    r0: float | None
    offset_factor: float | None


def shifted_concentration(beta: MonotoneFn, kappa=0.0, delta0=None, r0=None) -> ShiftedConcentration:
    R = gen_inverse(beta, LOG2)
    if R == INF:
        raise ValueError("beta never exceeds log 2, so it carries no usable integrability")
    alpha = beta.shifted(R)
    if kappa == 0:
        return ShiftedConcentration(alpha, R, None, None, None)
    if delta0 is None or r0 is None:
        raise ValueError("delta0 and r0 are required when kappa > 0")
    check_growth(beta, kappa, delta0, r0)
    new_delta0 = 0.25 + 0.5 * delta0
    # smallest b with delta0*(r - R)^2 >= new_delta0*r^2 for r >= (1 + b) R
    q = math.sqrt(new_delta0 / delta0)
    b = q / (1.0 - q)
    new_r0 = max(r0, b * R) + R
    return ShiftedConcentration(alpha, R, new_delta0, new_r0, b)


def integrability_bound(beta: MonotoneFn, kappa=0.0, delta0=None, r0=None, form="inverse") -> IsoProfile:
    """Isoperimetric lower bound from an integrability profile beta.

    ``form="inverse"`` reports ``v log(1/v) / (2 beta^{-1}(log 1/v))`` in place of
    ``v gamma(log 1/v)`` (valid because alpha^{-1} <= 2 beta^{-1} above log 2);
    ``form="direct"`` keeps the rate of the shifted alpha.
    """
    sc = shifted_concentration(beta, kappa, delta0, r0)
    spec = ConcProfileSpec(sc.alpha, float(kappa), sc.delta0, sc.r0)
    if form == "inverse":
        def first_term(v):
            x = math.log(1.0 / v)
            inv = gen_inverse(beta, x)
            if inv == INF:
                return 0.0
            if inv == 0:
                return INF
            return v * x / (2.0 * inv)
    elif form == "direct":
        first_term = None
    else:
        raise ValueError(f"form must be 'inverse' or 'direct', got {form!r}")
    if kappa == 0:
        prof = convex_bound(spec, None, "weak", first_term)
    else:
        prof = semiconvex_bound(spec, first_term)
    return IsoProfile(prof.fn, f"integrability-to-iso:{form}:" + prof.provenance,
                      prof.convex_setting)


def linear_iso_bound(lam0, r0) -> float:
    """Lower bound on Ĩ(v)/v for a log-concave space whose sets of measure 1/2
    have r0-neighbourhoods of measure at least 1 - lam0."""
    lam0, r0 = float(lam0), float(r0)
    if not 0.0 < lam0 < 0.5:
        raise ValueError(f"lambda0 must lie in (0, 1/2), got {lam0}")
    if not (r0 > 0 and math.isfinite(r0)):
        raise ValueError(f"r0 must be positive and finite, got {r0}")
    k = 2.0 * small_set_constant(lam0) * (lam0 / (1.0 - lam0)) * lam0 * math.log(1.0 / lam0)
    return k / r0


# ---------------------------------------------------------------------------
# isoperimetry -> concentration


def gamma_from_iso(iso):
    """Rate y -> exp(y) * iso(exp(-y)) so that iso(v) = v * gamma(log 1/v)."""
    def gamma(y):
        return math.exp(y) * iso(math.exp(-y))
    return gamma


def iso_to_conc(gamma_fn, r_max=20.0, x_max=750.0, rtol=1e-7, panel_tol=1e-10,
                max_points=200000) -> ConcProfileSpec:
    """Concentration bound alpha with alpha^{-1}(x) = int_{log 2}^x dy / gamma(y).

    The integral is accumulated panel by panel with adaptive Simpson and the
    pairs (alpha^{-1}(x), x) are tabulated; panel widths adapt so that linear
    interpolation at each panel midpoint is accurate to ``rtol`` relative.
    Tabulation stops once both r >= r_max and x >= x_max; beyond the table the
    value is held constant, which keeps alpha a valid lower bound.
    """
    def recip(y):
        g = float(gamma_fn(y))
        if not g > 0:
            raise ValueError(f"gamma must be positive, got gamma({y}) = {g}")
        return 1.0 / g

    x, r = LOG2, 0.0
    pts = [(0.0, LOG2)]
    h = 0.05
    while (r < r_max or x < x_max) and len(pts) < max_points:
        half = 0.5 * h
        a1 = adaptive_simpson(recip, x, x + half, panel_tol)
        a2 = adaptive_simpson(recip, x + half, x + h, panel_tol)
        r_mid, r_end = r + a1, r + a1 + a2
        if r_end > r:
            x_lin = x + (r_mid - r) / (r_end - r) * h
        else:
            x_lin = x + half
        if abs(x_lin - (x + half)) <= rtol * (x + half) or h < 1e-9 * x:
            pts.append((r_mid, x + half))
            pts.append((r_end, x + h))
            x, r = x + h, r_end
            h *= 1.6
            if x + h > 1e300:
                break
        else:
            h *= 0.5
    alpha = MonotoneFn(pts, Tail.constant())
    return ConcProfileSpec(alpha)


# ---------------------------------------------------------------------------
# verification reports


def _fmt(x):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return format(x, ".17g")


@dataclass(frozen=True)
class BoundReport:
    """Pointwise comparison of a bound against a reference profile."""

    v: tuple
    bound: tuple
    truth: tuple
    ratio: tuple
    min_slack: float
    dominated: bool
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def rows(self):
        return list(zip(self.v, self.bound, self.truth, self.ratio))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("v,bound,truth,ratio\n")
        for row in self.rows:
            out.write(",".join(_fmt(x) for x in row) + "\n")
        out.write(f"minslack,{_fmt(self.min_slack)},dominated,{'true' if self.dominated else 'false'}\n")
        return out.getvalue()

    def to_json(self) -> str:
        def enc(x):
            return x if math.isfinite(x) else _fmt(x)
        d = {"rows": [{"v": enc(a), "bound": enc(b), "truth": enc(c), "ratio": enc(r)}
                      for a, b, c, r in self.rows],
             "minslack": enc(self.min_slack),
             "dominated": self.dominated}
        if self.extras:
            d["extras"] = self.extras
        return json.dumps(d, indent=2) + "\n"


def verify_bound(bound, truth, v_grid, extras=None) -> BoundReport:
    """Compare ``bound`` against ``truth`` on ``v_grid``; ratio is truth/bound."""
    vs, bs, ts, rs = [], [], [], []
    for v in v_grid:
        v = float(v)
        _check_v(v)
        t = float(truth(v))
        if not math.isfinite(t):
            raise ValueError(f"reference profile is not finite at v={v}: {t}")
        b = float(bound(v))
        vs.append(v)
        bs.append(b)
        ts.append(t)
        rs.append(INF if b == 0 else t / b)
    if not vs:
        raise ValueError("empty v grid")
    slack = min(t - b for b, t in zip(bs, ts))
    dominated = all(b <= t for b, t in zip(bs, ts))
    return BoundReport(tuple(vs), tuple(bs), tuple(ts), tuple(rs), slack, dominated,
                       dict(extras or {}))
