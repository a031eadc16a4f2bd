"""Monotone extended-real functions, their generalized inverse and the rate transform.

A :class:`MonotoneFn` carries a concentration lower bound ``alpha`` (or any
other non-decreasing profile such as ``beta`` or an exact ``K``).  Values are
Python floats; ``math.inf`` is the explicit value ``+inf`` and is never
replaced by a large finite number.

The generalized inverse follows ``f^{-1}(s) = sup{r >= 0 : f(r) <= s}`` with
``sup of the empty set = 0``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .errors import GrowthConditionViolated
from .numerics import bisect_sup

INF = math.inf
LOG2 = math.log(2.0)

# decreases below this are treated as quadrature noise and clamped
_CLAMP_TOL = 1e-12


def to_ext(x) -> float:
    """Parse an extended real from JSON (``"inf"`` or a number)."""
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        raise ValueError(f"not an extended real: {x!r}")
    x = float(x)
    if math.isnan(x) or x == -INF:
        raise ValueError(f"not an extended real: {x!r}")
    return x


def from_ext(x: float):
    return "inf" if x == INF else float(x)


# ---------------------------------------------------------------------------
# tails


_TAIL_KINDS = ("constant", "linear", "power", "quadratic", "infinite")


@dataclass(frozen=True)
class Tail:
    """Behaviour of a tabulated function beyond its last breakpoint.

    ``linear`` continues from the last value with ``slope``; ``power`` and
    ``quadratic`` are absolute forms ``coef * (r - origin)**power`` and
    ``delta * kappa * (r - origin)**2``, floored at the last breakpoint value
    so monotonicity is preserved; ``infinite`` is ``+inf`` for ``r > r_last``.
    """

    kind: str = "constant"
    slope: float = 0.0
    coef: float = 0.0
    power: float = 2.0
    delta: float = 0.0
    kappa: float = 0.0
    origin: float = 0.0

    def __post_init__(self):
        if self.kind not in _TAIL_KINDS:
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.slope < 0 or self.coef < 0 or self.delta < 0 or self.kappa < 0:
            raise ValueError("tail parameters must be non-negative")
        if self.kind == "power" and not self.power > 0:
            raise ValueError("power tail needs power > 0")

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def linear(cls, slope):
        return cls("linear", slope=float(slope))

    @classmethod
    def powerlaw(cls, coef, power, origin=0.0):
        return cls("power", coef=float(coef), power=float(power), origin=float(origin))

    @classmethod
    def quadratic(cls, delta, kappa, origin=0.0):
        return cls("quadratic", delta=float(delta), kappa=float(kappa), origin=float(origin))

    @classmethod
    def infinite(cls):
        return cls("infinite")

    def _shape(self):
        if self.kind == "power":
            return self.coef, self.power
        return self.delta * self.kappa, 2.0

    def values(self, r, r_last, v_last):
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.full_like(r, v_last)
        if self.kind == "linear":
            return v_last + self.slope * (r - r_last)
        if self.kind == "infinite":
            return np.full_like(r, INF)
        c, p = self._shape()
        return np.maximum(v_last, c * np.maximum(r - self.origin, 0.0) ** p)

    def inverse(self, s, r_last, v_last):
        """sup{r >= r_last : tail(r) <= s}, assuming ``v_last <= s < inf``."""
        if self.kind == "constant":
            return INF
        if self.kind == "infinite":
            return r_last
        if self.kind == "linear":
            if self.slope == 0:
                return INF
            return r_last + (s - v_last) / self.slope
        c, p = self._shape()
        if c == 0:
            return INF
        if s <= 0:
            return r_last
        return max(r_last, self.origin + (s / c) ** (1.0 / p))

    def shifted(self, by):
        if self.kind in ("power", "quadratic"):
            return Tail(self.kind, self.slope, self.coef, self.power, self.delta,
                        self.kappa, self.origin + by)
        return self

    def to_json(self):
        d = {"kind": self.kind}
        if self.kind == "linear":
            d["slope"] = self.slope
        elif self.kind == "power":
            d.update(coef=self.coef, power=self.power, origin=self.origin)
        elif self.kind == "quadratic":
            d.update(delta=self.delta, kappa=self.kappa, origin=self.origin)
        return d

    @classmethod
    def from_json(cls, d):
        if d is None:
            return cls()
        d = dict(d)
        kind = d.pop("kind", "constant")
        unknown = set(d) - {"slope", "coef", "power", "delta", "kappa", "origin"}
        if unknown:
            raise ValueError(f"unknown tail keys: {sorted(unknown)}")
        return cls(kind, **{k: float(v) for k, v in d.items()})


# ---------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class ClosedForm:
    """Analytic evaluator, with an optional analytic generalized inverse.

    ``fn`` must accept numpy arrays.  ``inv`` is scalar and must follow the
    sup convention, including ``0`` below ``fn(0)`` and ``inf`` at ``inf``.
    """

    name: str
    params: tuple = ()
    fn: Callable = field(default=None, compare=False, repr=False)
    inv: Callable | None = field(default=None, compare=False, repr=False)

    def to_json(self):
        return {"closed_form": self.name, "closed_form_params": dict(self.params)}


_REGISTRY: dict[str, Callable[..., ClosedForm]] = {}


def register_closed_form(name):
    def deco(builder):
        _REGISTRY[name] = builder
        return builder
    return deco


def closed_form(name, **params) -> ClosedForm:
    """Build a registered closed form by name."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown closed form {name!r}; known: {sorted(_REGISTRY)}") from None
    return builder(**params)


def _guard_inv(inv, f0):
    def wrapped(s):
        if math.isnan(s):
            raise ValueError("cannot invert at NaN")
        if s == INF:
            return INF
        if s < f0:
            return 0.0
        return float(inv(s))
    return wrapped


@register_closed_form("identity")
def _identity():
    return ClosedForm("identity", (), lambda r: np.asarray(r, dtype=float) * 1.0,
                      _guard_inv(lambda s: s, 0.0))


@register_closed_form("power")
def _power(c=1.0, p=2.0):
    c, p = float(c), float(p)
    if not (c > 0 and p > 0):
        raise ValueError("power closed form needs c > 0 and p > 0")
    return ClosedForm("power", (("c", c), ("p", p)),
                      lambda r: c * np.asarray(r, dtype=float) ** p,
                      _guard_inv(lambda s: (s / c) ** (1.0 / p), 0.0))


@register_closed_form("constant")
def _constant(c=LOG2):
    c = float(c)

    def inv(s):
        if math.isnan(s):
            raise ValueError("cannot invert at NaN")
        return INF if s >= c else 0.0
    return ClosedForm("constant", (("c", c),),
                      lambda r: np.full_like(np.asarray(r, dtype=float), c), inv)


def _gauss_conc(r):
    return -special.log_ndtr(-np.asarray(r, dtype=float))


def _gauss_conc_inv(s):
    t = math.exp(-s)
    if t > 1e-300:
        return max(0.0, -float(special.ndtri(t)))
    return bisect_sup(lambda r: float(_gauss_conc(r)) <= s, start=30.0)


@register_closed_form("gaussian-conc")
def _gaussian_conc():
    return ClosedForm("gaussian-conc", (), _gauss_conc, _guard_inv(_gauss_conc_inv, LOG2))


@register_closed_form("power-conc")
def _power_conc(p=2.0):
    """(r/p + (log 2)**(1/p))**p, the concentration integrated from v*log(1/v)**(1-1/p)."""
    p = float(p)
    if not p >= 1:
        raise ValueError("power-conc needs p >= 1")
    base = LOG2 ** (1.0 / p)
    return ClosedForm("power-conc", (("p", p),),
                      lambda r: (np.asarray(r, dtype=float) / p + base) ** p,
                      _guard_inv(lambda s: p * (s ** (1.0 / p) - base), LOG2))


@register_closed_form("exp-conc")
def _exp_conc():
    """(log 2) * exp(r), the concentration integrated from v*log(1/v)."""
    def fn(r):
        with np.errstate(over="ignore"):
            return LOG2 * np.exp(np.asarray(r, dtype=float))
    return ClosedForm("exp-conc", (), fn,
                      _guard_inv(lambda s: math.log(s / LOG2), LOG2))


@register_closed_form("shifted")
def _shifted(shift, base):
    """Zero on [0, shift) and base(r - shift) afterwards."""
    shift = float(shift)
    if isinstance(base, dict):
        base = closed_form(base["closed_form"], **base.get("closed_form_params", {}))

    def fn(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < shift, 0.0, base.fn(np.maximum(r - shift, 0.0)))

    if base.inv is not None:
        def inv(s):
            if math.isnan(s):
                raise ValueError("cannot invert at NaN")
            if s < 0:
                return 0.0
            return base.inv(s) + shift
    else:
        inv = None
    return ClosedForm("shifted", (("shift", shift), ("base", base.to_json())), fn, inv)


# ---------------------------------------------------------------------------
# monotone functions


class MonotoneFn:
    """Non-decreasing function of r >= 0 with values in R and +inf.

    Breakpoints are (r, value) pairs with non-decreasing r; a repeated r encodes
    a jump, and the last value given at that r is the value there (so jumps are
    right-continuous).  Between breakpoints the function is linear; left of the
    first breakpoint it is constant; right of the last one ``tail`` applies.
    A ``closed_form``, when present, overrides evaluation and inversion and must
    agree with every breakpoint to 1e-12 relative.
    """

    __slots__ = ("_r", "_v", "_rl", "_vl", "tail", "closed_form")

    def __init__(self, breakpoints, tail: Tail | None = None, closed_form: ClosedForm | None = None):
        pts = [(float(r), to_ext(v)) for r, v in breakpoints]
        if not pts:
            raise ValueError("at least one breakpoint is required")
        rs = [p[0] for p in pts]
        vs = [p[1] for p in pts]
        for i, r in enumerate(rs):
            if not (r >= 0 and math.isfinite(r)):
                raise ValueError(f"breakpoint r must be finite and >= 0, got {r}")
            if i and r < rs[i - 1]:
                raise ValueError("breakpoint r values must be non-decreasing")
        for i in range(1, len(vs)):
            if vs[i] < vs[i - 1]:
                if vs[i - 1] == INF or vs[i - 1] - vs[i] > _CLAMP_TOL * max(1.0, abs(vs[i - 1])):
                    raise ValueError(
                        f"values decrease at r={rs[i]}: {vs[i - 1]} -> {vs[i]}")
                vs[i] = vs[i - 1]
        tail = tail or Tail()
        if tail.kind in ("power", "quadratic") and tail.origin > rs[-1]:
            raise ValueError("tail origin must not exceed the last breakpoint")
        self._rl = rs
        self._vl = vs
        self._r = np.array(rs)
        self._v = np.array(vs)
        self._r.setflags(write=False)
        self._v.setflags(write=False)
        self.tail = tail
        self.closed_form = closed_form
        if closed_form is not None:
            got = np.asarray(closed_form.fn(self._r), dtype=float)
            for i, (r, a, b) in enumerate(zip(rs, got, vs)):
                if a == b or (i + 1 < len(rs) and rs[i + 1] == r):
                    continue
                if not (math.isfinite(a) and math.isfinite(b)) or \
                        abs(a - b) > 1e-12 * max(1.0, abs(b)):
                    raise ValueError(
                        f"closed form {closed_form.name} disagrees with breakpoint at r={r}: {a} vs {b}")

    # -- construction helpers

    @classmethod
    def from_closed_form(cls, cf: ClosedForm, r_grid=None):
        if r_grid is None:
            r_grid = np.concatenate([np.linspace(0.0, 10.0, 201), np.geomspace(10.0, 1e4, 61)[1:]])
        r_grid = np.asarray(r_grid, dtype=float)
        vals = np.asarray(cf.fn(r_grid), dtype=float)
        return cls(list(zip(r_grid, vals)), Tail.constant(), cf)

    @classmethod
    def named(cls, name, **params):
        return cls.from_closed_form(closed_form(name, **params))

    @classmethod
    def identity(cls):
        return cls.named("identity")

    @classmethod
    def constant(cls, c):
        return cls([(0.0, c)], Tail.constant())

    # -- accessors

    @property
    def breakpoints(self):
        return list(zip(self._rl, self._vl))

    @property
    def r_last(self):
        return self._rl[-1]

    @property
    def v_last(self):
        return self._vl[-1]

    def __repr__(self):
        cf = f", closed_form={self.closed_form.name!r}" if self.closed_form else ""
        return f"MonotoneFn({len(self._rl)} breakpoints, tail={self.tail.kind!r}{cf})"

    # -- evaluation

    def __call__(self, r):
        if np.ndim(r) == 0:
            return self._eval_scalar(float(r))
        return self._eval_array(np.asarray(r, dtype=float))

    def _eval_scalar(self, r):
        if not r >= 0:
            raise ValueError(f"r must be >= 0, got {r}")
        if self.closed_form is not None:
            return float(self.closed_form.fn(r))
        rs, vs = self._rl, self._vl
        i = bisect_right(rs, r) - 1
        if i < 0:
            return vs[0]
        if i == len(rs) - 1:
            if r == rs[-1]:
                return vs[-1]
            return float(self.tail.values(r, rs[-1], vs[-1]))
        lo, hi = vs[i], vs[i + 1]
        if r == rs[i] or lo == hi:
            return lo
        if hi == INF:
            return INF
        w = (r - rs[i]) / (rs[i + 1] - rs[i])
        return lo + w * (hi - lo)

    def _eval_array(self, r):
        if np.any(~(r >= 0)):
            raise ValueError("r must be >= 0")
        if self.closed_form is not None:
            return np.asarray(self.closed_form.fn(r), dtype=float)
        rs, vs = self._r, self._v
        n = len(rs)
        idx = np.searchsorted(rs, r, side="right") - 1
        out = np.empty_like(r)
        left = idx < 0
        out[left] = vs[0]
        tail = idx == n - 1
        if np.any(tail):
            rt = r[tail]
            tv = self.tail.values(rt, rs[-1], vs[-1])
            out[tail] = np.where(rt == rs[-1], vs[-1], tv)
        mid = ~left & ~tail
        if np.any(mid):
            i = idx[mid]
            lo, hi = vs[i], vs[i + 1]
            w = (r[mid] - rs[i]) / (rs[i + 1] - rs[i])
            with np.errstate(invalid="ignore"):
                lin = lo + w * (hi - lo)
            out[mid] = np.where(np.isinf(hi), np.where(w > 0, INF, lo),
                                np.where(lo == hi, lo, lin))
        return out

    def inverse(self, s):
        return gen_inverse(self, s)

    # -- transformations

    def shifted(self, by):
        """Zero on [0, by) followed by self(r - by) (right-continuous at ``by``)."""
        by = float(by)
        if not (by >= 0 and math.isfinite(by)):
            raise ValueError("shift must be finite and >= 0")
        pts = [(0.0, 0.0)]
        pts.append((by, 0.0))
        v0 = self(0.0)
        if v0 < 0:
            raise ValueError("shifted() needs a non-negative function")
        pts.append((by, v0))
        for r, v in self.breakpoints:
            if r > 0:
                pts.append((r + by, v))
        cf = None
        if self.closed_form is not None:
            cf = closed_form("shifted", shift=by, base=self.closed_form)
        return MonotoneFn(pts, self.tail.shifted(by), cf)

    # -- serialization

    def to_json(self):
        d = {"breakpoints": [[r, from_ext(v)] for r, v in self.breakpoints],
             "tail": self.tail.to_json(),
             "closed_form": None}
        if self.closed_form is not None:
            d.update(self.closed_form.to_json())
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        unknown = set(d) - {"breakpoints", "tail", "closed_form", "closed_form_params"}
        if unknown:
            raise ValueError(f"unknown MonotoneFn keys: {sorted(unknown)}")
        cf = None
        if d.get("closed_form"):
            cf = closed_form(d["closed_form"], **(d.get("closed_form_params") or {}))
        bps = d.get("breakpoints")
        if not bps:
            if cf is None:
                raise ValueError("breakpoints are required without a closed form")
            return cls.from_closed_form(cf)
        return cls(bps, Tail.from_json(d.get("tail")), cf)


def gen_inverse(f: MonotoneFn, s) -> float:
    """``sup{r >= 0 : f(r) <= s}``; 0 when the set is empty, inf when f <= s everywhere.

    Piecewise-linear pieces are inverted exactly; on a flat piece at level
    ``s`` the right endpoint is returned.
    """
    s = float(s)
    if math.isnan(s):
        raise ValueError("cannot invert at NaN")
    if s == INF:
        return INF
    cf = f.closed_form
    if cf is not None:
        if cf.inv is not None:
            return float(cf.inv(s))
        return bisect_sup(lambda r: float(cf.fn(r)) <= s)
    rs, vs = f._rl, f._vl
    if s < vs[0]:
        return 0.0
    j = bisect_right(vs, s) - 1
    if j == len(vs) - 1:
        return f.tail.inverse(s, rs[-1], vs[-1])
    r0, v0, r1, v1 = rs[j], vs[j], rs[j + 1], vs[j + 1]
    if r1 == r0 or v1 == INF:
        return r0
    return r0 + (s - v0) / (v1 - v0) * (r1 - r0)


def gamma_transform(alpha: MonotoneFn, x) -> float:
    """x / alpha^{-1}(x): 0 when the inverse is infinite, inf when it is 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"x must be > 0, got {x}")
    inv = gen_inverse(alpha, x)
    if inv == INF:
        return 0.0
    if inv == 0:
        return INF
    return x / inv


# ---------------------------------------------------------------------------
# concentration specs and isoperimetric profiles


def check_growth(alpha: MonotoneFn, kappa, delta0, r0):
    """Raise GrowthConditionViolated unless alpha(r) >= delta0*kappa*r^2 for r >= r0.

    Checked on a dense grid above r0 and on a doubling sequence out to 1e150,
    which catches every tail that grows slower than the quadratic.
    """
    if kappa == 0:
        return
    if delta0 is None or not delta0 > 0.5:
        raise GrowthConditionViolated(
            f"growth condition needs delta0 > 1/2 when kappa > 0 (got delta0={delta0})")
    hi = max(10.0, 4.0 * (r0 + 1.0), 2.0 * alpha.r_last)
    dense = np.linspace(r0, hi, 4001)
    far = hi * 2.0 ** np.arange(1, 480)
    grid = np.concatenate([dense, far[far < 1e150]])
    vals = alpha(grid)
    target = delta0 * kappa * grid * grid
    bad = np.nonzero(vals < target * (1.0 - 1e-12))[0]
    if bad.size:
        r = grid[bad[0]]
        raise GrowthConditionViolated(
            f"growth condition fails: alpha(r) = {vals[bad[0]]:.6g} < "
            f"delta0*kappa*r^2 = {target[bad[0]]:.6g} at r = {r:.6g} "
            f"(delta0={delta0}, kappa={kappa}, r0={r0})")


@dataclass(frozen=True)
class ConcProfileSpec:
    """A concentration lower bound K >= alpha together with curvature data.

    ``delta0`` and ``r0`` describe the growth condition alpha(r) >=
    delta0*kappa*r^2 for r >= r0 and are required when ``kappa > 0``.
    """

    alpha: MonotoneFn
    kappa: float = 0.0
    delta0: float | None = None
    r0: float | None = None

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")
        if self.kappa > 0 and (self.delta0 is None or self.r0 is None):
            raise ValueError("delta0 and r0 are required when kappa > 0")
        if self.r0 is not None and not self.r0 >= 0:
            raise ValueError("r0 must be >= 0")

    @property
    def r_alpha(self):
        """alpha^{-1}(log 2): distances below it carry no concentration information."""
        return gen_inverse(self.alpha, LOG2)

    @property
    def trivially_concentrated(self):
        return self.r_alpha == INF

    def gamma(self, x):
        return gamma_transform(self.alpha, x)

    def check_growth(self):
        check_growth(self.alpha, self.kappa, self.delta0, self.r0 or 0.0)


@dataclass(frozen=True)
class IsoProfile:
    """A function of v in (0, 1/2] bounding (or equal to) the symmetrized profile."""

    fn: Callable[[float], float]
    provenance: str
    convex_setting: bool = False

    def __call__(self, v):
        if np.ndim(v) == 0:
            return float(self.fn(float(v)))
        return np.array([self.fn(float(x)) for x in np.ravel(v)]).reshape(np.shape(v))
