"""One-dimensional model measures exp(-psi(x)) dx and their exact profiles.

For log-concave densities on the line the sets of given measure with least
boundary are half-lines, so the symmetrized isoperimetric profile is the
density at the matching quantile and the concentration profile is the mass of
the worse tail beyond the median.
"""

from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .errors import LogConcavityRequired
from .numerics import adaptive_simpson, bisect_sup
from .profile_core import INF, ClosedForm, MonotoneFn, register_closed_form

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class Density1D:
    """Base class: a probability density exp(-psi) on an interval.

    Subclasses provide ``pdf``, ``cdf``, ``sf``, ``quantile`` and
    ``upper_quantile`` (the point with upper-tail mass ``w``); the log-tail
    methods fall back to plain logs.
    """

    family = "custom"
    kappa = 0.0
    support = (-INF, INF)
    symmetric = False

    def psi(self, x):
        with np.errstate(divide="ignore"):
            return -np.log(self.pdf(x))

    def log_cdf(self, x):
        with np.errstate(divide="ignore"):
            return float(np.log(self.cdf(x)))

    def log_sf(self, x):
        with np.errstate(divide="ignore"):
            return float(np.log(self.sf(x)))

    def median(self):
        return self.quantile(0.5)

    def is_log_concave(self):
        return True

    def to_json(self):
        raise NotImplementedError


class GaussianDensity(Density1D):
    """Standard Gaussian: psi(x) = x^2/2 + log sqrt(2 pi)."""

    family = "gaussian"
    symmetric = True

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-0.5 * x * x - _HALF_LOG_2PI)
        return float(out) if out.ndim == 0 else out

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x + _HALF_LOG_2PI

    def cdf(self, x):
        return float(special.ndtr(x))

    def sf(self, x):
        return float(special.ndtr(-x))

    def log_cdf(self, x):
        return float(special.log_ndtr(x))

    def log_sf(self, x):
        return float(special.log_ndtr(-x))

    def quantile(self, v):
        _check_prob(v)
        return float(special.ndtri(v))

    def upper_quantile(self, w):
        _check_prob(w)
        return -float(special.ndtri(w))

    def median(self):
        return 0.0

    def to_json(self):
        return {"family": "gaussian", "kappa": 0.0}


def default_scale(p):
    """Scale making exp(-|x/s|^p) a probability density: s = 1/(2 Gamma(1 + 1/p))."""
    return 1.0 / (2.0 * math.gamma(1.0 + 1.0 / p))


def _log_upper_gamma_ratio(a, z):
    """log of the regularized upper incomplete gamma Q(a, z), safe for large z."""
    q = special.gammaincc(a, z)
    if q > 1e-280:
        return math.log(q)
    # asymptotic series of Gamma(a, z) ~ z^(a-1) e^(-z) sum_k (a-1)...(a-k)/z^k
    term, total = 1.0, 1.0
    for k in range(1, 30):
        term *= (a - k) / z
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return (a - 1.0) * math.log(z) - z + math.log(total) - special.gammaln(a)


class PExponentialDensity(Density1D):
    """exp(-|x/s|^p) / Z with p >= 1.

    With the default scale ``s = 1/(2 Gamma(1 + 1/p))`` the normalizer Z is 1.
    """

    family = "p_exponential"
    symmetric = True

    def __init__(self, p, s_p=None):
        p = float(p)
        if not p >= 1:
            raise ValueError(f"p must be >= 1 for a log-concave p-exponential density, got {p}")
        self.p = p
        self.s_p = default_scale(p) if s_p is None else float(s_p)
        if not self.s_p > 0:
            raise ValueError("s_p must be positive")
        self.explicit_scale = s_p is not None
        self.log_norm = math.log(2.0 * self.s_p) + special.gammaln(1.0 + 1.0 / p)
        self._a = 1.0 / p

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        return np.abs(x / self.s_p) ** self.p + self.log_norm

    def pdf(self, x):
        out = np.exp(-self.psi(x))
        return float(out) if np.ndim(out) == 0 else out

    def sf(self, x):
        if x < 0:
            return 1.0 - self.sf(-x)
        return 0.5 * float(special.gammaincc(self._a, (x / self.s_p) ** self.p))

    def cdf(self, x):
        return self.sf(-x)

    def log_sf(self, x):
        if x <= 0:
            return math.log1p(-self.sf(-x))
        return math.log(0.5) + _log_upper_gamma_ratio(self._a, (x / self.s_p) ** self.p)

    def log_cdf(self, x):
        return self.log_sf(-x)

    def upper_quantile(self, w):
        _check_prob(w)
        if w > 0.5:
            return -self.upper_quantile(1.0 - w)
        return self.s_p * float(special.gammainccinv(self._a, 2.0 * w)) ** self._a

    def quantile(self, v):
        _check_prob(v)
        return -self.upper_quantile(v)

    def median(self):
        return 0.0

    def to_json(self):
        d = {"family": "p_exponential", "p": self.p, "kappa": 0.0}
        if self.explicit_scale:
            d["s_p"] = self.s_p
        return d


class CustomDensity(Density1D):
    """Density proportional to exp(-psi) with psi given as a callable or a table.

    ``psi_table`` is a list of (x, psi) pairs interpolated linearly, with the
    support equal to the table range.  A callable ``psi`` is integrated over
    ``support`` truncated where psi exceeds its minimum by 45 (tail mass far
    below 1e-14).  ``kappa`` is the declared semi-convexity: psi'' >= -kappa is
    checked by finite differences at construction.
    """

    family = "custom"

    def __init__(self, psi=None, psi_table=None, kappa=0.0, support=None, nodes=2048,
                 symmetric=False, label="custom"):
        if (psi is None) == (psi_table is None):
            raise ValueError("give exactly one of psi or psi_table")
        self.kappa = float(kappa)
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be finite and >= 0")
        self.symmetric = bool(symmetric)
        self.label = label
        self.table = None
        if psi_table is not None:
            tab = np.asarray(psi_table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or len(tab) < 2:
                raise ValueError("psi_table must be a list of at least two [x, psi] pairs")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("psi_table x values must be strictly increasing")
            if not np.all(np.isfinite(tab)):
                raise ValueError("psi_table entries must be finite")
            self.table = tab
            self._psi = lambda x: float(np.interp(x, tab[:, 0], tab[:, 1]))
            lo, hi = float(tab[0, 0]), float(tab[-1, 0])
            self.support = (lo, hi)
            base = tab[:, 0]
            per = max(1, nodes // (len(base) - 1))
            xs = np.unique(np.concatenate(
                [np.linspace(a, b, per + 1) for a, b in zip(base[:-1], base[1:])]))
        else:
            self._psi = lambda x: float(psi(x))
            lo, hi = support if support is not None else (-INF, INF)
            self.support = (float(lo), float(hi))
            lo, hi = self._truncate(lo, hi)
            xs = np.linspace(lo, hi, nodes + 1)
        self._shift = min(self._psi(x) for x in xs)
        self._build_table(xs)
        self._check_kappa()

    # -- construction

    def _truncate(self, lo, hi):
        probe = np.linspace(-50.0, 50.0, 2001)
        probe = probe[(probe >= lo) & (probe <= hi)] if math.isfinite(lo) or math.isfinite(hi) else probe
        if probe.size == 0:
            probe = np.linspace(lo, hi, 2001)
        vals = np.array([self._psi(x) for x in probe])
        floor = float(vals.min())
        x_min = float(probe[int(vals.argmin())])

        def reach(direction, limit):
            if math.isfinite(limit):
                return limit
            step = 1.0
            x = x_min
            while self._psi(x + direction * step) - floor < 45.0:
                step *= 2.0
                if step > 1e6:
                    raise ValueError("psi does not grow fast enough to normalize the density")
            return x_min + direction * step

        return reach(-1.0, lo), reach(1.0, hi)

    def _unnorm(self, x):
        return math.exp(-(self._psi(x) - self._shift))

    def _build_table(self, xs):
        cells = [adaptive_simpson(self._unnorm, a, b, 1e-15) for a, b in zip(xs[:-1], xs[1:])]
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        self._z = float(cum[-1])
        if not self._z > 0:
            raise ValueError("density has zero mass")
        self.log_norm = math.log(self._z) - self._shift
        self._x = xs
        self._xl = list(xs)
        self._F = cum / self._z
        self._F[-1] = 1.0
        self._Fl = list(self._F)

    def _check_kappa(self):
        lo, hi = self._x[0], self._x[-1]
        if self.table is not None:
            # psi'' is a sum of point masses at the kinks; a concave kink admits no finite kappa
            tab = self.table
            slopes = np.diff(tab[:, 1]) / np.diff(tab[:, 0])
            self._log_concave = bool(np.all(np.diff(slopes) >= -1e-8))
            return
        h = 1e-3 * max(1.0, (hi - lo) / 100.0)
        xs = np.linspace(lo + h, hi - h, 4001)
        vals = np.array([[self._psi(x - h), self._psi(x), self._psi(x + h)] for x in xs])
        second = (vals[:, 0] - 2 * vals[:, 1] + vals[:, 2]) / (h * h)
        slack = 1e-8 + 4e-16 * np.abs(vals).max(axis=1) / (h * h)
        if np.any(second < -self.kappa - slack):
            i = int(np.argmin(second + self.kappa + slack))
            raise ValueError(f"psi'' = {second[i]:.6g} < -kappa = {-self.kappa} at x = {xs[i]:.6g}")
        self._log_concave = bool(np.all(second >= -slack))

    # -- evaluation

    def is_log_concave(self):
        return self._log_concave

    def psi(self, x):
        if np.ndim(x):
            return np.array([self.psi(float(t)) for t in np.ravel(x)]).reshape(np.shape(x))
        if not self.support[0] <= x <= self.support[1]:
            return INF
        return self._psi(x) + self.log_norm

    def pdf(self, x):
        if np.ndim(x):
            return np.array([self.pdf(float(t)) for t in np.ravel(x)]).reshape(np.shape(x))
        return math.exp(-self.psi(x))

    def cdf(self, x):
        x = float(x)
        if x <= self._x[0]:
            return 0.0
        if x >= self._x[-1]:
            return 1.0
        i = bisect_right(self._xl, x) - 1
        part = adaptive_simpson(self._unnorm, self._xl[i], x, 1e-15) / self._z
        return min(1.0, self._Fl[i] + part)

    def sf(self, x):
        x = float(x)
        if x >= self._x[-1]:
            return 0.0
        if x <= self._x[0]:
            return 1.0
        i = bisect_right(self._xl, x)
        part = adaptive_simpson(self._unnorm, x, self._xl[i], 1e-15) / self._z
        return min(1.0, (1.0 - self._Fl[i]) + part)

    def quantile(self, v):
        _check_prob(v)
        i = max(0, min(len(self._Fl) - 2, bisect_right(self._Fl, v) - 1))
        a, b = self._xl[i], self._xl[i + 1]
        return brentq(lambda x: self.cdf(x) - v, a, b, xtol=1e-14, rtol=1e-15)

    def upper_quantile(self, w):
        _check_prob(w)
        if w >= 0.5:
            return self.quantile(1.0 - w)
        tails = [1.0 - f for f in self._Fl]
        # tails is non-increasing; find the cell where it crosses w
        j = bisect_right([-t for t in tails], -w)
        j = max(1, min(len(tails) - 1, j))
        a, b = self._xl[j - 1], self._xl[j]
        return brentq(lambda x: self.sf(x) - w, a, b, xtol=1e-14, rtol=1e-15)

    def to_json(self):
        if self.table is None:
            raise ValueError("only table-defined custom densities can be serialized")
        return {"family": "custom", "kappa": self.kappa, "psi_table": self.table.tolist()}


def oscillating_density(delta=0.3, kappa=1.0, amplitude=None):
    """psi(x) = delta*kappa*x^2 - b*cos(2x) with psi'' >= -kappa.

    The tails decay like exp(-delta*kappa*x^2), so for delta < 1/2 this is a
    semi-convex density whose concentration grows too slowly for the
    quadratic growth condition.  The default amplitude saturates
    psi'' >= -kappa.
    """
    b = kappa * (1.0 + 2.0 * delta) / 4.0 if amplitude is None else float(amplitude)
    if 4.0 * b > kappa * (1.0 + 2.0 * delta) + 1e-15:
        raise ValueError("amplitude too large for the declared kappa")
    dk = delta * kappa
    return CustomDensity(lambda x: dk * x * x - b * math.cos(2.0 * x), kappa=kappa,
                         symmetric=True, label=f"oscillating(delta={delta},kappa={kappa})")


def _check_prob(v):
    if not 0.0 < v < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {v}")


def _require_log_concave(d: Density1D):
    if d.kappa != 0 or not d.is_log_concave():
        raise LogConcavityRequired(
            "half-line extremality needs a log-concave density (kappa = 0 and psi convex); "
            "use the brute-force oracle instead")


# ---------------------------------------------------------------------------
# public operations


def cdf(d: Density1D, x) -> float:
    return d.cdf(float(x))


def quantile(d: Density1D, v) -> float:
    return d.quantile(float(v))


def iso_profile_halfline(d: Density1D, v) -> float:
    """Density at the boundary of the better half-line of mass v."""
    _require_log_concave(d)
    v = float(v)
    _check_prob(v)
    left = d.pdf(d.quantile(v))
    right = d.pdf(d.upper_quantile(v))
    return float(min(left, right))


def conc_profile_1d(d: Density1D, r) -> float:
    """-log max(1 - F(m + r), F(m - r)) with m the median; inf when both tails vanish."""
    _require_log_concave(d)
    r = float(r)
    if not r >= 0:
        raise ValueError(f"r must be >= 0, got {r}")
    m = d.median()
    worst = max(d.log_sf(m + r), d.log_cdf(m - r))
    return INF if worst == -INF else -worst


def conc_profile_fn(d: Density1D) -> MonotoneFn:
    """The exact concentration profile of ``d`` as a MonotoneFn with a closed form."""
    _require_log_concave(d)
    if isinstance(d, GaussianDensity):
        return MonotoneFn.named("gaussian-conc")
    return MonotoneFn.from_closed_form(_density_conc_form(d))


def _density_conc_form(d: Density1D) -> ClosedForm:
    m = d.median()

    def fn(r):
        r = np.asarray(r, dtype=float)
        out = np.array([conc_profile_1d(d, float(t)) for t in np.ravel(r)])
        return out.reshape(r.shape) if r.ndim else float(out[0])

    def inv(s):
        if math.isnan(s):
            raise ValueError("cannot invert at NaN")
        if s == INF:
            return INF
        if s < math.log(2.0):
            return 0.0
        w = math.exp(-s)
        lo, hi = d.support
        if w > 1e-300:
            upper = d.upper_quantile(w) - m
            lower = m - d.quantile(w)
            if upper < hi - m and lower < m - lo:
                return max(upper, lower, 0.0)
        return bisect_sup(lambda r: conc_profile_1d(d, r) <= s, start=1.0)

    params = d.to_json() if not isinstance(d, CustomDensity) or d.table is not None else {}
    return ClosedForm("density-conc", tuple(sorted(params.items())), fn, inv)


@register_closed_form("density-conc")
def _density_conc(**params):
    return _density_conc_form(density_from_json(params))


def gaussian_ratio_check(v_grid):
    """min and max over the grid of phi(Phi^{-1}(v)) / (v sqrt(log 1/v))."""
    vs = np.asarray(list(v_grid), dtype=float)
    if vs.size == 0:
        raise ValueError("empty v grid")
    if np.any(~((vs > 0) & (vs <= 0.5))):
        raise ValueError("v grid must lie in (0, 1/2]")
    g = GaussianDensity()
    ratios = np.array([iso_profile_halfline(g, v) / (v * math.sqrt(math.log(1.0 / v))) for v in vs])
    return float(ratios.min()), float(ratios.max())


def density_from_json(d) -> Density1D:
    d = dict(d)
    unknown = set(d) - {"family", "p", "s_p", "kappa", "psi_table"}
    if unknown:
        raise ValueError(f"unknown density keys: {sorted(unknown)}")
    family = d.get("family")
    if family == "gaussian":
        if float(d.get("kappa", 0.0)) != 0:
            raise ValueError("the gaussian family has kappa = 0")
        return GaussianDensity()
    if family == "p_exponential":
        if "p" not in d:
            raise ValueError("p_exponential needs p")
        if float(d.get("kappa", 0.0)) != 0:
            raise ValueError("the p_exponential family has kappa = 0")
        return PExponentialDensity(d["p"], d.get("s_p"))
    if family == "custom":
        if "psi_table" not in d:
            raise ValueError("custom densities in JSON need psi_table")
        return CustomDensity(psi_table=d["psi_table"], kappa=float(d.get("kappa", 0.0)))
    raise ValueError(f"unknown density family {family!r}")
