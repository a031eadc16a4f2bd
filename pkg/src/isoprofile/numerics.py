"""Scalar quadrature and bracketing helpers shared by the profile modules."""

import math

_MAX_DEPTH = 60


def adaptive_simpson(f, a, b, tol=1e-10):
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    ``tol`` is an absolute tolerance for the whole panel; it is split in half
    at every bisection.
    """
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, _MAX_DEPTH)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol or m in (a, b):
        return left + right + delta / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def bisect_sup(pred, start=1.0, atol=1e-12, limit=1e300):
    """Return ``sup{r >= 0 : pred(r)}`` for a predicate that is true on an initial segment.

    The bracket is expanded by doubling from ``start``.  Returns ``math.inf``
    if ``pred`` still holds at ``limit`` and ``0.0`` if it fails at 0.
    The returned point is the right end of the final bracket, where ``pred``
    is false (so for a right-continuous non-decreasing ``f`` and
    ``pred = f(r) <= s`` we get ``f(result) >= s``).
    """
    if not pred(0.0):
        return 0.0
    lo, hi = 0.0, float(start)
    while pred(hi):
        lo = hi
        hi *= 2.0
        if hi > limit:
            return math.inf
    while hi - lo > max(atol, 4.0 * math.ulp(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return hi
