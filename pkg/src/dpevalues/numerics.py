"""Scalar root finding and 1D optimization."""

import math

from .errors import NoRootInBracket

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(f, lo, hi, *, xtol=0.0, max_iter=400):
    """Bisection for an increasing crossing of zero, f(lo) < 0 <= f(hi).

    Runs until the bracket stops shrinking in floating point (``xtol=0``)
    or its width drops below ``xtol``. Returns ``(lo, hi)``.
    """
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0.0 <= f_hi):
        raise NoRootInBracket("bracket does not straddle the root", f_lo, f_hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def golden_section_max(f, a, b, *, xtol=1e-10, max_iter=500):
    """Maximize a unimodal function on the open interval (a, b).

    The endpoints are never evaluated. Returns ``(x_best, f_best)``.
    """
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def golden_section_min(f, a, b, *, xtol=1e-10, max_iter=500):
    x, fx = golden_section_max(lambda t: -f(t), a, b, xtol=xtol, max_iter=max_iter)
    return x, -fx
