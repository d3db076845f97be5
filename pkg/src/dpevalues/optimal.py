"""The optimal clipped likelihood ratio and the private rate.

For a pair (P, Q) and privacy level eps, the clipping constants are
``c1 = exp(-eps/2 + lam - 1)`` and ``c2 = exp(eps/2 + lam - 1)`` where
``lam`` solves ``c1 P(A) + Q(M) + c2 P(B) = 1``. The e-variable
``E*(x) = min(c2, max(c1, q(x)/p(x)))`` has log-range exactly eps, satisfies
``E^P[E*] = 1``, and its e-power E^Q[log E*] is the best per-sample growth any
eps-DP e-value can achieve.
"""

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.special import xlogy

from .distributions import expect_under, region_summary
from .errors import NoRootInBracket
from .evariable import BoundedEVariable
from .numerics import bisect

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class OptimalConstruction:
    epsilon: float
    lambda_star: float
    c1: float
    c2: float
    mass_a_p: float
    mass_b_p: float
    mass_m_q: float
    mass_a_q: float
    mass_b_q: float
    kl_qtilde_p: float
    tv_qtilde_q: float
    rate: float
    residual: float
    degenerate: bool = False
    pair_label: str = ""

    def clip(self, lr):
        return np.clip(lr, self.c1, self.c2)

    def to_record(self):
        return asdict(self)

    @classmethod
    def from_record(cls, record):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in record.items() if k in names})

    def dumps(self):
        return json.dumps(self.to_record(), indent=2)

    @classmethod
    def loads(cls, text):
        return cls.from_record(json.loads(text))


def _c1(lam, eps):
    return math.exp(-eps / 2 + lam - 1)


def _c2(lam, eps):
    return math.exp(eps / 2 + lam - 1)


def calibration_gap(pair, eps, lam):
    """f(lam) - 1 with f(lam) = c1 P(A) + Q(M) + c2 P(B)."""
    c1, c2 = _c1(lam, eps), _c2(lam, eps)
    s = region_summary(pair, c1, c2)
    return c1 * s.p_a + s.q_m + c2 * s.p_b - 1.0


def _bracket(g, eps, max_expand=80):
    lo, hi, step = 1.0 - eps, 1.0 + eps, max(eps, 1.0)
    g_lo, g_hi = g(lo), g(hi)
    for _ in range(max_expand):
        if g_lo < 0:
            break
        lo -= step
        step *= 2
        g_lo = g(lo)
    step = max(eps, 1.0)
    for _ in range(max_expand):
        if g_hi >= 0:
            break
        hi += step
        step *= 2
        g_hi = g(hi)
    if not (g_lo < 0 <= g_hi):
        raise NoRootInBracket("calibration equation never crosses 1", g_lo + 1, g_hi + 1)
    return lo, hi


def _refine_finite(pair, eps, lam):
    # Inside a fixed region assignment f is explicit in lam, so solve it exactly.
    s = region_summary(pair, _c1(lam, eps), _c2(lam, eps))
    denom = math.exp(-eps / 2) * s.p_a + math.exp(eps / 2) * s.p_b
    if denom <= 0 or s.q_m >= 1:
        return lam
    cand = 1.0 + math.log((1.0 - s.q_m) / denom)
    s2 = region_summary(pair, _c1(cand, eps), _c2(cand, eps))
    same = (s2.p_a, s2.p_b, s2.q_m) == (s.p_a, s.p_b, s.q_m)
    if same and abs(calibration_gap(pair, eps, cand)) <= abs(calibration_gap(pair, eps, lam)):
        return cand
    return lam


def _degenerate(pair, eps):
    return OptimalConstruction(
        epsilon=eps, lambda_star=1.0, c1=_c1(1.0, eps), c2=_c2(1.0, eps),
        mass_a_p=0.0, mass_b_p=0.0, mass_m_q=1.0, mass_a_q=0.0, mass_b_q=0.0,
        kl_qtilde_p=0.0, tv_qtilde_q=0.0, rate=0.0, residual=0.0,
        degenerate=True, pair_label=pair.label,
    )


def _llr_breakpoints(pair, c1, c2):
    if pair.is_finite:
        return ()
    pts = (pair.level_set(math.log(c1)) or []) + (pair.level_set(math.log(c2)) or [])
    return tuple(sorted(pts))


def solve_lambda_star(pair, epsilon, tol=DEFAULT_TOL):
    """Solve the calibration equation and assemble the optimal construction.

    When P = Q the equation holds on a whole interval; the canonical
    ``lambda_star = 1`` is returned with ``degenerate=True``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    eps = float(epsilon)
    if pair.is_degenerate:
        return _degenerate(pair, eps)

    g = lambda lam: calibration_gap(pair, eps, lam)  # noqa: E731
    lo, hi = bisect(g, *_bracket(g, eps))
    lam = hi if abs(g(hi)) <= abs(g(lo)) else lo
    if pair.is_finite:
        lam = _refine_finite(pair, eps, lam)
    residual = g(lam)
    if abs(residual) > tol:
        raise NoRootInBracket(f"bisection stalled with |f - 1| = {abs(residual):.3g}", g(lo) + 1, g(hi) + 1)

    c1, c2 = _c1(lam, eps), _c2(lam, eps)
    s = region_summary(pair, c1, c2)
    kl = xlogy(c1 * s.p_a, c1) + xlogy(c2 * s.p_b, c2) + s.q_llr_m
    tv = 0.5 * ((c1 * s.p_a - s.q_a) + (s.q_b - c2 * s.p_b))
    breaks = _llr_breakpoints(pair, c1, c2)
    rate_value = expect_under(pair.alt, lambda x: np.log(np.clip(pair.lr(x), c1, c2)), breakpoints=breaks)
    return OptimalConstruction(
        epsilon=eps, lambda_star=lam, c1=c1, c2=c2,
        mass_a_p=s.p_a, mass_b_p=s.p_b, mass_m_q=s.q_m, mass_a_q=s.q_a, mass_b_q=s.q_b,
        kl_qtilde_p=float(kl), tv_qtilde_q=float(tv), rate=float(rate_value),
        residual=float(residual), pair_label=pair.label,
    )


def e_star(construction, pair, x):
    """The clipped likelihood ratio min(c2, max(c1, q(x)/p(x)))."""
    out = construction.clip(pair.lr(x))
    return float(out) if np.ndim(out) == 0 else out


def rate(pair, epsilon):
    """Per-sample optimal e-power under eps-DP, E^Q[log E*] in nats."""
    return solve_lambda_star(pair, epsilon).rate


def optimal_evariable(pair, epsilon, construction=None):
    """E* packaged as a bounded e-variable with certified range [c1, c2]."""
    con = construction or solve_lambda_star(pair, epsilon)
    return BoundedEVariable(
        func=lambda x: e_star(con, pair, x),
        c_lo=con.c1, c_hi=con.c2, mu=con.rate,
        label=f"optimal eps={con.epsilon:g}", pair=pair,
        breakpoints=_llr_breakpoints(pair, con.c1, con.c2),
    )


def bernoulli_dual_rate(p, q, epsilon, grid_size=10**6):
    """Grid minimum of KL(Bern(q')||Bern(p)) + eps |q' - q| over q' in [0, 1].

    For binary support the minimizing Q' is itself Bernoulli and TV reduces to
    |q' - q|, so this 1D grid is a complete, independent check of the rate.
    """
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    kl = xlogy(grid, grid / p) + xlogy(1 - grid, (1 - grid) / (1 - p))
    obj = kl + epsilon * np.abs(grid - q)
    i = int(np.argmin(obj))
    return float(obj[i]), float(grid[i])


def finite_dual_rate(pair, epsilon):
    """inf over Q' on the pair's support of KL(Q'||P) + eps TV(Q', Q).

    Uses the 1D grid for two atoms and a convex program otherwise.
    """
    if not pair.is_finite:
        raise ValueError("dual check needs finite support")
    if len(pair.support) == 2:
        return bernoulli_dual_rate(pair.p[1], pair.q[1], epsilon)[0]
    import cvxpy as cp

    x = cp.Variable(len(pair.support), nonneg=True)
    obj = cp.sum(cp.rel_entr(x, pair.p)) + epsilon * 0.5 * cp.norm1(x - pair.q)
    prob = cp.Problem(cp.Minimize(obj), [cp.sum(x) == 1])
    prob.solve()
    return float(prob.value)
