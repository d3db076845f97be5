"""Truncated scaled likelihood ratio, a distribution-free bounded e-variable.

``tslr_eps(x) = exp(-eps) + (1 - exp(-eps)) * min(1 + exp(eps), q(x)/p(x))``
takes values in [exp(-eps), exp(eps)] and needs no distribution-dependent
tuning. For small eps a larger level ``eps_star`` is used internally and the
result raised to the power ``eps / eps_star``.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .evariable import BoundedEVariable
from .errors import NoRootInBracket, QuadratureNonConvergence
from .numerics import golden_section_max
from .optimal import optimal_evariable

log = logging.getLogger(__name__)


def power_coefficient(eps_prime):
    """Per-unit-eps guarantee of tslr at level eps_prime, used to pick eps_star."""
    return (eps_prime - 1.0) * (1.0 - math.exp(-eps_prime)) / eps_prime / eps_prime


@lru_cache(maxsize=None)
def epsilon_star():
    """(eps_star, coefficient) maximizing :func:`power_coefficient` over eps' >= 1."""
    x, fx = golden_section_max(power_coefficient, 1.0, 20.0, xtol=1e-10)
    return x, fx


def tslr_values(lr, epsilon):
    lr = np.asarray(lr, dtype=float)
    shrink = -math.expm1(-epsilon)
    out = math.exp(-epsilon) + shrink * np.minimum(1.0 + math.exp(epsilon), lr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TslrStatistic:
    epsilon: float
    epsilon_prime: float

    @classmethod
    def for_epsilon(cls, epsilon):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        eps_star, _ = epsilon_star()
        return cls(epsilon, max(epsilon, eps_star))

    @property
    def exponent(self):
        return self.epsilon / self.epsilon_prime

    def __call__(self, lr):
        base = tslr_values(lr, self.epsilon_prime)
        if self.epsilon_prime == self.epsilon:
            return base
        return np.power(base, self.exponent)


def tslr(pair, epsilon, x):
    """tsLR at level eps for observation(s) x; log value lies in [-eps, eps]."""
    return tslr_values(pair.lr(x), epsilon)


def tslr_extended(pair, epsilon, x):
    """tsLR at max(eps, eps_star) raised to eps / eps_star when eps < eps_star."""
    return TslrStatistic.for_epsilon(epsilon)(pair.lr(x))


def tslr_evariable(pair, epsilon, extended=True):
    """tsLR (or its fractional-power extension) as a bounded e-variable.

    The certified range is [exp(-eps), exp(eps)], a log-range of 2 eps.
    """
    if extended:
        stat = TslrStatistic.for_epsilon(epsilon)
    else:
        stat = TslrStatistic(epsilon, epsilon)
    func = lambda x: stat(pair.lr(x))  # noqa: E731
    ev = BoundedEVariable(
        func=func, c_lo=math.exp(-epsilon), c_hi=math.exp(epsilon),
        label=f"tslr eps={epsilon:g}", pair=pair, breakpoints=_tslr_breaks(pair, stat),
    )
    return BoundedEVariable(
        func=func, c_lo=ev.c_lo, c_hi=ev.c_hi, mu=ev.alt_log_mean(),
        label=ev.label, pair=pair, breakpoints=ev.breakpoints,
    )


def _tslr_breaks(pair, stat):
    if pair.is_finite:
        return ()
    return tuple(pair.level_set(math.log1p(math.exp(stat.epsilon_prime))) or ())


STATISTICS = ("auto", "optimal", "tslr")


def select_evariable(pair, epsilon, statistic="auto", tslr_epsilon=None):
    """The e-variable named by ``statistic``.

    ``"auto"`` builds the optimal statistic and falls back to tsLR when its
    calibration cannot be solved (root not bracketed or quadrature failure).
    tsLR is built at ``tslr_epsilon`` (default ``epsilon``).
    Returns ``(evariable, name actually used)``.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    t_eps = epsilon if tslr_epsilon is None else tslr_epsilon
    if statistic == "tslr":
        return tslr_evariable(pair, t_eps), "tslr"
    try:
        return optimal_evariable(pair, epsilon), "optimal"
    except (NoRootInBracket, QuadratureNonConvergence) as exc:
        if statistic == "optimal":
            raise
        log.warning("optimal statistic unavailable (%s); using tsLR", exc)
        return tslr_evariable(pair, t_eps), "tslr"
