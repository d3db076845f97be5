"""Private batch e-values from a bounded e-variable.

The released statistic is

    sum_t log(1 - lam + lam E(x_t)) + Z - log E[exp(Z)],   Z ~ Laplace(b),

with ``b = R_lam / eps`` where ``R_lam`` is the worst-case change of the sum
when one observation is replaced. Mixing with weight ``lam < 1`` shrinks the
sensitivity below eps so that ``b < 1`` and the Laplace MGF compensator
``-log(1 - b^2)`` is finite.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleNoise, NonpositivePower, RangeViolation
from .evariable import RANGE_RTOL
from .numerics import bisect, golden_section_max
from .rng import laplace_from_uniform

S_FLOOR = 1e-15


def _log_ratio_gap(s, c_lo, c_hi):
    """log(c_hi / c_lo) - R at mixing weight 1 - s, without cancellation."""
    return math.log1p(s * (c_hi - c_lo) / (c_lo * (s + (1.0 - s) * c_hi)))


def mixture_sensitivity(lam, c_lo, c_hi):
    """R_lam = log((1 - lam + lam c_hi) / (1 - lam + lam c_lo))."""
    return math.log1p(lam * (c_hi - 1.0)) - math.log1p(lam * (c_lo - 1.0))


@dataclass(frozen=True)
class NoiseCalibration:
    lam: float
    sensitivity: float
    b: float
    compensator: float
    epsilon: float
    c_lo: float
    c_hi: float
    n: int
    mu: float
    objective: float
    mode: str = "bound"

    @property
    def near_noiseless(self):
        """Very large eps drives b toward 0; flagged in reports."""
        return self.b < 1e-3


@dataclass(frozen=True)
class PrivateBatchRelease:
    log_evalue: float
    n: int
    calibration: NoiseCalibration
    seed: Optional[int]
    statistic: float
    noise: float

    @property
    def evalue(self):
        return math.exp(self.log_evalue)


def mixed_log_statistic(evar_values, lam, c_lo=None, c_hi=None):
    """sum log(1 - lam + lam E(x_t)); values are checked against [c_lo, c_hi]."""
    if not 0 < lam < 1:
        raise ValueError("mixing weight must lie in (0, 1)")
    vals = np.asarray(evar_values, dtype=float)
    if c_lo is not None and c_hi is not None:
        bad = (vals < c_lo * (1 - RANGE_RTOL)) | (vals > c_hi * (1 + RANGE_RTOL)) | np.isnan(vals)
        if np.any(bad):
            raise RangeViolation(f"values {vals[bad][:5].tolist()} outside [{c_lo}, {c_hi}]")
    return float(np.sum(np.log1p(lam * (vals - 1.0))))


def calibrate(c_lo, c_hi, epsilon, n, mu, *, log_mixture_mean=None, xtol=1e-10):
    """Choose the mixing weight and Laplace scale for an n-point release.

    Maximizes the e-power lower bound ``lam n mu + log(1 - b^2)`` (or, with
    ``log_mixture_mean``, the exact ``n E^Q[log(1 - lam + lam E)] +
    log(1 - b^2)``) over weights whose sensitivity stays below eps. The
    search runs in ``s = 1 - lam`` since the optimum sits near ``s ~ 1/(n mu)``.
    """
    if not c_hi > c_lo > 0:
        raise ValueError("need c_hi > c_lo > 0")
    if not epsilon > 0 or n < 1:
        raise ValueError("need epsilon > 0 and n >= 1")
    if mu is None or not mu > 0:
        raise NonpositivePower(f"per-sample e-power must be positive, got {mu!r}")
    eps = float(epsilon)
    excess = eps - (math.log(c_hi) - math.log(c_lo))

    def gap(s):
        return excess + _log_ratio_gap(s, c_lo, c_hi)

    if excess >= 0:
        s_min = 0.0
    else:
        if gap(1.0) <= 0:
            raise InfeasibleNoise("no mixing weight in (0, 1) gives Laplace scale below 1")
        _, s_min = bisect(gap, 0.0, 1.0)

    if log_mixture_mean is None:
        power = lambda lam: n * lam * mu  # noqa: E731
        mode = "bound"
    else:
        power = lambda lam: n * log_mixture_mean(lam)  # noqa: E731
        mode = "exact"

    def objective_s(s):
        g = gap(s) / eps
        if g <= 0:
            return -math.inf
        return power(1.0 - s) + math.log(g) + math.log(2.0 - g)

    span = 1.0 - s_min
    lo_u = math.log(max(S_FLOOR, S_FLOOR * span))
    u, best = golden_section_max(lambda u: objective_s(s_min + math.exp(u)), lo_u, math.log(span), xtol=xtol)
    s = s_min + math.exp(u)
    lam = 1.0 - s
    g = gap(s) / eps
    b = 1.0 - g
    return NoiseCalibration(
        lam=lam, sensitivity=eps * b, b=b,
        compensator=-(math.log(g) + math.log(2.0 - g)),
        epsilon=eps, c_lo=c_lo, c_hi=c_hi, n=int(n), mu=float(mu),
        objective=best, mode=mode,
    )


def calibrate_for(evar, epsilon, n, mode="auto"):
    """Calibrate for a BoundedEVariable; exact mode by default on finite support."""
    exact = mode == "exact" or (mode == "auto" and evar.pair is not None and evar.pair.is_finite)
    return calibrate(
        evar.c_lo, evar.c_hi, epsilon, n, evar.mu,
        log_mixture_mean=evar.log_mixture_mean if exact else None,
    )


def release(evar, data, epsilon, seed=None, *, calibration=None, noise=True):
    """eps-DP batch e-value for ``data``.

    ``noise=False`` is a testing hook: it drops the Laplace draw but keeps the
    compensator, so ``log_evalue = Lambda_n - compensator``.
    """
    data = np.asarray(data)
    cal = calibration or calibrate_for(evar, epsilon, len(data))
    stat = mixed_log_statistic(evar.check_range(evar(data)), cal.lam)
    if noise:
        rng = np.random.default_rng(seed)
        z = laplace_from_uniform(rng.random(), cal.b)
    else:
        z = 0.0
    return PrivateBatchRelease(
        log_evalue=stat + z - cal.compensator, n=len(data), calibration=cal,
        seed=seed, statistic=stat, noise=z,
    )


def exact_null_mean(evar, calibration):
    """E^P[exp(released statistic)] computed without sampling.

    Factorizes as (1 - lam + lam E^P[E])^n * E[e^Z] * exp(-compensator), and the
    last two factors cancel.
    """
    lam = calibration.lam
    per_point = 1.0 - lam + lam * evar.null_mean()
    return per_point ** calibration.n


def symmetric_calibration_oracle(epsilon, n, mu):
    """Closed-form weight for the symmetric range [e^-eps, e^eps].

    Bounds the sensitivity by its tangent at lam = 1/2 and solves the
    resulting first-order condition. Returns ``(lam, objective_lower_bound)``;
    used only to cross-check :func:`calibrate`.
    """
    C = 4.0 * math.tanh(epsilon / 2.0) / epsilon
    B = n * mu
    s = (C - math.sqrt(C * C + B * B) + B) / (C * B)
    lam = 0.5 - s
    b = 1.0 - C * s
    return lam, lam * B + math.log1p(-b * b)
