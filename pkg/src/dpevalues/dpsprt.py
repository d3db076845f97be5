"""Subsampled, noisy-boundary SPRT used as the comparison baseline.

Each arriving point enters the log-likelihood-ratio sum L_t with probability
``r``. Crossing of the upper and lower boundaries is detected with two
AboveThreshold instances, one per side, each spending half of the inner
budget. The inner budget is the one that subsampling at rate ``r`` amplifies
back to the target epsilon.

To keep the error rates at their nominal levels despite the noise, a noisy
check must also clear a margin. The margin covers the threshold noise at
level delta/2 and the query noise at level delta/(2 t (t+1)) by a union
bound. A further ``log(2 / (1 - beta))`` makes the noise-free part of the
test spend only half of alpha (and symmetrically for the lower side).
With noise disabled the margins vanish and the procedure is the classical
SPRT on the subsampled stream.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UnboundedLLR
from .rng import as_stream, derive_seed, laplace_from_uniform
from .sequential import SequentialResult

CHUNK = 4096


@dataclass(frozen=True)
class DpSprtConfig:
    epsilon: float
    alpha: float
    beta: float
    subsample_rate: float = 1.0
    clip: Optional[float] = None
    noise: bool = True

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("alpha and beta must lie in (0, 1)")
        if not 0 < self.subsample_rate <= 1:
            raise ValueError("subsample rate must lie in (0, 1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def auto(cls, epsilon, alpha, beta, **kw):
        return cls(epsilon, alpha, beta, subsample_rate=auto_subsample_rate(epsilon), **kw)

    @property
    def upper(self):
        return math.log((1 - self.beta) / self.alpha)

    @property
    def lower(self):
        return math.log(self.beta / (1 - self.alpha))

    @property
    def inner_epsilon(self):
        """Budget before amplification by subsampling."""
        r = self.subsample_rate
        return math.log1p(math.expm1(self.epsilon) / r)

    @property
    def side_epsilon(self):
        return self.inner_epsilon / 2.0

    def noise_scales(self, delta_llr):
        """(threshold scale, query scale) for per-query sensitivity ``delta_llr``."""
        e = self.side_epsilon
        return 2.0 * delta_llr / e, 4.0 * delta_llr / e


def auto_subsample_rate(epsilon):
    return min(1.0, math.sqrt(epsilon / 10.0))


def llr_bounds(pair, clip=None):
    """Range of the (clipped) per-point log-likelihood ratio."""
    if pair.is_finite:
        llr = np.log(pair.lr_atoms)
        lo, hi = float(llr.min()), float(llr.max())
        if clip is not None:
            lo, hi = max(lo, -clip), min(hi, clip)
        return lo, hi
    if clip is None:
        raise UnboundedLLR("log-likelihood ratio is unbounded; configure a clip")
    return -float(clip), float(clip)


def _llr(pair, x, clip):
    v = np.asarray(pair.log_lr(x), dtype=float)
    return v if clip is None else np.clip(v, -clip, clip)


def run_dpsprt(pair, config, stream=None, max_n=10**5, seed=0):
    """Run the private SPRT until a boundary check fires or ``max_n`` points."""
    lo_llr, hi_llr = llr_bounds(pair, config.clip)
    delta_llr = hi_llr - lo_llr
    stream = as_stream(stream, pair.alt, derive_seed(seed, 0))
    rng_sub = np.random.default_rng(derive_seed(seed, 11))
    rng_up = np.random.default_rng(derive_seed(seed, 12))
    rng_lo = np.random.default_rng(derive_seed(seed, 13))
    r = config.subsample_rate
    if config.noise:
        s_thr, s_q = config.noise_scales(delta_llr)
        d_up, d_lo = config.alpha / 2.0, config.beta / 2.0
        thr_up = config.upper + math.log(2.0 / (1 - config.beta)) + s_thr * math.log(1 / d_up)
        thr_lo = -config.lower + math.log(2.0 / (1 - config.alpha)) + s_thr * math.log(1 / d_lo)
        thr_up += laplace_from_uniform(rng_up.random(), s_thr)
        thr_lo += laplace_from_uniform(rng_lo.random(), s_thr)
    else:
        thr_up, thr_lo = config.upper, -config.lower

    L = 0.0
    done = 0
    while done < max_n:
        m = min(CHUNK, max_n - done)
        data = stream.take(done + m)[done:]
        if len(data) == 0:
            break
        m = len(data)
        keep = rng_sub.random(m) < r if r < 1 else np.ones(m, dtype=bool)
        path = L + np.cumsum(np.where(keep, _llr(pair, data, config.clip), 0.0))
        up, lo = path.copy(), -path
        if config.noise:
            t = np.arange(done + 1, done + m + 1, dtype=float)
            tt = np.log(t) + np.log1p(t)
            up += laplace_from_uniform(rng_up.random(m), s_q) - s_q * (tt + math.log(1 / d_up))
            lo += laplace_from_uniform(rng_lo.random(m), s_q) - s_q * (tt + math.log(1 / d_lo))
        ex_up, ex_lo = up - thr_up, lo - thr_lo
        hit = np.flatnonzero((ex_up >= 0) | (ex_lo >= 0))
        if len(hit):
            k = hit[0]
            accept_q = ex_up[k] >= 0 and (ex_lo[k] < 0 or ex_up[k] >= ex_lo[k])
            return SequentialResult("accept-Q" if accept_q else "accept-P", done + k + 1,
                                    float(path[k]), "crossed", False)
        L = float(path[-1])
        done += m
    return SequentialResult("inconclusive", done, L, "max_n", True)


class DpSprt:
    """Pluggable baseline: any object with ``name`` and ``run(pair, stream, max_n, seed)``."""

    name = "dpsprt"

    def __init__(self, config):
        self.config = config

    def run(self, pair, stream, max_n, seed):
        return run_dpsprt(pair, self.config, stream, max_n, seed)


def classical_sprt(llr_values, upper, lower):
    """Non-private SPRT on a fixed sequence; returns (decision, N)."""
    L = 0.0
    for i, v in enumerate(llr_values, start=1):
        L += v
        if L >= upper:
            return "accept-Q", i
        if L <= lower:
            return "accept-P", i
    return "inconclusive", len(llr_values)
