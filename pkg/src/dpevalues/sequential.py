"""Private e-processes from bounded e-variables, and sequential tests built on them.

A bounded e-variable whose log-range has width ``c * eps`` is accumulated in
batches. At each batch boundary ``floor(t_j)`` the running log e-value moves by

    lam * sum(log E over the batch) + Laplace(lam c) - C_lam,

and it is held constant in between. The boundary times grow geometrically with
ratio ``rho * lam`` and are tuned so the process stays ``rho``-competitive with
the non-private growth rate ``mu`` from the first boundary on.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidRho, NonpositivePower, ZeroRate
from .numerics import golden_section_min
from .rng import LaplaceSource, as_stream, derive_seed, laplace_from_uniform
from .tslr import select_evariable

DEFAULT_HORIZON = 10**12
MAX_BOUNDARIES = 1_000_000


def compensator(lam, c):
    """Log Laplace MGF at 1 for scale lam * c."""
    return -math.log1p(-(c * lam) ** 2)


def minimum_stopping_time(lam, rho, c, mu):
    """t_1 as a function of the mixing power lam."""
    C = compensator(lam, c)
    a = rho * lam
    return a + rho * rho * lam * C / (mu * (a - 1.0) ** 2)


@dataclass(frozen=True)
class BatchSchedule:
    rho: float
    c: float
    epsilon: float
    lam: float
    compensator: float
    mu: float
    t: tuple
    boundaries: tuple
    t1: float
    horizon: float

    @property
    def noise_scale(self):
        return self.lam * self.c

    def closed_form(self, j):
        """t_j without running the recurrence (j >= 1)."""
        a = self.rho * self.lam
        k = self.rho * self.compensator / (self.mu * (a - 1.0))
        return a**j + k * (j - 1) + a * k / (a - 1.0)

    def batch_sizes(self):
        b = np.asarray(self.boundaries, dtype=np.int64)
        return np.diff(np.concatenate([[0], b]))


def build_schedule(c, epsilon, mu, rho, horizon=DEFAULT_HORIZON, *, lam=None):
    """Batch boundaries for a statistic with log-sensitivity ``c * epsilon``.

    ``lam`` defaults to the minimizer of t_1 over (1/rho, min(1, 1/c)).
    Boundaries are floored and merged when they collide.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not c > 0:
        raise ValueError("sensitivity multiple c must be positive")
    if not rho > max(1.0, c):
        raise InvalidRho(f"rho={rho} must exceed max(1, c={c})")
    if mu is None or not mu > 0:
        raise NonpositivePower(f"per-sample e-power must be positive, got {mu!r}")
    lo, hi = 1.0 / rho, min(1.0, 1.0 / c)
    if lam is None:
        lam, _ = golden_section_min(lambda l: minimum_stopping_time(l, rho, c, mu), lo, hi, xtol=1e-12)
    elif not lo < lam < hi:
        raise ValueError(f"lam must lie in ({lo}, {hi})")
    C = compensator(lam, c)
    t1 = minimum_stopping_time(lam, rho, c, mu)
    ts = [t1]
    j = 1
    while ts[-1] <= horizon and len(ts) < MAX_BOUNDARIES:
        ts.append(rho * (lam * ts[-1] - j * C / mu))
        j += 1
    ts_arr = np.asarray(ts)
    floors = np.floor(ts_arr[ts_arr <= min(horizon, 2.0**62)]).astype(np.int64)
    bounds = tuple(int(v) for v in np.unique(floors))
    return BatchSchedule(
        rho=float(rho), c=float(c), epsilon=float(epsilon), lam=float(lam), compensator=C,
        mu=float(mu), t=tuple(ts), boundaries=bounds, t1=t1, horizon=horizon,
    )


def eprocess_path(schedule, log_values, uniforms):
    """Boundary times and log e-values reached within ``len(log_values)`` points.

    ``uniforms[k]`` drives the Laplace draw at the k-th boundary.
    """
    n = len(log_values)
    b = np.asarray(schedule.boundaries, dtype=np.int64)
    b = b[b <= n]
    if len(b) == 0:
        return b, np.empty(0)
    cum = np.concatenate([[0.0], np.cumsum(log_values)])
    sums = np.diff(cum[np.concatenate([[0], b])])
    noise = laplace_from_uniform(np.asarray(uniforms[: len(b)], dtype=float), schedule.noise_scale)
    incr = schedule.lam * sums + noise - schedule.compensator
    return b, np.cumsum(incr)


class EProcess:
    """Running private e-process over a stream of observations.

    ``step`` follows the per-observation recursion. ``extend`` feeds many
    observations at once and returns the log e-value after each of them.
    Both consume one Laplace draw per boundary, in boundary order.
    """

    def __init__(self, evar, epsilon, rho, *, c=None, mu=None, seed=None, noise=True,
                 horizon=DEFAULT_HORIZON, schedule=None):
        self.evar = evar
        self.epsilon = float(epsilon)
        if c is None:
            c = evar.log_range / self.epsilon
        mu = evar.mu if mu is None else mu
        self.schedule = schedule or build_schedule(c, epsilon, mu, rho, horizon)
        self.seed = seed
        self.noise = noise
        self._source = LaplaceSource(seed)
        self._bounds = np.asarray(self.schedule.boundaries, dtype=np.int64)
        self.log_e = 0.0
        self.time = 0
        self.next_batch = 0
        self._batch_sum = 0.0
        self.emitted = []

    @property
    def buffered(self):
        prev = self._bounds[self.next_batch - 1] if self.next_batch else 0
        return self.time - int(prev)

    @property
    def value(self):
        return math.exp(self.log_e)

    def _emit(self, batch_sum):
        s = self.schedule
        z = self._source.draw(s.noise_scale) if self.noise else 0.0
        self.log_e += s.lam * batch_sum + z - s.compensator
        self.next_batch += 1
        self.emitted.append((self.time, self.log_e))

    def step(self, x):
        self._batch_sum += float(self.evar.log_values(np.asarray([x]))[0])
        self.time += 1
        if self.next_batch < len(self._bounds) and self.time == self._bounds[self.next_batch]:
            self._emit(self._batch_sum)
            self._batch_sum = 0.0
        return self.log_e

    def extend(self, xs):
        logs = self.evar.log_values(np.asarray(xs))
        out = np.empty(len(logs))
        start = self.time
        end = start + len(logs)
        cum = np.concatenate([[0.0], np.cumsum(logs)])
        pos = 0
        while self.next_batch < len(self._bounds) and self._bounds[self.next_batch] <= end:
            k = int(self._bounds[self.next_batch]) - start
            out[pos:k - 1] = self.log_e
            self._batch_sum += cum[k] - cum[pos]
            self.time = start + k
            self._emit(self._batch_sum)
            self._batch_sum = 0.0
            out[k - 1] = self.log_e
            pos = k
        out[pos:] = self.log_e
        self._batch_sum += cum[len(logs)] - cum[pos]
        self.time = end
        return out


def _side_evariable(pair, epsilon, statistic):
    """E-variable with log-range epsilon (c = 1) for one process."""
    ev, _ = select_evariable(pair, epsilon, statistic, tslr_epsilon=epsilon / 2.0)
    return ev, 1.0


def optimal_eprocess(pair, epsilon, rho, seed=None, *, statistic="auto", noise=True,
                     horizon=DEFAULT_HORIZON):
    """E-process for null ``pair.null`` at privacy budget ``epsilon``."""
    ev, c = _side_evariable(pair, epsilon, statistic)
    return EProcess(ev, epsilon, rho, c=c, seed=seed, noise=noise, horizon=horizon)


@dataclass
class SequentialResult:
    decision: str
    stopping_time: int
    log_e: float
    reason: str
    censored: bool
    log_e_other: Optional[float] = None
    extra: dict = field(default_factory=dict)


def _first_crossing(schedule, stream, seed, threshold, max_n, evar, noise, min_time=None):
    """First boundary with log e >= threshold, growing the data as needed.

    Returns (time or None, log e at that time or at the last boundary, n seen).
    """
    rng = np.random.default_rng(seed)
    n_b = int(np.searchsorted(schedule.boundaries, max_n, side="right"))
    uniforms = rng.random(n_b) if noise else np.full(n_b, 0.5)
    length = min(max_n, max(1024, int(schedule.boundaries[0]) if schedule.boundaries else 1024))
    while True:
        data = stream.take(length)
        avail = len(data)
        b, path = eprocess_path(schedule, evar.log_values(data), uniforms)
        ok = path >= threshold
        if min_time is not None:
            ok &= b >= min_time
        hit = np.flatnonzero(ok)
        if len(hit):
            k = hit[0]
            return int(b[k]), float(path[k]), avail
        if avail < length or length >= max_n:
            return None, (float(path[-1]) if len(path) else 0.0), avail
        length = min(max_n, 2 * length)


def run_one_sided_test(pair, epsilon, rho, alpha, stream=None, max_n=10**5, *, seed=0,
                       statistic="auto", noise=True, min_time=None, process=None):
    """Reject the null once the private e-process reaches 1/alpha.

    ``stream`` may be an ObservationStream or an array; ``None`` samples the
    alternate with ``seed``. Inconclusive runs report ``max_n`` (or the data
    length) and a reason code.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    proc = process or optimal_eprocess(pair, epsilon, rho, statistic=statistic, horizon=max_n)
    stream = as_stream(stream, pair.alt, derive_seed(seed, 0))
    noise_seed = derive_seed(seed, 1)
    s = proc.schedule
    t, log_e, seen = _first_crossing(s, stream, noise_seed, math.log(1.0 / alpha), max_n, proc.evar,
                                     noise, min_time)
    if t is not None:
        return SequentialResult("reject", t, log_e, "crossed", False)
    n = min(seen, max_n)
    reason = "before_min_time" if n < s.t1 else "max_n"
    return SequentialResult("inconclusive", n, log_e, reason, True)


def two_sided_processes(pair, epsilon, rho, *, statistic="auto", horizon=DEFAULT_HORIZON):
    """The two e-processes of the two-sided test, each at budget eps/2."""
    half = epsilon / 2.0
    p1 = optimal_eprocess(pair, half, rho, statistic=statistic, horizon=horizon)
    p2 = optimal_eprocess(pair.swapped(), half, rho, statistic=statistic, horizon=horizon)
    return p1, p2


def run_two_sided_test(pair, epsilon, rho, alpha, beta, stream=None, max_n=10**5, *, seed=0,
                       statistic="auto", noise=True, processes=None):
    """Accept Q when the P-null process reaches 1/alpha, accept P when the Q-null one reaches 1/beta.

    Both processes read the same observations and spend eps/2 each. If both
    cross at the same time the larger overshoot wins.
    """
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise ValueError("alpha and beta must lie in (0, 1)")
    p1, p2 = processes or two_sided_processes(pair, epsilon, rho, statistic=statistic, horizon=max_n)
    stream = as_stream(stream, pair.alt, derive_seed(seed, 0))
    thr1, thr2 = math.log(1.0 / alpha), math.log(1.0 / beta)
    t1, l1, seen1 = _first_crossing(p1.schedule, stream, derive_seed(seed, 1), thr1, max_n, p1.evar, noise)
    t2, l2, seen2 = _first_crossing(p2.schedule, stream, derive_seed(seed, 2), thr2, max_n, p2.evar, noise)
    if t1 is None and t2 is None:
        n = min(max(seen1, seen2), max_n)
        first = min(p1.schedule.t1, p2.schedule.t1)
        reason = "before_min_time" if n < first else "max_n"
        return SequentialResult("inconclusive", n, l1, reason, True, log_e_other=l2)
    if t2 is None or (t1 is not None and (t1 < t2 or (t1 == t2 and l1 - thr1 >= l2 - thr2))):
        return SequentialResult("accept-Q", t1, l1, "crossed", False, log_e_other=None)
    return SequentialResult("accept-P", t2, l2, "crossed", False, log_e_other=None)


def stopping_time_lower_bound(alpha, beta, rate):
    """Expected-sample lower bound for a level (alpha, beta) sequential test."""
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise ValueError("alpha and beta must lie in (0, 1)")
    if not rate > 0:
        raise ZeroRate("rate must be positive for a finite stopping-time bound")
    num = (1 - beta) * math.log((1 - beta) / alpha) + beta * math.log(beta / (1 - alpha))
    return num / rate


def batch_null_mean(evar, schedule, batch_size):
    """E^P of one boundary factor, exp(lam sum log E + Z - C), computed exactly.

    The noise and compensator cancel, leaving (E^P[E^lam])^m.
    """
    from .distributions import expect_under

    lam = schedule.lam
    m1 = expect_under(evar.pair.null, lambda x: evar(x) ** lam, breakpoints=evar.breakpoints)
    return m1**batch_size


def simulate_finite_paths(schedule, evar, dist, n_paths, seed, horizon=None, noise=True):
    """Vectorized e-process paths for a finite-support data distribution.

    Batch sums are drawn through multinomial counts of each atom, so only the
    boundary values are produced. Returns ``(boundaries, log_e)`` with
    ``log_e`` of shape ``(n_paths, n_boundaries)``.
    """
    rng = np.random.default_rng(seed)
    b = np.asarray(schedule.boundaries, dtype=np.int64)
    if horizon is not None:
        b = b[b <= horizon]
    sizes = np.diff(np.concatenate([[0], b]))
    atoms = np.asarray(dist.points, dtype=float)
    logs = evar.log_values(atoms)
    probs = np.asarray(dist.probs, dtype=float)
    out = np.empty((n_paths, len(b)))
    acc = np.zeros(n_paths)
    for k, m in enumerate(sizes):
        counts = rng.multinomial(int(m), probs, size=n_paths)
        z = laplace_from_uniform(rng.random(n_paths), schedule.noise_scale) if noise else 0.0
        acc = acc + schedule.lam * (counts @ logs) + z - schedule.compensator
        out[:, k] = acc
    return b, out
