"""Null and alternate distributions, likelihood ratios, expectations and region masses.

Two kinds of distribution are supported: finite-support (atoms with
probabilities) and continuous on the real line. Mixed distributions are not.
A :class:`TestingPair` couples a null ``P`` with an alternate ``Q`` and knows
how to evaluate ``q(x)/p(x)`` and the masses of the likelihood-ratio level
regions that every downstream construction needs.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

from .errors import QuadratureNonConvergence, ZeroNullDensity

PROB_SUM_TOL = 1e-12
QUAD_RTOL = 1e-9


class SimpleDistribution:
    label = ""
    is_finite = False

    def pdf(self, x):
        raise NotImplementedError

    def sample_from_uniform(self, u):
        raise NotImplementedError

    def sample(self, size, rng):
        return self.sample_from_uniform(rng.random(size))


@dataclass(frozen=True, eq=False)
class FiniteDistribution(SimpleDistribution):
    """Distribution on finitely many real atoms.

    Zero-probability atoms are dropped and atoms are sorted by location.
    """

    points: np.ndarray
    probs: np.ndarray
    label: str = "finite"
    is_finite = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        prb = np.asarray(self.probs, dtype=float).ravel()
        if pts.shape != prb.shape or pts.size == 0:
            raise ValueError("points and probs must be nonempty and of equal length")
        if np.any(prb < 0) or not np.all(np.isfinite(prb)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(prb.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {prb.sum()!r}, not 1")
        if len(np.unique(pts)) != len(pts):
            raise ValueError("atom locations must be distinct")
        keep = prb > 0
        order = np.argsort(pts[keep])
        pts, prb = pts[keep][order], prb[keep][order]
        pts.setflags(write=False)
        prb.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", prb)
        object.__setattr__(self, "_cum", np.cumsum(prb))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.points, x), 0, len(self.points) - 1)
        out = np.where(self.points[idx] == x, self.probs[idx], 0.0)
        return float(out) if out.ndim == 0 else out

    def sample_from_uniform(self, u):
        idx = np.searchsorted(self._cum, np.asarray(u) * self._cum[-1], side="right")
        return self.points[np.minimum(idx, len(self.points) - 1)]

    def mean(self):
        return float(np.dot(self.points, self.probs))

    def __repr__(self):
        return f"FiniteDistribution({self.label!r})"


def bernoulli(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError("Bernoulli parameter must lie in [0, 1]")
    return FiniteDistribution([0.0, 1.0], [1.0 - p, p], label=f"bernoulli p={p:g}")


@dataclass(frozen=True)
class GaussianDistribution(SimpleDistribution):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def label(self):
        return f"gaussian mu={self.mu:g} sigma={self.sigma:g}"

    support = (-math.inf, math.inf)

    def pdf(self, x):
        return stats.norm.pdf(x, self.mu, self.sigma)

    def logpdf(self, x):
        return stats.norm.logpdf(x, self.mu, self.sigma)

    def cdf(self, x):
        return stats.norm.cdf(x, self.mu, self.sigma)

    def sample_from_uniform(self, u):
        return self.mu + self.sigma * special.ndtri(u)


@dataclass(frozen=True)
class ContinuousDistribution(SimpleDistribution):
    """Generic density on an interval.

    ``quantile`` maps U(0, 1) to samples; ``cdf`` is optional and only used
    for exact region masses when the pair also supplies level sets. A
    ``logdensity`` keeps likelihood ratios finite far in the tails.
    """

    density: object
    quantile: object
    support: tuple = (-math.inf, math.inf)
    cdf_fn: object = None
    label: str = "continuous"
    logdensity: object = None

    def pdf(self, x):
        return self.density(x)

    def logpdf(self, x):
        if self.logdensity is None:
            with np.errstate(divide="ignore"):
                return np.log(self.density(x))
        return self.logdensity(x)

    def cdf(self, x):
        if self.cdf_fn is None:
            raise NotImplementedError("no CDF supplied")
        return self.cdf_fn(x)

    def sample_from_uniform(self, u):
        return self.quantile(u)


def expect_under(dist, f, *, breakpoints=(), full_output=False, rtol=QUAD_RTOL):
    """E[f(X)] for X ~ dist.

    Exact weighted sum on finite support. For continuous distributions the
    integral of ``f * pdf`` is split at ``breakpoints`` and each piece is
    integrated adaptively (infinite ends are mapped onto a finite interval).
    With ``full_output`` a pair ``(value, error_estimate)`` is returned.
    """
    if dist.is_finite:
        vals = np.asarray(f(dist.points), dtype=float)
        value = float(np.dot(dist.probs, vals))
        return (value, 0.0) if full_output else value

    lo, hi = dist.support
    cuts = sorted(b for b in breakpoints if lo < b < hi)
    edges = [lo, *cuts, hi]

    def integrand(x):
        dens = dist.pdf(x)
        return 0.0 if dens == 0.0 else float(f(x)) * dens

    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, abserr, info = integrate.quad(
            integrand, a, b, epsabs=1e-14, epsrel=rtol, limit=200, full_output=1
        )[:3]
        total += val
        err += abserr
    if err > max(rtol * abs(total), 1e-12) * 10:
        raise QuadratureNonConvergence("adaptive quadrature did not converge", err)
    return (total, err) if full_output else total


@dataclass(frozen=True)
class NormalLLRLaw:
    """Closed-form law of the log-likelihood ratio when it is Gaussian.

    Holds for a Gaussian mean-shift pair with a common sigma: the LLR is
    affine in x, hence normal under both hypotheses.
    """

    mean_null: float
    mean_alt: float
    sd: float

    def _mean(self, under):
        return self.mean_null if under == "null" else self.mean_alt

    def cdf(self, under, t):
        return float(special.ndtr((t - self._mean(under)) / self.sd))

    def sf(self, under, t):
        return float(special.ndtr((self._mean(under) - t) / self.sd))

    def mass_between(self, under, a, b):
        m, s = self._mean(under), self.sd
        za, zb = (a - m) / s, (b - m) / s
        # take the difference on the side where both tails are small
        if za > 0:
            return float(special.ndtr(-za) - special.ndtr(-zb))
        return float(special.ndtr(zb) - special.ndtr(za))

    def partial_mean(self, under, a, b):
        """E[L; a <= L <= b]."""
        m, s = self._mean(under), self.sd
        za, zb = (a - m) / s, (b - m) / s
        dens = stats.norm.pdf(za) - stats.norm.pdf(zb)
        return float(m * self.mass_between(under, a, b) + s * dens)


class TestingPair:
    """A null ``P`` and alternate ``Q`` on a shared support.

    Both must be finite-support, or both continuous. Construction checks
    absolute continuity on atoms: ``q(x) > 0`` requires ``p(x) > 0``.
    """

    __test__ = False  # not a pytest class

    def __init__(self, null, alt, *, llr_law=None, level_set=None):
        if null.is_finite != alt.is_finite:
            raise ValueError("mixed finite/continuous pairs are not supported")
        self.null = null
        self.alt = alt
        self.is_finite = null.is_finite
        self.llr_law = llr_law
        self._level_set = level_set
        if self.is_finite:
            support = np.union1d(null.points, alt.points)
            p = np.asarray(null.pdf(support), dtype=float)
            q = np.asarray(alt.pdf(support), dtype=float)
            bad = (p == 0) & (q > 0)
            if np.any(bad):
                raise ZeroNullDensity(
                    f"alternate has mass at {support[bad].tolist()} where the null has none"
                )
            self.support = support
            self.p = p
            self.q = q
            self.lr_atoms = q / p
        else:
            self.support = getattr(null, "support", (-math.inf, math.inf))
            if isinstance(null, GaussianDistribution) and isinstance(alt, GaussianDistribution):
                self._level_set = self._level_set or self._gaussian_level_set
                if self.llr_law is None and null.sigma == alt.sigma and null.mu != alt.mu:
                    a = (alt.mu - null.mu) / null.sigma**2
                    b0 = -(alt.mu**2 - null.mu**2) / (2 * null.sigma**2)
                    self.llr_law = NormalLLRLaw(
                        mean_null=a * null.mu + b0,
                        mean_alt=a * alt.mu + b0,
                        sd=abs(a) * null.sigma,
                    )

    def __repr__(self):
        return f"TestingPair(null={self.null.label!r}, alt={self.alt.label!r})"

    @property
    def label(self):
        return f"{self.null.label} vs {self.alt.label}"

    def swapped(self):
        """The pair with null and alternate exchanged."""
        return TestingPair(self.alt, self.null)

    @property
    def is_degenerate(self):
        """True when P = Q, so the likelihood ratio is identically one."""
        if self.is_finite:
            return bool(np.array_equal(self.p, self.q))
        if isinstance(self.null, GaussianDistribution) and isinstance(self.alt, GaussianDistribution):
            return self.null == self.alt
        return False

    def log_lr(self, x):
        """log q(x)/p(x), vectorized."""
        x = np.asarray(x, dtype=float)
        if _has_logpdf(self.null) and _has_logpdf(self.alt):
            with np.errstate(invalid="ignore"):
                out = np.asarray(self.alt.logpdf(x) - self.null.logpdf(x), dtype=float)
            both_zero = np.isneginf(self.null.logpdf(x)) & np.isneginf(self.alt.logpdf(x))
            if np.any(np.isposinf(out)):
                raise ZeroNullDensity("p(x) = 0 < q(x): alternate is not absolutely continuous")
            out = np.where(both_zero, 0.0, out)
        else:
            p = np.asarray(self.null.pdf(x), dtype=float)
            q = np.asarray(self.alt.pdf(x), dtype=float)
            if np.any((p == 0) & (q > 0)):
                raise ZeroNullDensity("p(x) = 0 < q(x): alternate is not absolutely continuous")
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(q > 0, np.log(q) - np.log(np.where(p > 0, p, 1.0)), -np.inf)
            out = np.where((p == 0) & (q == 0), 0.0, out)
        return float(out) if out.ndim == 0 else out

    def lr(self, x):
        with np.errstate(over="ignore"):
            return np.exp(self.log_lr(x))

    def level_set(self, t):
        """Points where log q/p crosses ``t``, if the pair knows them."""
        if self._level_set is None:
            return None
        return sorted(self._level_set(t))

    def _gaussian_level_set(self, t):
        P, Q = self.null, self.alt
        A = 0.5 / P.sigma**2 - 0.5 / Q.sigma**2
        B = Q.mu / Q.sigma**2 - P.mu / P.sigma**2
        C = P.mu**2 / (2 * P.sigma**2) - Q.mu**2 / (2 * Q.sigma**2) + math.log(P.sigma / Q.sigma) - t
        if A == 0.0:
            return [] if B == 0.0 else [-C / B]
        disc = B * B - 4 * A * C
        if disc <= 0:
            return []
        r = math.sqrt(disc)
        # numerically stable quadratic roots
        qq = -0.5 * (B + math.copysign(r, B))
        roots = {qq / A}
        if qq != 0.0:
            roots.add(C / qq)
        return roots


def _has_logpdf(dist):
    return isinstance(dist, GaussianDistribution) or getattr(dist, "logdensity", None) is not None


def likelihood_ratio(pair, x):
    """q(x)/p(x) for a single point or an array of points."""
    return pair.lr(x)


@dataclass(frozen=True)
class RegionSummary:
    """Masses of A = {LR < c1}, M = {c1 <= LR <= c2}, B = {LR > c2}."""

    p_a: float
    p_b: float
    q_a: float
    q_b: float
    q_m: float
    q_llr_m: float = field(default=0.0)  # integral over M of q log(q/p)

    @property
    def p_m(self):
        return 1.0 - self.p_a - self.p_b


def region_summary(pair, c1, c2):
    if not 0 < c1 <= c2:
        raise ValueError("need 0 < c1 <= c2")
    lo, hi = math.log(c1), math.log(c2)
    if pair.is_finite:
        llr = np.log(pair.lr_atoms)
        in_a, in_b = llr < lo, llr > hi
        in_m = ~(in_a | in_b)
        return RegionSummary(
            p_a=float(pair.p[in_a].sum()),
            p_b=float(pair.p[in_b].sum()),
            q_a=float(pair.q[in_a].sum()),
            q_b=float(pair.q[in_b].sum()),
            q_m=float(pair.q[in_m].sum()),
            q_llr_m=float(np.dot(pair.q[in_m], llr[in_m])),
        )
    law = pair.llr_law
    if law is not None:
        return RegionSummary(
            p_a=law.cdf("null", lo),
            p_b=law.sf("null", hi),
            q_a=law.cdf("alt", lo),
            q_b=law.sf("alt", hi),
            q_m=law.mass_between("alt", lo, hi),
            q_llr_m=law.partial_mean("alt", lo, hi),
        )
    return _region_summary_numeric(pair, lo, hi)


def _region_summary_numeric(pair, lo, hi):
    cuts_lo, cuts_hi = pair.level_set(lo), pair.level_set(hi)
    breaks = sorted(set((cuts_lo or []) + (cuts_hi or [])))

    def mass(dist, indicator):
        if cuts_lo is not None and cuts_hi is not None and hasattr(dist, "cdf"):
            try:
                return _interval_mass(dist, pair, breaks, indicator)
            except NotImplementedError:
                pass
        return expect_under(dist, lambda x: float(indicator(pair.log_lr(x))), breakpoints=breaks)

    in_a = lambda v: v < lo  # noqa: E731
    in_b = lambda v: v > hi  # noqa: E731
    in_m = lambda v: lo <= v <= hi  # noqa: E731
    q_llr_m = expect_under(
        pair.alt, lambda x: (lambda v: v if lo <= v <= hi else 0.0)(pair.log_lr(x)), breakpoints=breaks
    )
    return RegionSummary(
        p_a=mass(pair.null, in_a),
        p_b=mass(pair.null, in_b),
        q_a=mass(pair.alt, in_a),
        q_b=mass(pair.alt, in_b),
        q_m=mass(pair.alt, in_m),
        q_llr_m=q_llr_m,
    )


def _interval_mass(dist, pair, breaks, indicator):
    lo, hi = dist.support if hasattr(dist, "support") else (-math.inf, math.inf)
    edges = [lo, *[b for b in breaks if lo < b < hi], hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(a) and math.isinf(b):
            probe = 0.0
        elif math.isinf(a):
            probe = b - 1.0
        elif math.isinf(b):
            probe = a + 1.0
        else:
            probe = 0.5 * (a + b)
        if indicator(pair.log_lr(probe)):
            total += float(dist.cdf(b)) - float(dist.cdf(a))
    return total


def region_masses(pair, c1, c2):
    """(P(A), P(B), Q(M)) for A = {q < c1 p}, B = {q > c2 p}; ties go to M."""
    s = region_summary(pair, c1, c2)
    return s.p_a, s.p_b, s.q_m


_SPEC_RE = re.compile(r"(\w+)\s*=\s*(\[.*\]|\S+)")


def parse_distribution(spec):
    """Build a distribution from text like ``bernoulli p=0.3``.

    Also accepts ``gaussian mu=0 sigma=1`` and
    ``finite atoms=[(0,0.2),(1,0.5),(2,0.3)]``.
    """
    spec = spec.strip()
    if not spec:
        raise ValueError("empty distribution spec")
    name, _, rest = spec.partition(" ")
    params = dict(_SPEC_RE.findall(rest))
    name = name.lower()
    allowed = {"bernoulli": {"p"}, "gaussian": {"mu", "sigma"}, "normal": {"mu", "sigma"}, "finite": {"atoms"}}
    extra = set(params) - allowed.get(name, set(params))
    if extra:
        raise ValueError(f"unknown parameter(s) {sorted(extra)} for {name!r}")
    try:
        if name == "bernoulli":
            return bernoulli(float(params["p"]))
        if name in ("gaussian", "normal"):
            return GaussianDistribution(float(params.get("mu", 0.0)), float(params.get("sigma", 1.0)))
        if name == "finite":
            nums = [float(v) for v in re.findall(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?", params["atoms"])]
            if len(nums) % 2:
                raise ValueError("atoms must be (point, probability) pairs")
            return FiniteDistribution(nums[0::2], nums[1::2], label=spec)
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc} in {spec!r}") from None
    raise ValueError(f"unknown distribution {name!r}")
