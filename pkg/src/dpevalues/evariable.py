"""Per-observation e-variables with a certified range."""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import TestingPair, expect_under
from .errors import RangeViolation

RANGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BoundedEVariable:
    """x -> E(x) with E^P[E] <= 1 and every value inside ``[c_lo, c_hi]``.

    ``mu`` is the per-sample e-power E^Q[log E] when known. ``pair`` enables
    exact (finite support) or quadrature expectations of transforms of E.
    """

    func: Callable
    c_lo: float
    c_hi: float
    mu: Optional[float] = None
    label: str = ""
    pair: Optional[TestingPair] = None
    breakpoints: tuple = ()

    def __post_init__(self):
        if not 0 < self.c_lo <= self.c_hi:
            raise ValueError("certified range must satisfy 0 < c_lo <= c_hi")

    def __call__(self, x):
        return self.func(x)

    @property
    def log_range(self):
        return math.log(self.c_hi) - math.log(self.c_lo)

    def check_range(self, values):
        values = np.asarray(values, dtype=float)
        lo = self.c_lo * (1 - RANGE_RTOL)
        hi = self.c_hi * (1 + RANGE_RTOL)
        if np.any((values < lo) | (values > hi)) or np.any(np.isnan(values)):
            bad = values[(values < lo) | (values > hi) | np.isnan(values)]
            raise RangeViolation(f"values {bad[:5].tolist()} outside [{self.c_lo}, {self.c_hi}]")
        return values

    def log_values(self, x):
        return np.log(self.check_range(self.func(x)))

    def null_mean(self):
        return expect_under(self.pair.null, self.func, breakpoints=self.breakpoints)

    def alt_log_mean(self):
        return expect_under(self.pair.alt, lambda x: np.log(self.func(x)), breakpoints=self.breakpoints)

    def log_mixture_mean(self, lam):
        """E^Q[log(1 - lam + lam E)]."""
        return expect_under(
            self.pair.alt, lambda x: np.log1p(lam * (self.func(x) - 1.0)), breakpoints=self.breakpoints
        )
