"""Differentially private e-values and e-processes for simple hypothesis tests."""

from .batch import NoiseCalibration, PrivateBatchRelease, calibrate, calibrate_for, mixed_log_statistic, release
from .distributions import (
    FiniteDistribution,
    GaussianDistribution,
    TestingPair,
    bernoulli,
    expect_under,
    likelihood_ratio,
    parse_distribution,
)
from .dpsprt import DpSprt, DpSprtConfig, run_dpsprt
from .errors import (
    ConfigError,
    DPEvalueError,
    InfeasibleNoise,
    InvalidRho,
    NonpositivePower,
    NoRootInBracket,
    QuadratureNonConvergence,
    RangeViolation,
    UnboundedLLR,
    ZeroNullDensity,
    ZeroRate,
)
from .evariable import BoundedEVariable
from .optimal import OptimalConstruction, optimal_evariable, rate, solve_lambda_star
from .sequential import (
    BatchSchedule,
    EProcess,
    build_schedule,
    optimal_eprocess,
    run_one_sided_test,
    run_two_sided_test,
    stopping_time_lower_bound,
)
from .tslr import epsilon_star, tslr, tslr_evariable

__version__ = "0.1.0"
