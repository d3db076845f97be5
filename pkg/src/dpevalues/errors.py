"""Exception types raised across the package."""


class DPEvalueError(Exception):
    """Base class for all package errors."""


class ZeroNullDensity(DPEvalueError, ValueError):
    """The alternate puts mass where the null has none (Q is not << P)."""


class QuadratureNonConvergence(DPEvalueError, RuntimeError):
    def __init__(self, message, achieved_error=float("nan")):
        super().__init__(f"{message} (achieved error {achieved_error:.3g})")
        self.achieved_error = achieved_error


class NoRootInBracket(DPEvalueError, RuntimeError):
    def __init__(self, message, f_lo=float("nan"), f_hi=float("nan")):
        super().__init__(f"{message} (f(lo)={f_lo!r}, f(hi)={f_hi!r})")
        self.f_lo = f_lo
        self.f_hi = f_hi


class RangeViolation(DPEvalueError, ValueError):
    """An e-variable value fell outside its certified range."""


class InfeasibleNoise(DPEvalueError, ValueError):
    """No mixing weight gives a Laplace scale below one."""


class NonpositivePower(DPEvalueError, ValueError):
    """The per-sample e-power is not strictly positive."""


class InvalidRho(DPEvalueError, ValueError):
    """The competitive ratio does not exceed the sensitivity multiple."""


class ZeroRate(DPEvalueError, ValueError):
    """The rate is zero, so no finite stopping time is achievable."""


class UnboundedLLR(DPEvalueError, ValueError):
    """The log-likelihood ratio is unbounded and no clip was configured."""


class ConfigError(DPEvalueError, ValueError):
    """Invalid experiment configuration."""
