"""Exception and warning types shared across the package."""


class PbchaosError(Exception):
    """Base class for all errors raised by this package."""


class PoleSingularity(PbchaosError):
    """Canonical-chart evaluation requested too close to a pole (|z| -> 1)."""


class StepUnderflow(PbchaosError):
    """Adaptive step size collapsed below the hard floor.

    Carries the last time the integrator reached before giving up.
    """

    def __init__(self, tau_last, message=None):
        self.tau_last = tau_last
        super().__init__(message or f"step size underflow at tau = {tau_last!r}")


class NoConvergence(PbchaosError):
    """Iterative search exhausted its iteration budget."""


class SingularJacobian(PbchaosError):
    """Newton system (M - I) is singular to working precision.

    Expected on unperturbed resonant tori, where fixed points of the
    iterated stroboscopic map form a degenerate one-parameter family.
    """


class InsufficientSamples(PbchaosError):
    """Fewer samples available than the statistic requires."""


class ConvergenceFailure(PbchaosError):
    """Self-consistency check of a propagation failed (e.g. step halving)."""


class ScenarioError(PbchaosError):
    """A scenario pipeline stage failed; names the stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"scenario stage '{stage}' failed: {cause}")


class DegenerateMAD(UserWarning):
    """Median absolute deviation is zero; outlier scores are undefined."""
