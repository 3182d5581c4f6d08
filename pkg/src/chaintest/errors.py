"""Exception types shared across the package."""


class ChainTestError(Exception):
    """Base class for all package errors."""


class ValidationError(ChainTestError):
    """An input violated a documented precondition or invariant."""


class ConfigError(ChainTestError):
    """A config file or CLI flag could not be resolved."""


class SourceExhausted(ChainTestError):
    """A sample source ran dry before a test finished.

    ``consumed`` is the number of samples delivered before exhaustion.
    """

    def __init__(self, consumed, requested):
        self.consumed = consumed
        self.requested = requested
        super().__init__(
            f"sample source exhausted after {consumed} samples "
            f"({requested} more requested)"
        )


class DegenerateFunctionError(ChainTestError):
    """Every coordinate function is constant; no autocovariance signal."""


class InsufficientSamples(ChainTestError):
    """Gap estimation needs a longer run before the estimate is trusted.

    ``target_n`` is the recommended total sample count; ``interim`` holds
    the estimate computed so far.
    """

    def __init__(self, target_n, interim):
        self.target_n = target_n
        self.interim = interim
        super().__init__(
            f"gap estimate {interim.gamma_star_hat:.4g} needs more samples: "
            f"rerun with n >= {target_n}"
        )


class DivergenceError(ChainTestError):
    """The ODE integrator produced a non-finite state.

    ``time`` is the integration time at which the first non-finite
    component appeared.
    """

    def __init__(self, time):
        self.time = time
        super().__init__(f"integration diverged at t = {time:g}")
