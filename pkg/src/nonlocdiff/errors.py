"""Exception types raised by the solver, the checks and the CLI."""


class NonlocalError(Exception):
    """Base class for all package errors."""


class BadSpacing(NonlocalError, ValueError):
    pass


class InvalidParameter(NonlocalError, ValueError):
    pass


class NotLipschitzForEvolution(InvalidParameter):
    """The conductivity has no valid Lipschitz modulus, so no time window exists."""


class UndefinedAt(NonlocalError, ValueError):
    def __init__(self, U):
        super().__init__(f"UndefinedAt: zero set undefined at U={U!r}")
        self.U = U


class NonFiniteValue(NonlocalError, ValueError):
    pass


class NonFiniteState(NonlocalError, FloatingPointError):
    pass


class NoConvergence(NonlocalError, RuntimeError):
    def __init__(self, window, iteration, delta):
        super().__init__(
            f"NoConvergence: window {window} stopped at iteration {iteration} "
            f"with update norm {delta:.3e}"
        )
        self.window = window
        self.iteration = iteration
        self.delta = delta


class RatioViolation(NonlocalError, RuntimeError):
    def __init__(self, window, iteration, ratio, limit):
        super().__init__(
            f"RatioViolation: window {window}, iteration {iteration}: "
            f"contraction ratio {ratio:.4f} exceeds {limit:.4f}"
        )
        self.window = window
        self.iteration = iteration
        self.ratio = ratio
        self.limit = limit


class InvalidSpec(NonlocalError, ValueError):
    pass


class PreconditionFailed(NonlocalError):
    pass


class QuadratureUnderResolved(NonlocalError):
    pass


class ConfigError(NonlocalError, ValueError):
    pass
