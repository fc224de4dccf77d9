"""Exception hierarchy shared by all modules."""


class LfrLpvError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LfrLpvError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class InvalidInput(LfrLpvError, ValueError):
    pass


class InvalidTolerance(LfrLpvError, ValueError):
    pass


class InvalidFrequency(LfrLpvError, ValueError):
    pass


class NonCausal(LfrLpvError, ValueError):
    pass


class SingularDcGain(LfrLpvError, ArithmeticError):
    """(I - A) is singular or too badly conditioned to invert."""


class AlgebraicLoop(LfrLpvError, ValueError):
    """The z <- w feedback path has a direct feedthrough term."""


class DegenerateFit(LfrLpvError, ArithmeticError):
    def __init__(self, message, condition=None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (condition number {condition:.3e})"
        super().__init__(message)


class FactorizationResidualTooLarge(LfrLpvError, ArithmeticError):
    def __init__(self, residual, bound):
        self.residual = residual
        self.bound = bound
        super().__init__(
            f"reconstruction residual RMS {residual:.3e} exceeds bound {bound:.3e}")


class InvalidOffset(LfrLpvError, ValueError):
    pass


class OffsetUndefined(LfrLpvError, ArithmeticError):
    pass


class DivergedSimulation(LfrLpvError, ArithmeticError):
    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"simulation diverged at sample {self.index}")


class AllCandidatesFailed(LfrLpvError, RuntimeError):
    pass


class InternalError(LfrLpvError, RuntimeError):
    pass


class OptimizationStalled(LfrLpvError, RuntimeError):
    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class ParseError(LfrLpvError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(LfrLpvError, ValueError):
    pass
