class PeriodsError(Exception):
    """
    Base class for all errors raised by fiberperiods.

    :ivar exit_code: Process exit status used by the command line interface.
    """
    exit_code = 4


class ToleranceError(PeriodsError):
    """
    A residual check exceeded its tolerance.
    """
    exit_code = 2


class NonIntegralityError(ToleranceError):
    """
    A matrix or vector expected to be integral is not within rounding tolerance of one.
    """


class StructureViolationError(ToleranceError):
    """
    A computed matrix does not have the expected zero pattern or closed-form entries.
    """


class NonIntegralCocycleError(ToleranceError):
    """
    A cocycle value solved from integrals is not integral.
    """


class ConditionViolatedError(ToleranceError):
    """
    An exact precondition on integer data (e.g. base point independence) does not hold.
    """


class ConfigurationError(PeriodsError):
    """
    Invalid precision, path or command configuration.
    """
    exit_code = 3


class CacheError(ConfigurationError):
    """
    Cache directory or record could not be read or written.
    """


class PoleOfGammaError(PeriodsError):
    """
    The gamma function was evaluated at a non-positive integer.
    """


class NonConvergenceError(PeriodsError):
    """
    A quadrature or series did not reach the requested tolerance.
    """


class InstabilityError(PeriodsError):
    """
    Richardson extrapolation columns diverge.
    """


class OutOfDiskError(PeriodsError):
    """
    A local series was evaluated outside its trusted disk of convergence.
    """


class StepCollapseError(PeriodsError):
    """
    Analytic continuation step size fell below the precision floor.
    """


class ClearanceError(PeriodsError):
    """
    A contour cannot be drawn with the required distance to singular points or poles.
    """


class InconsistentSystemError(PeriodsError):
    """
    A linear system for cocycle coefficients has no consistent solution.
    """


class PoleError(PeriodsError):
    """
    A meromorphic form was evaluated at one of its poles.
    """


class RootNumberAmbiguityError(PeriodsError):
    """
    The functional equation check does not single out a root number.
    """
