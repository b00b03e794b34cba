"""Exception types raised across the package."""


class OscAvgError(Exception):
    """Base class for all package errors."""


class ZeroConstantTerm(OscAvgError, ZeroDivisionError):
    pass


class NonRealMean(OscAvgError, ValueError):
    pass


class NonzeroMean(OscAvgError, ValueError):
    pass


class DegenerateCoefficient(OscAvgError, ZeroDivisionError):
    pass


class LogDegreeOverflow(OscAvgError, OverflowError):
    pass


class ResonanceDetected(OscAvgError):
    """A denominator ``k1*omega(r) + k2*s0`` vanished (to threshold)."""

    def __init__(self, message, mode=None, margin=None):
        super().__init__(message)
        self.mode = mode
        self.margin = margin


class DivisionByR(OscAvgError, ZeroDivisionError):
    pass


class SpecValidationError(OscAvgError, ValueError):
    """A system description violates a structural assumption.

    ``assumption`` names it, e.g. ``"(pFG)"``.
    """

    def __init__(self, message, assumption=None):
        super().__init__(message)
        self.assumption = assumption


class OutOfDomain(OscAvgError, ValueError):
    pass


class NoConvergence(OscAvgError, RuntimeError):
    pass


class AssumptionViolated(OscAvgError):
    pass


class InsufficientSamples(OscAvgError, ValueError):
    pass


class NonPositiveValue(OscAvgError, ValueError):
    pass


class IntegrationError(OscAvgError, RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class PolarSingularity(IntegrationError):
    pass
