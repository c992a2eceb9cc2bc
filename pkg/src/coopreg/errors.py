"""Exception and warning types raised across the package."""


class RegulationError(Exception):
    """Base class for all errors raised by coopreg."""


class SpectraOverlap(RegulationError):
    pass


class Singular(RegulationError):
    pass


class NotHurwitz(RegulationError):
    pass


class NoConvergence(RegulationError):
    pass


class NonPositiveControlDirection(RegulationError):
    pass


class NotControllable(RegulationError):
    pass


class IllConditioned(RegulationError):
    pass


class UnstableObserverPolynomial(RegulationError):
    pass


class DimensionMismatch(RegulationError, ValueError):
    pass


class NonPositiveEigenvalue(RegulationError, ValueError):
    pass


class Diverged(RegulationError):
    pass


class ConfigMismatch(RegulationError):
    pass


class UnknownExample(RegulationError, KeyError):
    pass


class ConfigError(RegulationError):
    pass


class CertificationFailed(RegulationError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class AssumptionViolated(RegulationError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class StepTooLarge(UserWarning):
    """RK4 step is close to (or beyond) the stability boundary."""


class OutsideUncertaintyBox(UserWarning):
    """An uncertainty value was evaluated outside its declared box."""
