"""Exception hierarchy.

Every pipeline failure derives from :class:`AbelPropError`, which carries an
optional ``stage`` tag so the CLI can report where the pipeline stopped.
"""


class AbelPropError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, stage=None, **values):
        super().__init__(message)
        self.stage = stage
        self.values = values

    def __str__(self):
        msg = super().__str__()
        if self.values:
            extra = ", ".join(f"{k}={v!r}" for k, v in self.values.items())
            msg = f"{msg} ({extra})"
        if self.stage:
            msg = f"[{self.stage}] {msg}"
        return msg


class DomainError(AbelPropError, ValueError):
    pass


class IntegrationBlowup(AbelPropError):
    """Raised when the integrator produces a non-finite state."""

    def __init__(self, message, t_last, **values):
        super().__init__(message, t_last=t_last, **values)
        self.t_last = t_last


class InvalidConstant(DomainError):
    pass


class DegenerateCubic(DomainError):
    pass


class NegativeDiscriminant(DomainError):
    """Cardano's formula needs ``delta1 >= 0``."""

    def __init__(self, message, delta1, **values):
        super().__init__(message, delta1=delta1, **values)
        self.delta1 = delta1


class ComplexPair(DomainError):
    """The remaining two roots form a complex-conjugate pair."""

    def __init__(self, message, delta2, roots=None, **values):
        super().__init__(message, delta2=delta2, **values)
        self.delta2 = delta2
        self.roots = roots


class ZeroShift(DomainError):
    pass


class RefinementFailed(AbelPropError):
    pass


class NonInvertibleSeries(DomainError):
    pass


class InitialVelocityError(DomainError):
    pass


class BranchMismatch(DomainError):
    pass


class InsufficientData(AbelPropError):
    pass


class ConfigError(AbelPropError):
    pass


class LooseRootWarning(UserWarning):
    """A root was accepted at the relaxed multiple-root tolerance."""


class ConvergenceWarning(UserWarning):
    pass
