"""Exception hierarchy shared by the engines and the CLI."""


class HappyDensityError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HappyDensityError, ValueError):
    """Bad user input: digit sequences, selectors, out-of-range arguments."""


class InvalidBaseError(ValidationError):
    pass


class InvalidLengthError(ValidationError):
    pass


class ViolatedAnchorError(ValidationError):
    pass


class NegativeEntryError(ValidationError):
    pass


class ResourceError(HappyDensityError):
    """A computation would exceed its memory or step budget."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class StepBudgetExceeded(ResourceError):
    pass


class EnclosureTooWide(ResourceError):
    pass


class InsufficientTypeTable(ValidationError):
    pass


class CertificationError(HappyDensityError):
    """A certificate precondition does not hold."""


class NotDivisibleByFour(CertificationError):
    pass


class BoundBFailed(CertificationError):
    pass


class ContainmentViolation(CertificationError):
    def __init__(self, message, endpoint):
        super().__init__(message)
        self.endpoint = endpoint


class PostconditionFailure(HappyDensityError, AssertionError):
    """An internal consistency check failed; indicates an arithmetic bug."""
