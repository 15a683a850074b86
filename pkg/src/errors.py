"""Exception hierarchy with stable process exit codes."""


class PlumbCalcError(Exception):
    """Base class for all errors raised by the engines."""

    exit_code = 1


class ParseError(PlumbCalcError):
    """Plumbing description is syntactically malformed."""

    exit_code = 2


class ValidationError(PlumbCalcError):
    """Plumbing description parses but violates a structural invariant."""

    exit_code = 2


class ConfigError(PlumbCalcError):
    """Run configuration or command-line overrides are out of range."""

    exit_code = 2


class InvalidParams(PlumbCalcError):
    """Parameters to a generator or engine entry point are invalid."""

    exit_code = 2


class HypothesisError(PlumbCalcError):
    """A vertex choice violates the hypothesis of the surgery sequence."""

    exit_code = 2


class NotNegativeDefinite(PlumbCalcError):
    """Intersection form fails the negative definiteness test.

    Attributes:
        minor_order: Size of the first leading principal minor with the wrong sign.
        minor_value: Value of that minor.
    """

    exit_code = 3

    def __init__(self, minor_order: int, minor_value: int) -> None:
        self.minor_order = minor_order
        self.minor_value = minor_value
        super().__init__(
            f"Intersection form is not negative definite: leading minor of order "
            f"{minor_order} equals {minor_value}"
        )


class CapacityError(PlumbCalcError):
    """A complex or enumeration would exceed its configured size limit."""

    exit_code = 4


class MissingFreePart(PlumbCalcError):
    """Barcode has no infinite bar; the truncation box is too small."""

    exit_code = 4


class ExactnessFailure(PlumbCalcError):
    """A check of the surgery exact sequence failed."""

    exit_code = 5


class AuditFailure(PlumbCalcError):
    """Upsilon falls below the disk bound for some characteristic vector."""

    exit_code = 6


class GradingMismatch(PlumbCalcError):
    """An elementary relation does not preserve the grading."""

    exit_code = 6
