"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2); numerical
failures derive from :class:`NumericalError` (CLI exit code 3).
"""


class SegCCRError(Exception):
    """Base class for all package errors."""


class InputError(SegCCRError, ValueError):
    """Malformed or inconsistent user input."""


class NumericalError(SegCCRError, ArithmeticError):
    """A fit or test could not produce a valid number."""


class LengthMismatch(InputError):
    pass


class NonFinite(InputError):
    pass


class TooFew(InputError):
    pass


class DomainError(InputError):
    """Argument outside the mathematical domain of the operation."""


class GridMismatch(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingColumn(InputError):
    pass


class UnknownWorkflow(InputError):
    pass


class NonmonotoneModel(NumericalError):
    """Some category probability is not strictly positive."""


class AllFitsFailed(NumericalError):
    pass


class TooManyFailures(NumericalError):
    pass


class SingularInformation(NumericalError):
    pass


class DidNotConverge(RuntimeWarning):
    """Issued (not raised) when an inner optimization hits its iteration cap."""
