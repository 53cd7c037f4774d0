"""Exception types shared across the package."""


class PerlabError(Exception):
    """Base class for all errors raised by perlab."""


class DomainError(PerlabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class EscapeError(PerlabError):
    """An orbit left the phase space of the system."""

    def __init__(self, index, point=None):
        self.index = index
        self.point = point
        super().__init__(f"orbit escaped the domain at iterate {index}")


class CapabilityError(PerlabError):
    """The requested operation is not available for this system."""


class NumericError(PerlabError, ArithmeticError):
    """A floating point computation overflowed or lost all precision."""


class InsufficientDataError(PerlabError, ValueError):
    pass


class PreconditionError(PerlabError, ValueError):
    pass


class EliminationDegeneracyError(PerlabError, ArithmeticError):
    """An intermediate resultant vanished identically."""


class SchemaError(PerlabError, ValueError):
    """A serialized input does not follow the expected format."""

    def __init__(self, message, where=None):
        self.where = where
        self.message = message
        super().__init__(message if where is None else f"{where}: {message}")
