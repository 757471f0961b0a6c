"""Exception hierarchy shared across the package."""


class HubrankError(Exception):
    """Base class for all errors raised by this package."""


class InputError(HubrankError, ValueError):
    """Invalid user-supplied data (shapes, ranges, duplicate ids, ...)."""


class DomainError(HubrankError, ValueError):
    """A numeric argument is outside the mathematical domain of an operation."""


class DegenerateLabelsError(HubrankError):
    """Labels carry no usable signal for evidence maximization.

    Raised for constant targets, targets orthogonal to the feature column
    space, or feature matrices of numerical rank zero.
    """


class FormatError(HubrankError):
    """A file does not conform to one of the on-disk formats.

    The byte offset of the violation is recorded when it is known.
    """

    def __init__(self, message: str, *, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
