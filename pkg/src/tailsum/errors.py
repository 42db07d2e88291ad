"""Exception hierarchy shared by the library and the CLI."""


class TailsumError(Exception):
    """Base class for library errors."""


class DomainError(TailsumError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapabilityError(TailsumError):
    """The request is well posed but not supported (order, dimension, grid size)."""


class NumericalError(TailsumError, ArithmeticError):
    """A numerical routine failed (bracketing, degenerate conditioning)."""
