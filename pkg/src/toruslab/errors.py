"""Exception hierarchy.

The CLI maps :class:`NumericalError` to exit code 3 and :class:`FormatError`
to exit code 4; everything else that escapes is a bug.
"""


class ToruslabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ToruslabError, ValueError):
    """Argument outside the domain of an operation (index range, odd N, ...)."""


class CutoffError(DomainError):
    """Fourier cutoff too large for the Hilbert-space dimension."""


class ParityError(DomainError):
    """Symplectic matrix violates the checkerboard (quantizability) condition."""


class NumericalError(ToruslabError, RuntimeError):
    """A numerical procedure failed to meet its certification contract."""


class FormatError(ToruslabError, OSError):
    """Malformed or unsupported file."""
