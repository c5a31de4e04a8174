"""Exception types shared across the package.

Every failure raised by the library is a subclass of CoresetForgeError, so
callers (and the CLI) can distinguish validation problems from numerical
breakdowns with a single except clause.
"""


class CoresetForgeError(Exception):
    """Base class for all library errors."""


class IoError(CoresetForgeError):
    """A file could not be read or written."""


class FormatError(CoresetForgeError):
    """A file's contents do not match the expected format."""


class DomainError(CoresetForgeError):
    """A point violates the declared domain (euclidean / sphere / simplex)."""


class DimensionError(CoresetForgeError):
    """Mismatched lengths or dimensions between inputs."""


class UnsupportedError(CoresetForgeError):
    """The requested operation is not defined for this kernel family."""


class NumericsError(CoresetForgeError):
    """A numerical routine failed (non-finite values, failed solve)."""


class BudgetError(CoresetForgeError):
    """The search budget is too small for the instance."""


class SizeError(CoresetForgeError):
    """The instance is too large for an exhaustive routine."""


class TargetError(CoresetForgeError):
    """A requested coreset size is outside the valid range."""


class ParamError(CoresetForgeError):
    """Invalid configuration or generator parameters."""
