"""Exception types raised by mixcub.

Guard violations (inputs outside the supported range) derive from
:class:`GuardError`; the CLI maps these to exit code 2.
"""


class MixcubError(Exception):
    """Base class for all library errors."""


class GuardError(MixcubError, ValueError):
    """Input outside the supported range."""


class OverflowGuard(GuardError):
    pass


class RangeGuard(GuardError):
    pass


class SizeGuard(GuardError):
    pass


class CapExceeded(GuardError):
    pass


class DimensionMismatch(MixcubError, ValueError):
    pass


class MissingExactIntegral(MixcubError, ValueError):
    pass


class UnsupportedExponent(GuardError):
    pass


class InsufficientCells(MixcubError, RuntimeError):
    """Fewer free cells than the pigeonhole argument guarantees."""


class VanishingCheckFailed(MixcubError, RuntimeError):
    pass


class DegenerateFit(MixcubError, ValueError):
    pass
