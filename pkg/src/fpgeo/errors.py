"""Exception hierarchy.

`UsageError` subclasses map to CLI exit code 2 (bad input or parameters);
everything else derived from `FpgeoError` maps to exit code 3.
"""


class FpgeoError(Exception):
    pass


class UsageError(FpgeoError, ValueError):
    pass


class OverlapUnresolvable(FpgeoError):
    """Exact measure requested for a union whose members intersect."""


class ZeroSpacing(UsageError):
    pass


class EmptyWindow(UsageError):
    pass


class GridMismatch(UsageError):
    """Grids with different frames combined in one operation."""


class MollifierTooNarrow(UsageError):
    pass


class RadiusTooSmall(UsageError):
    pass


class InvalidShape(UsageError):
    pass


class GridFormatError(UsageError):
    pass
