"""Exception hierarchy shared across the package.

Plain ``ValueError`` is raised for malformed arguments (bad shapes, out of
range parameters); the classes below mark conditions a caller may want to
handle separately, in particular the CLI which maps them to exit codes.
"""


class FuncbandsError(Exception):
    """Base class for package-specific errors."""


class GridMismatchError(FuncbandsError):
    """Curves from different grids were combined in one operation."""


class DegenerateStatisticsError(FuncbandsError):
    """A statistical precondition failed (sample too small, alpha below the
    admissible range, pathological all-zero residual envelope, ...)."""


class CurveFormatError(FuncbandsError):
    """A curve table or band document could not be parsed."""
