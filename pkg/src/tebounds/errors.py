"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input problems exit with 2, overlap
violations with 3, and internal invariant breaches with 4.
"""


class InputError(ValueError):
    """User-supplied data, configuration, or arguments are invalid."""


class OverlapError(InputError):
    """One or more covariate cells violate the strict overlap requirement."""


class InternalError(RuntimeError):
    """An internal invariant was violated; indicates a bug, not bad input."""


EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OVERLAP = 3
EXIT_INTERNAL = 4
