"""Exception hierarchy shared across the package.

Two failure families matter to callers: problems with the data they
handed us, and bugs or broken invariants inside the library.  The CLI
maps these onto distinct exit codes, so keep the split honest and do
not raise bare exceptions from library code.
"""


class SmikitError(Exception):
    """Base class for everything raised deliberately by this package."""


class DataError(SmikitError):
    """Invalid, malformed, or inconsistent input data.

    Raised for unreadable files, schema violations, out-of-range
    values, and statistical preconditions the caller's data fails to
    meet (for example a degenerate normalization range).
    """


class InternalError(SmikitError):
    """A broken invariant that indicates a bug, not bad input."""
