"""Exception hierarchy shared across the toolkit.

The CLI maps these onto distinct exit codes: usage problems exit 2
(argparse), DataError and subclasses exit 3, NumericError exits 4.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ToolkitError):
    """Invalid input data: schema violations, malformed files, bad config."""


class DimensionMismatchError(DataError):
    """Shapes or embedding dimensions that cannot be composed."""


class MetricUndefinedError(DataError):
    """A metric requested on inputs where it is undefined (e.g. single-class AUROC)."""


class CheckpointError(DataError):
    """Unreadable, inconsistent, or unsupported checkpoint content."""


class NumericError(ToolkitError):
    """Non-finite values produced at runtime (diverged training, overflow)."""
