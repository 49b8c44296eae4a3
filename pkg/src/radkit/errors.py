"""Common exception base for the package.

Every domain error raised by radkit derives from :class:`RadkitError`, so
callers (and the CLI) can catch one type to distinguish domain failures from
programming errors.
"""


class RadkitError(Exception):
    """Base class for all radkit domain errors."""
