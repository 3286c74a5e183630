"""Shared exception root for the package.

Module-specific errors subclass :class:`NudgeKitError` in their home module
so that callers can catch everything the pipeline raises with one type.
"""


class NudgeKitError(Exception):
    """Base class for all errors raised by nudgekit."""
