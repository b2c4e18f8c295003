"""Exception types and process exit codes shared across the toolkit."""

from __future__ import annotations


class SfrkitError(Exception):
    """Base class for every error raised by this package."""


class UsageError(SfrkitError):
    """Bad command-line arguments or an invalid run configuration."""


class DomainError(SfrkitError):
    """A value is outside an operation's domain (bad sigma, bad levels, ...)."""


class DecodeError(SfrkitError):
    """Malformed, truncated, or unsupported image stream."""


class IoError(SfrkitError):
    """Unreadable or unwritable files and directories."""


class EdgeFitError(SfrkitError):
    """Edge centroid fit too poor to produce a trustworthy edge profile."""


class DegenerateEdgeError(SfrkitError):
    """Edge too close to axis-aligned; supersampled bins would alias."""


class NormalizationError(SfrkitError):
    """Spectrum has no DC energy to normalize against (flat line spread)."""


class EmptyInputError(SfrkitError):
    """An aggregation was asked to summarize zero usable measurements."""


class StageError(SfrkitError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit code the CLI reports."""
    if isinstance(exc, StageError):
        return exit_code_for(exc.cause)
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, (IoError, OSError)):
        return EXIT_IO
    return EXIT_DATA
