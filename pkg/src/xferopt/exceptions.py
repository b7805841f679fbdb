"""Exception types shared across the package."""

from __future__ import annotations


class TrainingError(RuntimeError):
    """A surrogate model could not be fit to the given data."""


class RunAbortError(RuntimeError):
    """An optimization run had to stop early.

    Carries the partial trace collected up to the failure so callers can
    inspect what happened before the abort.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class KnowledgeBaseFormatError(ValueError):
    """A stored knowledge base file is malformed.

    ``field`` names the offending entry, e.g. ``records[2].tau_max``.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
