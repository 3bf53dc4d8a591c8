"""Error taxonomy shared by the store, engine, API, and CLI.

Each exception maps one-to-one onto an API error code (see api.py) and a
CLI exit path. Validation problems discovered by ``validate_record`` are
returned as plain data, not raised; these exceptions are for operations
that cannot proceed.
"""

from __future__ import annotations


class GovMemError(Exception):
    """Base class for all domain errors."""

    code = "error"


class ValidationError(GovMemError):
    """A record or config value violates a typed invariant."""

    code = "validation"

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []


class NotFoundError(GovMemError):
    """An id or resource does not resolve in the store."""

    code = "not_found"


class ConflictError(GovMemError):
    """A uniqueness rule was hit: duplicate id, second decision, double enqueue."""

    code = "conflict"


class BoundaryViolation(GovMemError):
    """A read or promotion crossed a private-memory boundary."""

    code = "boundary_violation"


class PreconditionError(GovMemError):
    """The operation's stated precondition does not hold for this target."""

    code = "precondition"


class ConfigError(GovMemError):
    """Governance or scenario configuration is missing or malformed."""

    code = "config"


class LockError(ConflictError):
    """A second writer tried to open a store root already held by a live writer."""

    code = "conflict"
