"""Exception classes shared across the package."""


class QallocError(Exception):
    """Base class for all package-specific errors."""


class ParseError(QallocError):
    """A text input could not be parsed (malformed cell, bad column count)."""


class ValidationError(QallocError):
    """Data violates a structural invariant (duplicates, bad dimensions)."""


class ConfigError(QallocError):
    """A configuration value is missing, unknown, or inconsistent."""


class SolverError(QallocError):
    """A solve failed in a way that cannot be expressed as a status."""


class AuditError(QallocError):
    """An independently re-checked solution violates its raw constraints."""
