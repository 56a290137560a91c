"""Exception hierarchy shared across the package.

``DataError`` subclasses map to CLI exit code 2 and to HTTP 4xx responses;
anything else bubbling out of the library is an internal error (exit code 3).
"""


class KgxError(Exception):
    """Base class for all library errors."""

    code = "error"


class DataError(KgxError):
    """Invalid input data (malformed file, schema violation, bad value)."""

    code = "data_error"


class ValidationError(DataError):
    """A record or header violates the system-output schema."""

    code = "validation_error"

    def __init__(self, message: str, *, line: int | None = None,
                 field: str | None = None, rule: str | None = None):
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field {field!r}")
        if rule is not None:
            parts.append(f"rule: {rule}")
        suffix = f" ({', '.join(parts)})" if parts else ""
        super().__init__(message + suffix)
        self.line = line
        self.field = field
        self.rule = rule


class FormatError(DataError):
    """A binary or text artifact does not match its declared format."""

    code = "format_error"


class ConfigurationError(KgxError):
    """A required resource or configuration value is missing or inconsistent."""

    code = "configuration_error"


class NotFoundError(KgxError):
    """A referenced system, bucket, or entry does not exist."""

    code = "not_found"


class ComparabilityError(DataError):
    """Systems cannot be compared (different datasets, record ids, or rank basis)."""

    code = "comparability_error"


class TrainingError(KgxError):
    """Model training diverged or produced non-finite values."""

    code = "training_error"

    def __init__(self, message: str, *, epoch: int | None = None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
        self.epoch = epoch


class InsufficientViolationsError(KgxError):
    """Not enough symmetry violations to fill a debugging set."""

    code = "insufficient_violations"


class StorageError(KgxError):
    """The system store could not complete a write."""

    code = "storage_error"
