"""Exception types shared across the toolkit.

Everything raised on purpose derives from ``DiversityError`` so callers
(and the CLI error channel) can catch one base class.
"""


class DiversityError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(DiversityError):
    """A dataset file does not match the expected schema (e.g. missing column)."""


class RowValidationError(DiversityError):
    """A single dataset row failed validation.

    Carries the offending row index so errors are actionable on large files.
    """

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class ItemValidationError(DiversityError):
    """A dataset item (conversation / response set) violates an invariant."""


class CannotSplitError(DiversityError):
    """A conversation is too short to split into context and held-out suffix."""


class InputError(DiversityError):
    """An operation received invalid input (e.g. an empty string)."""


class InsufficientResponsesError(DiversityError):
    """A response set is too small for the requested operation."""


class PoolExhaustedError(DiversityError):
    """A sampler ran out of candidate responses."""


class BackendError(DiversityError):
    """A remote backend call failed after retries.

    ``attempts`` records how many attempts were made before giving up.
    """

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class UndefinedMetricError(DiversityError):
    """A metric is undefined for the given input (e.g. no n-grams at all)."""


class DegenerateEmbeddingError(DiversityError):
    """An embedding has zero norm, so cosine similarity is undefined.

    ``index`` names the offending response within the set.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class UndefinedCorrelationError(DiversityError):
    """Rank correlation is undefined (constant vector or too few points)."""


class AlignmentError(DiversityError):
    """Two inputs that must be joined by conversation id do not align.

    ``unmatched`` lists the conversation ids without a partner.
    """

    def __init__(self, message: str, unmatched: list[str]):
        super().__init__(f"{message}: {', '.join(unmatched)}")
        self.unmatched = unmatched


class ConfigError(DiversityError):
    """A run configuration is invalid or a config file cannot be parsed."""
