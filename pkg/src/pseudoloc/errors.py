"""Exception hierarchy.

Every error carries a short ``category`` slug; the CLI prints it as the
machine-parsable first token of its one-line failure message.
"""


class PseudolocError(Exception):
    category = "error"


class RejectedInputError(PseudolocError, ValueError):
    """An argument violates an operation's precondition."""

    category = "rejected-input"


class DegenerateInputError(PseudolocError, ValueError):
    """The input is well-formed but carries no usable content."""

    category = "degenerate-input"


class NumericFailureError(PseudolocError, FloatingPointError):
    """A computation produced NaN or Inf."""

    category = "numeric-failure"


class IngestionError(PseudolocError, OSError):
    """A file on disk is missing, malformed, or has the wrong layout."""

    category = "ingestion"

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")
