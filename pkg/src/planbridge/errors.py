"""Exception hierarchy for the toolkit.

Three families map onto CLI exit codes: configuration and usage problems
exit 1, data problems exit 2, external service problems exit 3.
"""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(ToolkitError):
    """Bad configuration, bad CLI usage, or a referenced path that does not exist."""

    exit_code = 1


class DataError(ToolkitError):
    """Input data violates a contract the pipeline depends on."""

    exit_code = 2


class ExternalServiceError(ToolkitError):
    """A remote dependency (KB, scorer, model backend) failed after retries."""

    exit_code = 3


class DuplicateDocIdError(DataError):
    def __init__(self, doc_id: str, line_no: int):
        super().__init__(f"duplicate doc_id {doc_id!r} at line {line_no}")
        self.doc_id = doc_id
        self.line_no = line_no


class InvalidUrlError(DataError):
    def __init__(self, url: str, detail: str = "not an absolute http(s) URL"):
        super().__init__(f"invalid URL {url!r}: {detail}")
        self.url = url


class KbUnavailableError(ExternalServiceError):
    """The live KB endpoint kept failing; distinct from a URL that resolves to nothing."""


class MarkerCollisionError(DataError):
    def __init__(self, field: str, marker: str):
        super().__init__(f"{field} contains reserved marker {marker!r}")
        self.field = field
        self.marker = marker


class MissingDatasetError(DataError):
    def __init__(self, pairs):
        listed = ", ".join(f"{s}->{t}" for s, t in pairs)
        super().__init__(f"mixture refers to datasets that are not present: {listed}")
        self.pairs = tuple(pairs)


class HoldoutViolationError(DataError):
    def __init__(self, src: str, tgt: str, doc_id: str):
        super().__init__(
            f"example {doc_id!r} has excluded direction {src}->{tgt}"
        )
        self.src = src
        self.tgt = tgt
        self.doc_id = doc_id


class TooSmallError(DataError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"need more than {needed} examples, have {available}")
        self.needed = needed
        self.available = available


class AlignmentError(DataError):
    """Predictions and references do not cover the same doc_ids."""

    def __init__(self, missing, extra):
        parts = []
        if missing:
            parts.append("missing predictions for: " + ", ".join(sorted(missing)))
        if extra:
            parts.append("predictions without references: " + ", ".join(sorted(extra)))
        super().__init__("; ".join(parts) or "misaligned predictions")
        self.missing = frozenset(missing)
        self.extra = frozenset(extra)


class ScorerFailureError(ExternalServiceError):
    def __init__(self, sentence_index: int, detail: str):
        super().__init__(f"entailment scorer failed on sentence {sentence_index}: {detail}")
        self.sentence_index = sentence_index


class BackendFailureError(ExternalServiceError):
    """Model backend returned an error or unusable payload."""
