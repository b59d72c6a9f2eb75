"""Exception types shared across the toolkit.

Every error carries a stable machine-readable ``code`` (its class name) so the
HTTP service can surface failures without string matching.
"""

from __future__ import annotations


class PtdError(Exception):
    """Base class for all toolkit errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class EmptyPhrase(PtdError):
    """Normalization left zero tokens."""


class ParseError(PtdError):
    """Malformed record in a line-delimited input file."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(PtdError):
    """Two catalog records share a sku_id."""

    def __init__(self, sku_id: str):
        super().__init__(f"duplicate sku_id {sku_id!r}")
        self.sku_id = sku_id


class NegativeCount(PtdError):
    """A count field is negative."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DegenerateCorpus(PtdError):
    """Fewer than two phrases survive mining; min-max normalization undefined."""


class EmptyLexicon(PtdError):
    """A required lexicon (brands, units, stopwords) is empty."""


class SchemaMismatch(PtdError):
    """Feature vector does not match the schema the model was trained on."""


class EmptyPool(PtdError):
    """A training pool that must be non-empty is empty."""

    def __init__(self, which: str):
        super().__init__(f"{which} pool is empty")
        self.which = which


class UnknownPhrase(PtdError):
    """A label decision references a phrase not in the unlabeled pool."""


class DuplicateDecision(PtdError):
    """Two decisions in one batch reference the same phrase."""


class EmptyTruth(PtdError):
    """Coverage requested against an empty truth set."""


class ConfigError(PtdError):
    """Inconsistent or invalid configuration."""


class UnknownSession(PtdError):
    """Labeling session id does not exist."""


class StaleBatch(PtdError):
    """Batch token does not match the open batch (a concurrent submission won)."""
