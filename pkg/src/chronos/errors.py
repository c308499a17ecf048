"""Exception types shared across the package.

Every domain failure derives from ChronosError so the CLI can map them to
exit status 1 while genuine bugs escape as ordinary tracebacks.
"""

from __future__ import annotations


class ChronosError(Exception):
    """Base class for all domain errors."""


class ParseError(ChronosError):
    """A serialized record could not be decoded; message carries file:line."""


class ReferentialError(ChronosError):
    """A record references an entity or relation absent from the snapshot."""


class DuplicateId(ChronosError):
    """Two records claim the same identifier within one dataset."""


class InvalidN(ChronosError):
    """Sample size out of range for the population."""


class NoSpan(ChronosError):
    """Gold label has no entity span to substitute."""


class NoPeers(ChronosError):
    """No other entity shares the ontology type."""


class MissingGold(ChronosError):
    """A query has no aggregated gold label."""


class EmptyInput(ChronosError):
    """An operation received an empty input it cannot default."""


class MixedQueryIds(ChronosError):
    """Annotations for a single aggregation span several query ids."""


class Degenerate(ChronosError):
    """Agreement statistic undefined: expected disagreement is zero."""


class MissingItems(ChronosError):
    """A qualification submission does not cover the answer key."""


class IdMismatch(ChronosError):
    """Prediction and gold label disagree on the query id."""


class NotCorrect(ChronosError):
    """Fault injection requires a fully correct base prediction."""


class MixedSystems(ChronosError):
    """Macro aggregation over reports from different systems."""


class UnknownMetric(ChronosError):
    """Trend query names a metric the report schema does not define."""


class TransportError(ChronosError):
    """External replay failed after exhausting retries."""


class MappingError(ChronosError):
    """External response does not conform to the wire schema."""


class NotFound(ChronosError):
    """Ledger or task lookup for an unknown id."""


class StateConflict(ChronosError):
    """Write rejected because the target is closed or already settled."""


class CorruptRecord(ChronosError):
    """Persisted run fails its digest check."""


class LedgerWriteError(ChronosError):
    """Run directory could not be written."""


class MissingPredictions(ChronosError):
    """Evaluation requested external predictions that are not cached."""
