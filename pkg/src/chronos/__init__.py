"""Chronos: an evaluation platform for cascaded KGQA systems.

The package covers the full loop: dataset curation and augmentation,
multi-annotator gold labels with agreement statistics, pipeline judging
against a versioned knowledge-graph snapshot, loss bucketization, KG
quality metrics, and a persistent run ledger served over HTTP.
"""

from .answers import AnswerValue, answer_type_for, answers_equal, normalize_surface
from .errors import ChronosError
from .kg_store import (
    EntityRecord,
    FactDelta,
    FactRecord,
    KgSnapshot,
    RelationSpec,
    StructuredQuery,
    build_snapshot,
    delta_facts,
    execute_structured_query,
    load_snapshot,
    write_snapshot,
)
from .pipeline import FaultKind, SystemPrediction, inject_fault, run_reference_pipeline
from .metrics import JudgedQuery, MetricReport, judge_query
from .buckets import BUCKETS, assign_bucket, summarize_buckets
from .runs import EvaluationRun, load_run, load_run_config, run_evaluation

__version__ = "0.1.0"

__all__ = [
    "AnswerValue",
    "BUCKETS",
    "ChronosError",
    "EntityRecord",
    "EvaluationRun",
    "FactDelta",
    "FactRecord",
    "FaultKind",
    "JudgedQuery",
    "KgSnapshot",
    "MetricReport",
    "RelationSpec",
    "StructuredQuery",
    "SystemPrediction",
    "__version__",
    "answer_type_for",
    "answers_equal",
    "assign_bucket",
    "build_snapshot",
    "delta_facts",
    "execute_structured_query",
    "inject_fault",
    "judge_query",
    "load_run",
    "load_run_config",
    "load_snapshot",
    "normalize_surface",
    "run_evaluation",
    "run_reference_pipeline",
    "summarize_buckets",
    "write_snapshot",
]
