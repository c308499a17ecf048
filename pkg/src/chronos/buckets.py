"""Root-cause attribution: every failed query lands in exactly one of
seven loss buckets, three for query understanding and four for the graph.

Predicates run upstream-first, so a query that both mispredicted its
relation and hit a KG gap is charged to the relation. A fully correct
query gets no bucket at all; correct + bucketed always partitions a run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError
from .metrics import JudgedQuery
from .pipeline import FaultKind, FaultScenario

QUE_BUCKETS = (
    "QUE_UnsupportedRelation",
    "QUE_RelationPredictionError",
    "QUE_EntityPredictionError",
)
KGE_BUCKETS = (
    "KGE_MissingEntity",
    "KGE_ExecutionError",
    "KGE_MissingFact",
    "KGE_IncorrectFact",
)
BUCKETS = QUE_BUCKETS + KGE_BUCKETS
BUCKET_FAMILY = {b: ("QUE" if b in QUE_BUCKETS else "KGE") for b in BUCKETS}

# The canonical single-fault scenario -> bucket diagonal.
EXPECTED_BUCKET = {
    FaultKind.UNSUPPORTED_RELATION: "QUE_UnsupportedRelation",
    FaultKind.WRONG_RELATION: "QUE_RelationPredictionError",
    FaultKind.WRONG_ENTITY: "QUE_EntityPredictionError",
    FaultKind.ENTITY_ABSENT_FROM_KG: "KGE_MissingEntity",
    FaultKind.ENGINE_FAILURE: "KGE_ExecutionError",
    FaultKind.WRONG_FACT_VALUE: "KGE_IncorrectFact",
    FaultKind.DROP_FACT: "KGE_MissingFact",
}

SANKEY_ROOT = "All"
SANKEY_CORRECT = "Correct"


@dataclass(frozen=True)
class BucketAssignment:
    query_id: str
    bucket: str | None
    rationale: str


@dataclass(frozen=True)
class BucketSummary:
    counts: dict[str, int]
    family_counts: dict[str, int]
    correct_count: int
    total: int
    nodes: tuple[str, ...]
    edges: tuple[dict, ...]


def assign_bucket(judged: JudgedQuery) -> BucketAssignment:
    """First matching predicate wins; no predicate means fully correct.

    A prediction-free query with an out-of-catalog gold relation counts as
    unsupported (nothing the system could have predicted); an attempted
    pipeline that never reached fact retrieval is charged as an execution
    error.
    """
    j = judged
    if j.fully_correct:
        return BucketAssignment(query_id=j.query_id, bucket=None, rationale="fully correct")

    relation_agree = j.relation_correct or (not j.has_relation_pred and j.gold_relation is None)
    entity_agree = j.entity_correct or (not j.has_entity_pred and not j.gold_has_entity)

    if (j.has_relation_pred and not j.relation_supported) or (
        not j.has_relation_pred and not j.gold_relation_supported
    ):
        rationale = (
            "predicted relation is not in the supported list"
            if j.has_relation_pred
            else "no prediction and gold relation is not in the supported list"
        )
        return BucketAssignment(j.query_id, "QUE_UnsupportedRelation", rationale)

    if not relation_agree:
        return BucketAssignment(
            j.query_id,
            "QUE_RelationPredictionError",
            "predicted relation does not match the gold relation",
        )

    if j.gold_in_kg and not entity_agree:
        return BucketAssignment(
            j.query_id,
            "QUE_EntityPredictionError",
            "predicted entity does not match the dominant gold entity",
        )

    if not j.gold_in_kg or j.fact_status == "missing_entity":
        return BucketAssignment(j.query_id, "KGE_MissingEntity", "gold entity not in the KG")

    if j.fact_status == "execution_failure":
        return BucketAssignment(j.query_id, "KGE_ExecutionError", "KG query failure")
    if j.fact_status == "not_attempted":
        return BucketAssignment(j.query_id, "KGE_ExecutionError", "fact retrieval not attempted")

    if j.fact_status == "no_fact":
        return BucketAssignment(j.query_id, "KGE_MissingFact", "relevant fact absent from the KG")

    return BucketAssignment(
        j.query_id, "KGE_IncorrectFact", "retrieved fact does not match the gold answer"
    )


def summarize_buckets(assignments: list[BucketAssignment]) -> BucketSummary:
    """Counts, family subtotals, and the All -> family -> bucket sankey.
    Zero-weight edges are kept so the diagram shape is stable."""
    counts = {bucket: 0 for bucket in BUCKETS}
    correct = 0
    for assignment in assignments:
        if assignment.bucket is None:
            correct += 1
        else:
            counts[assignment.bucket] += 1
    family_counts = {
        "QUE": sum(counts[b] for b in QUE_BUCKETS),
        "KGE": sum(counts[b] for b in KGE_BUCKETS),
    }
    nodes = (SANKEY_ROOT, SANKEY_CORRECT, "QUE", "KGE") + BUCKETS
    edges: list[dict] = [
        {"from": SANKEY_ROOT, "to": SANKEY_CORRECT, "weight": correct},
        {"from": SANKEY_ROOT, "to": "QUE", "weight": family_counts["QUE"]},
        {"from": SANKEY_ROOT, "to": "KGE", "weight": family_counts["KGE"]},
    ]
    for bucket in BUCKETS:
        edges.append({"from": BUCKET_FAMILY[bucket], "to": bucket, "weight": counts[bucket]})
    return BucketSummary(
        counts=counts,
        family_counts=family_counts,
        correct_count=correct,
        total=len(assignments),
        nodes=nodes,
        edges=tuple(edges),
    )


def attribution_check(
    scenarios: list[tuple[FaultScenario, JudgedQuery]]
) -> dict[str, dict[str, int]]:
    """Confusion matrix of injected fault vs assigned bucket. A clean
    taxonomy puts every count on the expected diagonal."""
    matrix: dict[str, dict[str, int]] = {
        kind.value: {bucket: 0 for bucket in BUCKETS + ("none",)} for kind in FaultKind
    }
    for scenario, judged in scenarios:
        assignment = assign_bucket(judged)
        matrix[scenario.fault.value][assignment.bucket or "none"] += 1
    return matrix


def sankey_payload(summary: BucketSummary) -> dict:
    return {"nodes": list(summary.nodes), "edges": [dict(e) for e in summary.edges]}


def save_buckets(assignments: list[BucketAssignment], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for assignment in assignments:
            row: dict = {"query_id": assignment.query_id, "rationale": assignment.rationale}
            if assignment.bucket is not None:
                row["bucket"] = assignment.bucket
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_buckets(path: str | Path) -> list[BucketAssignment]:
    assignments: list[BucketAssignment] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{Path(path).name}:{lineno}: invalid json") from exc
            bucket = row.get("bucket")
            if bucket is not None and bucket not in BUCKETS:
                raise ParseError(f"{Path(path).name}:{lineno}: unknown bucket {bucket!r}")
            assignments.append(
                BucketAssignment(
                    query_id=str(row["query_id"]),
                    bucket=bucket,
                    rationale=str(row.get("rationale", "")),
                )
            )
    return assignments
