"""Deterministic noisy annotators, so the whole annotation path is
testable without humans.

Each simulated grader starts from the intended gold label and corrupts
fields at a configured rate. The RNG is seeded per (seed, annotator,
query), which makes every record reproducible in isolation regardless of
batch order.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace

from .annotation import AnnotationRecord, GoldLabel
from .kg_store import KgSnapshot

SIMULATED_AT = "1970-01-01T00:00:00Z"

DEFAULT_PANEL = (
    ("sim-careful", 0.0),
    ("sim-typical", 0.08),
    ("sim-hasty", 0.2),
)


@dataclass(frozen=True)
class SimulatedAnnotator:
    annotator_id: str
    error_rate: float
    # An adversary answers at random regardless of the gold label.
    adversarial: bool = False


def default_panel() -> list[SimulatedAnnotator]:
    return [SimulatedAnnotator(annotator_id=a, error_rate=r) for a, r in DEFAULT_PANEL]


def _rng_for(seed: int, annotator_id: str, query_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{annotator_id}:{query_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _other(rng: random.Random, pool: list[str], current: str | None) -> str | None:
    choices = sorted(x for x in pool if x != current)
    return rng.choice(choices) if choices else current


def annotate_query(
    gold: GoldLabel,
    annotator: SimulatedAnnotator,
    snapshot: KgSnapshot,
    seed: int,
) -> AnnotationRecord:
    """One grader's (possibly corrupted) reading of one query."""
    rng = _rng_for(seed, annotator.annotator_id, gold.query_id)

    def slips() -> bool:
        return annotator.adversarial or rng.random() < annotator.error_rate

    entity = gold.entity
    if entity is not None and slips():
        wrong = _other(rng, list(snapshot.entities), entity.entity_id)
        if wrong is not None:
            entity = replace(entity, entity_id=wrong)

    relation = gold.relation
    if slips():
        relation = _other(rng, list(snapshot.relations), relation)

    answer = gold.answer
    answer_type = gold.answer_type
    if slips():
        # The lazy wrong answer: declare the query unanswerable.
        answer = None
        answer_type = "Unanswerable"

    properties = gold.properties
    if slips() and properties:
        properties = frozenset(sorted(properties)[:-1])

    return AnnotationRecord(
        query_id=gold.query_id,
        annotator_id=annotator.annotator_id,
        knowledge_seeking=gold.knowledge_seeking,
        properties=properties,
        entity=entity,
        relation=relation,
        answer=answer,
        answer_type=answer_type,
        annotated_at=SIMULATED_AT,
    )


def simulate_annotations(
    golds: list[GoldLabel],
    snapshot: KgSnapshot,
    annotators: list[SimulatedAnnotator] | None = None,
    seed: int = 0,
) -> list[AnnotationRecord]:
    panel = annotators if annotators is not None else default_panel()
    records: list[AnnotationRecord] = []
    for gold in golds:
        for annotator in panel:
            records.append(annotate_query(gold, annotator, snapshot, seed))
    return records
