"""A deterministic single-hop KGQA system under test.

Stage chain: relation classification, mention detection, candidate
retrieval, context ranking, structured query generation, fact retrieval.
Relation classification runs first so the classified relation can inform
entity ranking. Every stage is a pure function of (query text, snapshot);
a stage producing nothing truncates the rest of the chain.

`inject_fault` manufactures minimally corrupted variants of a fully
correct prediction, one per failure class, for attribution testing.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, replace
from datetime import date, timedelta
from pathlib import Path

from .annotation import GoldLabel
from .answers import AnswerValue, answer_from_json, answer_to_json, answers_equal, normalize_surface
from .datasets import QueryRecord
from .errors import EmptyInput, NotCorrect, ParseError
from .kg_store import (
    FactRecord,
    FactResult,
    KgSnapshot,
    RelationSpec,
    StructuredQuery,
    derive_snapshot,
    execute_structured_query,
    lookup_entities_by_alias,
)

REFERENCE_SYSTEM_ID = "reference"
# Fixed stamp keeps reference predictions byte-stable across runs.
REFERENCE_PRODUCED_AT = "1970-01-01T00:00:00Z"


@dataclass(frozen=True)
class MentionSpan:
    start: int
    end: int
    surface: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span [{self.start}, {self.end})")


@dataclass(frozen=True)
class EntityCandidate:
    entity_id: str
    score: float
    rank: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError("score out of [0, 1]")
        if self.rank < 1:
            raise ValueError("ranks start at 1")


@dataclass(frozen=True)
class SystemPrediction:
    query_id: str
    system_id: str
    produced_at: str
    predicted_relation: str | None = None
    predicted_entity: tuple[str, MentionSpan] | None = None
    structured_query: StructuredQuery | None = None
    fact_result: FactResult | None = None
    answer: AnswerValue | None = None

    def __post_init__(self) -> None:
        if self.structured_query is not None and (
            self.predicted_relation is None or self.predicted_entity is None
        ):
            raise ValueError("structured query requires relation and entity predictions")
        if self.fact_result is not None and self.structured_query is None:
            raise ValueError("fact result requires a structured query")
        if self.answer is not None and (
            self.fact_result is None or self.fact_result.status != "answer"
        ):
            raise ValueError("answer requires an answer-status fact result")


class FaultKind(enum.Enum):
    UNSUPPORTED_RELATION = "UnsupportedRelation"
    WRONG_RELATION = "WrongRelation"
    WRONG_ENTITY = "WrongEntity"
    ENTITY_ABSENT_FROM_KG = "EntityAbsentFromKg"
    ENGINE_FAILURE = "EngineFailure"
    WRONG_FACT_VALUE = "WrongFactValue"
    DROP_FACT = "DropFact"


@dataclass(frozen=True)
class FaultScenario:
    """A corrupted (prediction, snapshot) pair exhibiting exactly one fault.

    KG faults swap in a derived snapshot; prediction faults keep the
    original snapshot untouched.
    """

    fault: FaultKind
    prediction: SystemPrediction
    snapshot: KgSnapshot
    gold: GoldLabel


def _token_spans(text: str) -> list[tuple[int, int]]:
    return [(m.start(), m.end()) for m in re.finditer(r"\w+", text, re.UNICODE)]


def detect_mentions(query: str, snapshot: KgSnapshot) -> list[MentionSpan]:
    """Greedy longest-alias match over the query's token windows.

    Windows are compared against the alias index after the same surface
    normalization the index was built with, so matches are non-overlapping
    and scanned left to right, longest first at each position.
    """
    tokens = _token_spans(query)
    if not tokens:
        return []
    max_window = max((len(alias.split(" ")) for alias in snapshot.alias_index), default=0)
    spans: list[MentionSpan] = []
    i = 0
    while i < len(tokens):
        matched = False
        for j in range(min(len(tokens), i + max_window) - 1, i - 1, -1):
            start, end = tokens[i][0], tokens[j][1]
            if normalize_surface(query[start:end]) in snapshot.alias_index:
                spans.append(MentionSpan(start=start, end=end, surface=query[start:end]))
                i = j + 1
                matched = True
                break
        if not matched:
            i += 1
    return spans


def retrieve_candidates(mention: MentionSpan, snapshot: KgSnapshot) -> list[EntityCandidate]:
    """All entities sharing the mention's alias, scored by the context-free
    prior 1/n and ranked with entity_id tie-breaks."""
    entities = lookup_entities_by_alias(snapshot, mention.surface)
    if not entities:
        return []
    score = 1.0 / len(entities)
    return [
        EntityCandidate(entity_id=e.entity_id, score=score, rank=rank)
        for rank, e in enumerate(sorted(entities, key=lambda e: e.entity_id), start=1)
    ]


def rank_candidates(
    query: str,
    candidates: list[EntityCandidate],
    snapshot: KgSnapshot,
    relation: str | None = None,
) -> EntityCandidate | None:
    """Context re-ranking: candidates that actually hold a fact for the
    classified relation beat those that do not."""
    if not candidates:
        return None

    def sort_key(c: EntityCandidate) -> tuple:
        boost = 1 if relation and snapshot.facts_for(c.entity_id, relation) else 0
        return (-boost, -c.score, c.entity_id)

    return sorted(candidates, key=sort_key)[0]


def classify_relation(query: str, relations: dict[str, RelationSpec]) -> str | None:
    """First supported relation whose surface pattern occurs as a contiguous
    token sequence in the normalized query; catalog order, then pattern
    order, decides ties."""
    query_tokens = normalize_surface(query).split(" ")
    for spec in relations.values():
        if not spec.supported:
            continue
        for pattern in spec.surface_patterns:
            pattern_tokens = normalize_surface(pattern).split(" ")
            if not pattern_tokens or pattern_tokens == [""]:
                continue
            width = len(pattern_tokens)
            for offset in range(len(query_tokens) - width + 1):
                if query_tokens[offset : offset + width] == pattern_tokens:
                    return spec.relation_id
    return None


def generate_structured_query(entity: str, relation: str) -> StructuredQuery:
    if not entity or not relation:
        raise EmptyInput("structured query needs both an entity and a relation")
    return StructuredQuery(subject=entity, relation=relation)


def run_reference_pipeline(query: QueryRecord, snapshot: KgSnapshot) -> SystemPrediction:
    """Compose the stage chain into one SystemPrediction."""
    relation = classify_relation(query.text, snapshot.relations)

    entity: tuple[str, MentionSpan] | None = None
    for mention in detect_mentions(query.text, snapshot):
        top = rank_candidates(query.text, retrieve_candidates(mention, snapshot), snapshot, relation)
        if top is not None:
            entity = (top.entity_id, mention)
            break

    structured: StructuredQuery | None = None
    fact_result: FactResult | None = None
    answer: AnswerValue | None = None
    if relation is not None and entity is not None:
        structured = generate_structured_query(entity[0], relation)
        fact_result = execute_structured_query(snapshot, structured)
        if fact_result.status == "answer":
            answer = fact_result.primary()

    return SystemPrediction(
        query_id=query.query_id,
        system_id=REFERENCE_SYSTEM_ID,
        produced_at=REFERENCE_PRODUCED_AT,
        predicted_relation=relation,
        predicted_entity=entity,
        structured_query=structured,
        fact_result=fact_result,
        answer=answer,
    )


def _assert_fully_correct(prediction: SystemPrediction, gold: GoldLabel) -> None:
    ok = (
        gold.relation is not None
        and prediction.predicted_relation == gold.relation
        and gold.entity is not None
        and prediction.predicted_entity is not None
        and prediction.predicted_entity[0] == gold.entity.entity_id
        and prediction.fact_result is not None
        and prediction.fact_result.status == "answer"
        and gold.answer is not None
        and answers_equal(prediction.answer, gold.answer)
    )
    if not ok:
        raise NotCorrect(f"{prediction.query_id}: base prediction is not fully correct")


def _next_cyclic(pool: list[str], current: str) -> str:
    ordered = sorted(pool)
    index = ordered.index(current) if current in ordered else -1
    return ordered[(index + 1) % len(ordered)]


def _perturb_value(value: AnswerValue, snapshot: KgSnapshot) -> AnswerValue:
    """A same-kind value guaranteed unequal under answer comparison."""
    if value.kind in ("number", "number_unit"):
        return replace(value, value=float(value.value) + 1.0)  # type: ignore[arg-type]
    if value.kind == "date":
        moved = date.fromisoformat(str(value.value)) if isinstance(value.value, str) else value.value
        return replace(value, value=moved + timedelta(days=1))  # type: ignore[operator]
    if value.kind == "boolean":
        return replace(value, value=not bool(value.value))
    if value.kind == "entity":
        return replace(value, value=_next_cyclic(list(snapshot.entities), str(value.value)))
    return replace(value, value=f"{value.value} (revised)")


def inject_fault(
    prediction: SystemPrediction,
    gold: GoldLabel,
    snapshot: KgSnapshot,
    fault: FaultKind,
) -> FaultScenario:
    """Corrupt a fully correct prediction to exhibit exactly one failure.

    Prediction faults edit a single prediction field and leave retrieval
    untouched; KG faults derive a corrupted snapshot and re-execute the
    structured query against it so downstream state stays consistent.
    """
    _assert_fully_correct(prediction, gold)
    assert gold.entity is not None and gold.relation is not None  # narrowed above
    subject = gold.entity.entity_id
    relation = gold.relation
    structured = prediction.structured_query

    if fault is FaultKind.UNSUPPORTED_RELATION:
        corrupted = replace(prediction, predicted_relation=f"unlisted:{relation}")
        return FaultScenario(fault=fault, prediction=corrupted, snapshot=snapshot, gold=gold)

    if fault is FaultKind.WRONG_RELATION:
        supported = [r.relation_id for r in snapshot.relations.values() if r.supported]
        if len(supported) < 2:
            raise NotCorrect("need a second supported relation to swap to")
        corrupted = replace(prediction, predicted_relation=_next_cyclic(supported, relation))
        return FaultScenario(fault=fault, prediction=corrupted, snapshot=snapshot, gold=gold)

    if fault is FaultKind.WRONG_ENTITY:
        if len(snapshot.entities) < 2:
            raise NotCorrect("need a second entity to mislink to")
        wrong = _next_cyclic(list(snapshot.entities), subject)
        span = prediction.predicted_entity[1]  # type: ignore[index]
        corrupted = replace(prediction, predicted_entity=(wrong, span))
        return FaultScenario(fault=fault, prediction=corrupted, snapshot=snapshot, gold=gold)

    if fault is FaultKind.ENTITY_ABSENT_FROM_KG:
        broken = derive_snapshot(
            snapshot, suffix=f"noent-{prediction.query_id}", remove_entities=(subject,)
        )
    elif fault is FaultKind.ENGINE_FAILURE:
        broken = derive_snapshot(
            snapshot, suffix=f"outage-{prediction.query_id}", engine_fault="injected"
        )
    elif fault is FaultKind.WRONG_FACT_VALUE:
        original = snapshot.facts_for(subject, relation)[0]
        wrong_fact = replace(original, object=_perturb_value(original.object, snapshot))
        broken = derive_snapshot(
            snapshot, suffix=f"stale-{prediction.query_id}", upsert_facts=(wrong_fact,)
        )
    elif fault is FaultKind.DROP_FACT:
        identities = tuple(f.identity() for f in snapshot.facts_for(subject, relation))
        broken = derive_snapshot(
            snapshot, suffix=f"gap-{prediction.query_id}", remove_facts=identities
        )
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown fault {fault!r}")

    result = execute_structured_query(broken, structured)  # type: ignore[arg-type]
    corrupted = replace(
        prediction,
        fact_result=result,
        answer=result.primary() if result.status == "answer" else None,
    )
    return FaultScenario(fault=fault, prediction=corrupted, snapshot=broken, gold=gold)


# predictions.jsonl (de)serialization


def prediction_to_json(prediction: SystemPrediction) -> dict:
    row: dict = {
        "query_id": prediction.query_id,
        "system_id": prediction.system_id,
        "produced_at": prediction.produced_at,
    }
    if prediction.predicted_relation is not None:
        row["predicted_relation"] = prediction.predicted_relation
    if prediction.predicted_entity is not None:
        entity_id, span = prediction.predicted_entity
        row["predicted_entity"] = {
            "entity_id": entity_id,
            "span": {"start": span.start, "end": span.end, "surface": span.surface},
        }
    if prediction.structured_query is not None:
        row["structured_query"] = {
            "subject": prediction.structured_query.subject,
            "relation": prediction.structured_query.relation,
        }
    if prediction.fact_result is not None:
        fact: dict = {"status": prediction.fact_result.status}
        if prediction.fact_result.answers:
            fact["answers"] = [answer_to_json(a) for a in prediction.fact_result.answers]
        if prediction.fact_result.detail is not None:
            fact["detail"] = prediction.fact_result.detail
        row["fact_result"] = fact
    if prediction.answer is not None:
        row["answer"] = answer_to_json(prediction.answer)
    return row


def prediction_from_json(row: dict, where: str = "prediction") -> SystemPrediction:
    try:
        entity = None
        if "predicted_entity" in row:
            src = row["predicted_entity"]
            span = src["span"]
            entity = (
                str(src["entity_id"]),
                MentionSpan(
                    start=int(span["start"]), end=int(span["end"]), surface=str(span["surface"])
                ),
            )
        structured = None
        if "structured_query" in row:
            structured = StructuredQuery(
                subject=str(row["structured_query"]["subject"]),
                relation=str(row["structured_query"]["relation"]),
            )
        fact_result = None
        if "fact_result" in row:
            src = row["fact_result"]
            answers = tuple(
                a
                for a in (answer_from_json(obj, where) for obj in src.get("answers", ()))
                if a is not None
            )
            fact_result = FactResult(
                status=str(src["status"]), answers=answers, detail=src.get("detail")
            )
        return SystemPrediction(
            query_id=str(row["query_id"]),
            system_id=str(row["system_id"]),
            produced_at=str(row.get("produced_at", "")),
            predicted_relation=row.get("predicted_relation"),
            predicted_entity=entity,
            structured_query=structured,
            fact_result=fact_result,
            answer=answer_from_json(row.get("answer"), where),
        )
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def save_predictions(predictions: list[SystemPrediction], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for prediction in predictions:
            handle.write(json.dumps(prediction_to_json(prediction), ensure_ascii=False) + "\n")


def load_predictions(path: str | Path) -> list[SystemPrediction]:
    predictions: list[SystemPrediction] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{Path(path).name}:{lineno}"
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid json") from exc
            predictions.append(prediction_from_json(row, where))
    return predictions
