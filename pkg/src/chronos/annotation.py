"""Gold labels: the annotation data model, multi-annotator aggregation,
agreement statistics, qualification scoring, and refresh-task construction.

Aggregation is plurality voting per field. The entity field gets special
treatment: a strict plurality winner becomes the dominant gold entity,
while a tie records every tied entity as acceptable so ambiguity does not
penalize a system that picked either reading.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .answers import ANSWER_TYPES, AnswerValue, answer_from_json, answer_to_json
from .errors import (
    Degenerate,
    EmptyInput,
    MissingItems,
    MixedQueryIds,
    ParseError,
)
from .kg_store import FactDelta, FactRecord, RelationSpec

PROPERTY_FLAGS = ("geo_sensitive", "time_sensitive", "ambiguous", "complex")

# Classic reliability cutoff for nominal alpha.
DEFAULT_ALPHA_THRESHOLD = 0.667
DEFAULT_QUALIFICATION_THRESHOLD = 0.9

# Agreement over a field needs to distinguish "annotator left it blank"
# (a real label) from "annotator never saw the item" (missing data).
ABSENT = "__absent__"

# The facets "record"-level agreement scores as separate items.
RECORD_FIELDS = ("knowledge_seeking", "relation", "entity", "answer_type", "answer")


@dataclass(frozen=True)
class EntityLabel:
    start: int
    end: int
    surface: str
    entity_id: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span [{self.start}, {self.end})")


@dataclass(frozen=True)
class AnnotationRecord:
    query_id: str
    annotator_id: str
    knowledge_seeking: bool
    properties: frozenset[str]
    entity: EntityLabel | None
    relation: str | None
    answer: AnswerValue | None
    answer_type: str
    annotated_at: str

    def __post_init__(self) -> None:
        if self.answer_type not in ANSWER_TYPES:
            raise ValueError(f"unknown answer type {self.answer_type!r}")
        if (self.answer_type == "Unanswerable") != (self.answer is None):
            raise ValueError("Unanswerable if and only if the answer is absent")
        if self.answer_type == "NumberWithUnit" and (
            self.answer is None or self.answer.kind != "number_unit" or not self.answer.unit
        ):
            raise ValueError("NumberWithUnit answers carry a numeric value and a unit")
        unknown = self.properties - set(PROPERTY_FLAGS)
        if unknown:
            raise ValueError(f"unknown properties {sorted(unknown)}")


@dataclass(frozen=True)
class GoldLabel:
    query_id: str
    knowledge_seeking: bool
    properties: frozenset[str]
    entity: EntityLabel | None
    relation: str | None
    answer: AnswerValue | None
    answer_type: str
    support_count: int
    total_annotators: int
    dominant: bool
    acceptable_entities: frozenset[str] = frozenset()

    def entity_matches(self, entity_id: str | None) -> bool:
        """Correctness rule for predictions: the dominant entity, or any
        member of the acceptable set when annotators tied."""
        if self.acceptable_entities:
            return entity_id is not None and entity_id in self.acceptable_entities
        gold_id = self.entity.entity_id if self.entity else None
        return entity_id == gold_id


@dataclass(frozen=True)
class AgreementReport:
    task_id: str
    field: str
    alpha: float | None
    kappa_pairs: dict[tuple[str, str], float | None]
    flagged: bool
    drop_one_alphas: dict[str, float | None] = field(default_factory=dict)
    suspect_annotator: str | None = None


@dataclass(frozen=True)
class QualificationResult:
    annotator_id: str
    score: float
    passed: bool
    # (query_id, matched) per key item; the key's contents stay server-side.
    item_verdicts: tuple[tuple[str, bool], ...] = ()


@dataclass(frozen=True)
class RefreshTask:
    as_of: date
    facts: tuple[FactRecord, ...]
    query_ids: tuple[str, ...]


def _plurality(votes: list) -> tuple[list, int]:
    """Values holding the max count, and that count."""
    counts: dict = {}
    for vote in votes:
        counts[vote] = counts.get(vote, 0) + 1
    top = max(counts.values())
    return [v for v, c in counts.items() if c == top], top


def aggregate_gold(annotations: list[AnnotationRecord]) -> GoldLabel:
    """Collapse one query's annotations into a GoldLabel by plurality vote.

    Boolean and property fields need a strict majority; ties drop the flag.
    Answer type and answer are voted as a pair so the Unanswerable/absent
    invariant survives aggregation. Input order never matters.
    """
    if not annotations:
        raise EmptyInput("no annotations to aggregate")
    query_ids = {a.query_id for a in annotations}
    if len(query_ids) > 1:
        raise MixedQueryIds(f"annotations span queries {sorted(query_ids)}")
    records = sorted(annotations, key=lambda a: a.annotator_id)
    total = len(records)

    knowledge_seeking = sum(1 for a in records if a.knowledge_seeking) * 2 > total
    properties = frozenset(
        flag
        for flag in PROPERTY_FLAGS
        if sum(1 for a in records if flag in a.properties) * 2 > total
    )

    entity_winners, support = _plurality(
        [a.entity.entity_id if a.entity else None for a in records]
    )
    if len(entity_winners) == 1:
        dominant = True
        acceptable: frozenset[str] = frozenset()
        winner_id = entity_winners[0]
        entity = next(
            (a.entity for a in records if a.entity and a.entity.entity_id == winner_id), None
        )
    else:
        dominant = False
        acceptable = frozenset(e for e in entity_winners if e is not None)
        entity = None

    relation_winners, _ = _plurality([a.relation for a in records])
    relation = relation_winners[0] if len(relation_winners) == 1 else None

    answer_votes = [
        (a.answer_type, a.answer.canonical() if a.answer is not None else None)
        for a in records
    ]
    pair_winners, _ = _plurality(answer_votes)
    # Tie-break deterministically: answer-type catalog order, then value.
    pair_winners.sort(key=lambda p: (ANSWER_TYPES.index(p[0]), str(p[1])))
    answer_type, answer_key = pair_winners[0]
    answer = next(
        (
            a.answer
            for a in records
            if a.answer_type == answer_type
            and (a.answer.canonical() if a.answer is not None else None) == answer_key
        ),
        None,
    )

    return GoldLabel(
        query_id=records[0].query_id,
        knowledge_seeking=knowledge_seeking,
        properties=properties,
        entity=entity,
        relation=relation,
        answer=answer,
        answer_type=answer_type,
        support_count=support,
        total_annotators=total,
        dominant=dominant,
        acceptable_entities=acceptable,
    )


def krippendorff_alpha(values: list[list[object | None]]) -> float:
    """Nominal-data alpha over an annotators × items matrix (None = missing).

    Built on the coincidence matrix: each item with m>=2 values contributes
    1/(m-1) per ordered value pair. alpha = 1 - Do/De. Items with fewer than
    two values are excluded.
    """
    units: list[list[object]] = []
    n_items = len(values[0]) if values else 0
    for item in range(n_items):
        unit = [row[item] for row in values if row[item] is not None]
        if len(unit) >= 2:
            units.append(unit)
    if not units:
        raise EmptyInput("no item has two or more values")

    coincidence: dict[tuple[object, object], float] = {}
    totals: dict[object, float] = {}
    for unit in units:
        weight = 1.0 / (len(unit) - 1)
        for i, left in enumerate(unit):
            for j, right in enumerate(unit):
                if i == j:
                    continue
                coincidence[(left, right)] = coincidence.get((left, right), 0.0) + weight
                totals[left] = totals.get(left, 0.0) + weight

    n = sum(totals.values())
    observed = sum(v for (l, r), v in coincidence.items() if l != r) / n
    expected = sum(
        totals[l] * totals[r] for l in totals for r in totals if l != r
    ) / (n * (n - 1))
    if expected == 0:
        raise Degenerate("all values identical; expected disagreement is zero")
    return 1.0 - observed / expected


def cohens_kappa(rater_a: list, rater_b: list) -> float:
    """Chance-corrected pairwise agreement (po - pe) / (1 - pe)."""
    if len(rater_a) != len(rater_b):
        raise ValueError("label vectors differ in length")
    if not rater_a:
        raise EmptyInput("no items")
    n = len(rater_a)
    po = sum(1 for a, b in zip(rater_a, rater_b) if a == b) / n
    labels = set(rater_a) | set(rater_b)
    pe = sum(
        (rater_a.count(label) / n) * (rater_b.count(label) / n) for label in labels
    )
    if pe == 1:
        raise Degenerate("expected agreement is one")
    return (po - pe) / (1 - pe)


def _field_value(record: AnnotationRecord, field_name: str) -> object:
    if field_name == "relation":
        return record.relation if record.relation is not None else ABSENT
    if field_name == "entity":
        return record.entity.entity_id if record.entity else ABSENT
    if field_name == "answer_type":
        return record.answer_type
    if field_name == "knowledge_seeking":
        return record.knowledge_seeking
    if field_name == "answer":
        return record.answer.canonical() if record.answer is not None else ABSENT
    raise ValueError(f"unknown annotation field {field_name!r}")


def _alpha_or_none(values: list[list[object | None]]) -> float | None:
    """None stands for degenerate-perfect (zero observed disagreement)."""
    try:
        return krippendorff_alpha(values)
    except Degenerate:
        return None
    except EmptyInput:
        return None


def agreement_report(
    task_id: str,
    annotations: list[AnnotationRecord],
    field_name: str = "entity",
    alpha_threshold: float = DEFAULT_ALPHA_THRESHOLD,
) -> AgreementReport:
    """Alpha over the task, pairwise kappas, and, when flagged, a drop-one
    alpha sweep naming the annotator whose removal helps most.

    field_name "record" scores every facet of the annotation as its own
    item, values tagged by facet so alphabets never mix. A panel that is
    unanimous on varied records then measures exactly 1.0 instead of
    falling into the degenerate all-identical case."""
    annotators = sorted({a.annotator_id for a in annotations})
    if len(annotators) < 2:
        raise EmptyInput("agreement needs at least two annotators")
    fields = RECORD_FIELDS if field_name == "record" else (field_name,)
    items = sorted({(a.query_id, field) for a in annotations for field in fields})
    by_cell = {
        (a.annotator_id, (a.query_id, field)): (field, _field_value(a, field))
        for a in annotations
        for field in fields
    }

    def matrix(keep: list[str]) -> list[list[object | None]]:
        return [[by_cell.get((ann, item)) for item in items] for ann in keep]

    alpha = _alpha_or_none(matrix(annotators))

    kappa_pairs: dict[tuple[str, str], float | None] = {}
    for i, left in enumerate(annotators):
        for right in annotators[i + 1 :]:
            shared = [
                (by_cell[(left, item)], by_cell[(right, item)])
                for item in items
                if (left, item) in by_cell and (right, item) in by_cell
            ]
            if not shared:
                kappa_pairs[(left, right)] = None
                continue
            try:
                kappa_pairs[(left, right)] = cohens_kappa(
                    [s[0] for s in shared], [s[1] for s in shared]
                )
            except Degenerate:
                kappa_pairs[(left, right)] = None

    flagged = alpha is not None and alpha < alpha_threshold
    drop_one: dict[str, float | None] = {}
    suspect: str | None = None
    if flagged and len(annotators) > 2:
        for ann in annotators:
            drop_one[ann] = _alpha_or_none(matrix([a for a in annotators if a != ann]))
        # None means removal left zero disagreement; that is the best outcome.
        best = max(
            drop_one,
            key=lambda a: (drop_one[a] is None, drop_one[a] if drop_one[a] is not None else 0.0),
        )
        candidate = drop_one[best]
        if candidate is None or alpha is None or candidate > alpha:
            suspect = best

    return AgreementReport(
        task_id=task_id,
        field=field_name,
        alpha=alpha,
        kappa_pairs=kappa_pairs,
        flagged=flagged,
        drop_one_alphas=drop_one,
        suspect_annotator=suspect,
    )


def score_qualification(
    submission: list[AnnotationRecord],
    answer_key: list[GoldLabel],
    threshold: float = DEFAULT_QUALIFICATION_THRESHOLD,
) -> QualificationResult:
    """Exam grade: fraction of key items whose (relation, entity,
    answer_type) triple matches exactly."""
    if not submission:
        raise EmptyInput("empty submission")
    annotators = {a.annotator_id for a in submission}
    if len(annotators) > 1:
        raise ValueError(f"submission mixes annotators {sorted(annotators)}")
    by_query = {a.query_id: a for a in submission}
    missing = [g.query_id for g in answer_key if g.query_id not in by_query]
    if missing:
        raise MissingItems(f"submission misses {missing}")
    if not answer_key:
        raise EmptyInput("empty answer key")

    verdicts: list[tuple[str, bool]] = []
    for gold in answer_key:
        record = by_query[gold.query_id]
        relation_ok = record.relation == gold.relation
        entity_ok = gold.entity_matches(record.entity.entity_id if record.entity else None)
        type_ok = record.answer_type == gold.answer_type
        verdicts.append((gold.query_id, relation_ok and entity_ok and type_ok))
    score = sum(1 for _, ok in verdicts if ok) / len(answer_key)
    return QualificationResult(
        annotator_id=next(iter(annotators)),
        score=score,
        passed=score >= threshold,
        item_verdicts=tuple(verdicts),
    )


def build_refresh_task(
    delta: FactDelta,
    golds: list[GoldLabel],
    relations: dict[str, RelationSpec],
    as_of: date,
) -> RefreshTask:
    """Monthly re-verification worklist: every added/changed fact from the
    snapshot delta, plus the fact behind each time-sensitive gold answer
    (whether or not it changed). Deduplicated by (subject, relation), delta
    entries winning; sorted by relation then subject."""
    chosen: dict[tuple[str, str], FactRecord] = {}
    for fact in delta.added:
        chosen[(fact.subject, fact.relation)] = fact
    for _, after in delta.changed:
        chosen[(after.subject, after.relation)] = after

    query_ids: list[str] = []
    for gold in golds:
        if gold.entity is None or gold.relation is None or gold.answer is None:
            continue
        spec = relations.get(gold.relation)
        relation_ts = bool(spec and spec.time_sensitive)
        if not (relation_ts or "time_sensitive" in gold.properties):
            continue
        query_ids.append(gold.query_id)
        key = (gold.entity.entity_id, gold.relation)
        if key not in chosen:
            chosen[key] = FactRecord(
                subject=gold.entity.entity_id, relation=gold.relation, object=gold.answer
            )

    facts = tuple(sorted(chosen.values(), key=lambda f: (f.relation, f.subject)))
    return RefreshTask(as_of=as_of, facts=facts, query_ids=tuple(sorted(set(query_ids))))


def validate_span(entity: EntityLabel, query_text: str) -> None:
    if entity.end > len(query_text) or query_text[entity.start : entity.end] != entity.surface:
        raise ValueError(
            f"span [{entity.start}, {entity.end}) does not spell {entity.surface!r}"
        )


# jsonl (de)serialization


def annotation_to_json(record: AnnotationRecord) -> dict:
    row: dict = {
        "query_id": record.query_id,
        "annotator_id": record.annotator_id,
        "knowledge_seeking": record.knowledge_seeking,
        "properties": sorted(record.properties),
        "answer_type": record.answer_type,
        "annotated_at": record.annotated_at,
    }
    if record.entity is not None:
        row["entity"] = {
            "span": {
                "start": record.entity.start,
                "end": record.entity.end,
                "surface": record.entity.surface,
            },
            "entity_id": record.entity.entity_id,
        }
    if record.relation is not None:
        row["relation"] = record.relation
    if record.answer is not None:
        row["answer"] = answer_to_json(record.answer)
    return row


def _entity_from_json(obj: dict | None, where: str) -> EntityLabel | None:
    if obj is None:
        return None
    try:
        span = obj["span"]
        return EntityLabel(
            start=int(span["start"]),
            end=int(span["end"]),
            surface=str(span["surface"]),
            entity_id=str(obj["entity_id"]),
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise ParseError(f"{where}: bad entity label") from exc


def annotation_from_json(row: dict, where: str = "annotation") -> AnnotationRecord:
    try:
        return AnnotationRecord(
            query_id=str(row["query_id"]),
            annotator_id=str(row["annotator_id"]),
            knowledge_seeking=bool(row["knowledge_seeking"]),
            properties=frozenset(row.get("properties") or ()),
            entity=_entity_from_json(row.get("entity"), where),
            relation=row.get("relation"),
            answer=answer_from_json(row.get("answer"), where),
            answer_type=str(row["answer_type"]),
            annotated_at=str(row.get("annotated_at", "")),
        )
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def gold_to_json(gold: GoldLabel) -> dict:
    row: dict = {
        "query_id": gold.query_id,
        "knowledge_seeking": gold.knowledge_seeking,
        "properties": sorted(gold.properties),
        "answer_type": gold.answer_type,
        "support_count": gold.support_count,
        "total_annotators": gold.total_annotators,
        "dominant": gold.dominant,
    }
    if gold.entity is not None:
        row["entity"] = {
            "span": {
                "start": gold.entity.start,
                "end": gold.entity.end,
                "surface": gold.entity.surface,
            },
            "entity_id": gold.entity.entity_id,
        }
    if gold.relation is not None:
        row["relation"] = gold.relation
    if gold.answer is not None:
        row["answer"] = answer_to_json(gold.answer)
    if gold.acceptable_entities:
        row["acceptable_entities"] = sorted(gold.acceptable_entities)
    return row


def gold_from_json(row: dict, where: str = "gold") -> GoldLabel:
    try:
        return GoldLabel(
            query_id=str(row["query_id"]),
            knowledge_seeking=bool(row.get("knowledge_seeking", True)),
            properties=frozenset(row.get("properties") or ()),
            entity=_entity_from_json(row.get("entity"), where),
            relation=row.get("relation"),
            answer=answer_from_json(row.get("answer"), where),
            answer_type=str(row["answer_type"]),
            support_count=int(row.get("support_count", 1)),
            total_annotators=int(row.get("total_annotators", 1)),
            dominant=bool(row.get("dominant", True)),
            acceptable_entities=frozenset(row.get("acceptable_entities") or ()),
        )
    except KeyError as exc:
        raise ParseError(f"{where}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _load_jsonl(path: Path) -> list[tuple[int, dict]]:
    rows: list[tuple[int, dict]] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name}:{lineno}: invalid json") from exc
            rows.append((lineno, row))
    return rows


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    return [
        annotation_from_json(row, f"{Path(path).name}:{lineno}")
        for lineno, row in _load_jsonl(Path(path))
    ]


def load_golds(path: str | Path) -> list[GoldLabel]:
    return [
        gold_from_json(row, f"{Path(path).name}:{lineno}")
        for lineno, row in _load_jsonl(Path(path))
    ]


def save_golds(golds: list[GoldLabel], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for gold in golds:
            handle.write(json.dumps(gold_to_json(gold), ensure_ascii=False) + "\n")


def save_annotations(records: list[AnnotationRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(annotation_to_json(record), ensure_ascii=False) + "\n")
