"""Evaluation datasets: ingestion, weighted sampling, synthetic variants
(entity substitution and rule paraphrase), domain categorization, slices.

Everything here is deterministic given (inputs, seed) so evaluation sets
can be regenerated byte-for-byte.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .annotation import EntityLabel, GoldLabel
from .answers import answer_type_for, normalize_surface
from .errors import (
    DuplicateId,
    InvalidN,
    MissingGold,
    NoPeers,
    NoSpan,
    ParseError,
)
from .kg_store import (
    DOMAIN_CATEGORIES,
    KgSnapshot,
    RelationSpec,
    StructuredQuery,
    entities_of_type,
    execute_structured_query,
)

QUERY_SOURCES = (
    "log_sample",
    "escalation",
    "research_set",
    "synthetic_substitution",
    "synthetic_paraphrase",
)

PROPERTY_SLICES = ("time_sensitive", "geo_sensitive", "ambiguous", "complex")
SLICE_KEYS = DOMAIN_CATEGORIES + PROPERTY_SLICES + ("unanswerable", "all")

# Fallback domain assignment when a query has no gold relation.
ONTOLOGY_DOMAIN_TABLE = {
    "person": "people",
    "musician": "people",
    "album": "albums_and_songs",
    "song": "albums_and_songs",
    "band": "albums_and_songs",
    "athlete": "sports",
    "sports_team": "sports",
    "tennis_tournament": "sports",
    "cycling_race": "sports",
    "movie": "movies_tv",
    "tv_series": "movies_tv",
    "award_ceremony": "events",
    "festival": "events",
}


@dataclass(frozen=True)
class QueryRecord:
    query_id: str
    text: str
    source: str
    dataset_id: str
    weight: float = 1.0
    parent_query_id: str | None = None

    def __post_init__(self) -> None:
        if self.source not in QUERY_SOURCES:
            raise ValueError(f"unknown query source {self.source!r}")
        if self.weight < 0:
            raise ValueError("weight must be non-negative")
        if self.source.startswith("synthetic_") and not self.parent_query_id:
            raise ValueError("synthetic queries need a parent_query_id")


@dataclass(frozen=True)
class DatasetSlice:
    slice_key: str
    query_ids: tuple[str, ...]


@dataclass(frozen=True)
class ParaphraseRule:
    name: str
    pattern: str
    template: str
    involutive: bool


def ingest_queries(path: str | Path, dataset_id: str) -> list[QueryRecord]:
    """Load queries.jsonl; the dataset_id argument is authoritative."""
    records: list[QueryRecord] = []
    seen: set[str] = set()
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
            try:
                record = QueryRecord(
                    query_id=str(row["query_id"]),
                    text=str(row["text"]),
                    source=str(row.get("source", "log_sample")),
                    dataset_id=dataset_id,
                    weight=float(row.get("weight", 1.0)),
                    parent_query_id=row.get("parent_query_id"),
                )
            except KeyError as exc:
                raise ParseError(f"{where}: missing field {exc.args[0]!r}") from exc
            except ValueError as exc:
                raise ParseError(f"{where}: {exc}") from exc
            if record.query_id in seen:
                raise DuplicateId(f"{where}: duplicate query_id {record.query_id!r}")
            seen.add(record.query_id)
            records.append(record)
    return records


def save_queries(records: list[QueryRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            row: dict = {
                "query_id": record.query_id,
                "text": record.text,
                "source": record.source,
                "dataset_id": record.dataset_id,
                "weight": record.weight,
            }
            if record.parent_query_id is not None:
                row["parent_query_id"] = record.parent_query_id
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def weighted_sample(dataset: list[QueryRecord], n: int, seed: int) -> list[QueryRecord]:
    """Weighted sampling without replacement via the exponent-key reservoir:
    each record draws key u^(1/w) and the top n keys win. Zero-weight records
    sink below every positive-weight key."""
    if n < 0 or n > len(dataset):
        raise InvalidN(f"cannot sample {n} of {len(dataset)}")
    for record in dataset:
        if not math.isfinite(record.weight):
            raise InvalidN(f"non-finite weight on {record.query_id!r}")
    rng = random.Random(seed)
    keyed = []
    for index, record in enumerate(dataset):
        u = rng.random()
        key = u ** (1.0 / record.weight) if record.weight > 0 else -1.0
        keyed.append((key, index, record))
    keyed.sort(key=lambda item: (-item[0], item[1]))
    return [record for _, _, record in keyed[:n]]


def substitute_entities(
    query: QueryRecord,
    gold: GoldLabel,
    snapshot: KgSnapshot,
    k: int,
    seed: int,
) -> list[tuple[QueryRecord, GoldLabel]]:
    """Swap the gold entity mention for peers of the same ontology type.

    Each variant keeps the relation and re-derives its answer from the KG,
    so a peer without the fact yields an Unanswerable gold. Peers are
    written by canonical name; the linker still has to resolve them.
    """
    if gold.entity is None:
        raise NoSpan(f"{query.query_id}: gold has no entity span")
    span = gold.entity
    if query.text[span.start : span.end] != span.surface:
        raise NoSpan(f"{query.query_id}: gold span does not match query text")
    original = snapshot.entity(span.entity_id)
    if original is None:
        raise NoPeers(f"{span.entity_id!r} is not in the snapshot")
    peers = [
        e for e in entities_of_type(snapshot, original.ontology_type) if e.entity_id != original.entity_id
    ]
    if not peers:
        raise NoPeers(f"no other {original.ontology_type!r} entities")
    if k <= 0:
        return []

    rng = random.Random(seed)
    chosen = rng.sample(peers, min(k, len(peers)))
    variants: list[tuple[QueryRecord, GoldLabel]] = []
    for i, peer in enumerate(chosen, start=1):
        name = peer.canonical_name
        text = query.text[: span.start] + name + query.text[span.end :]
        new_span = EntityLabel(
            start=span.start, end=span.start + len(name), surface=name, entity_id=peer.entity_id
        )
        answer = None
        if gold.relation is not None:
            result = execute_structured_query(
                snapshot, StructuredQuery(subject=peer.entity_id, relation=gold.relation)
            )
            if result.status == "answer":
                answer = result.primary()
        new_query = QueryRecord(
            query_id=f"{query.query_id}-sub{i}",
            text=text,
            source="synthetic_substitution",
            dataset_id=query.dataset_id,
            weight=query.weight,
            parent_query_id=query.query_id,
        )
        new_gold = replace(
            gold,
            query_id=new_query.query_id,
            entity=new_span,
            answer=answer,
            answer_type=answer_type_for(answer),
            acceptable_entities=frozenset(),
            dominant=True,
        )
        variants.append((new_query, new_gold))
    return variants


def load_ruleset(path: str | Path) -> list[ParaphraseRule]:
    rules: list[ParaphraseRule] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{Path(path).name}:{lineno}"
            try:
                row = json.loads(line)
                rule = ParaphraseRule(
                    name=str(row["name"]),
                    pattern=str(row["pattern"]),
                    template=str(row["template"]),
                    involutive=bool(row.get("involutive", False)),
                )
                re.compile(rule.pattern)
            except (json.JSONDecodeError, KeyError, re.error) as exc:
                raise ParseError(f"{where}: bad paraphrase rule") from exc
            rules.append(rule)
    return rules


def paraphrase(query: QueryRecord, ruleset: list[ParaphraseRule]) -> list[QueryRecord]:
    """Apply every whole-string rewrite rule that matches; one variant per
    rule, in ruleset order. No rule chaining."""
    variants: list[QueryRecord] = []
    for rule in ruleset:
        match = re.fullmatch(rule.pattern, query.text)
        if match is None:
            continue
        text = rule.template.format(**match.groupdict())
        if text == query.text:
            continue
        variants.append(
            QueryRecord(
                query_id=f"{query.query_id}-par-{rule.name}",
                text=text,
                source="synthetic_paraphrase",
                dataset_id=query.dataset_id,
                weight=query.weight,
                parent_query_id=query.query_id,
            )
        )
    return variants


def locate_surface(text: str, surfaces: list[str]) -> tuple[int, int] | None:
    """Leftmost case-insensitive occurrence of any surface form, longest
    forms first; used to re-anchor gold spans after paraphrasing."""
    best: tuple[int, int] | None = None
    for surface in sorted(surfaces, key=len, reverse=True):
        match = re.search(re.escape(surface), text, re.IGNORECASE)
        if match and (best is None or match.start() < best[0]):
            best = (match.start(), match.end())
    return best


def carry_gold(gold: GoldLabel, new_query: QueryRecord, snapshot: KgSnapshot) -> GoldLabel | None:
    """Gold for a paraphrased query: identical label, recomputed span.
    None when the entity surface cannot be found in the new text."""
    new_gold = replace(gold, query_id=new_query.query_id)
    if gold.entity is None:
        return new_gold
    surfaces = [gold.entity.surface]
    record = snapshot.entity(gold.entity.entity_id)
    if record is not None:
        surfaces.extend(record.aliases)
    located = locate_surface(new_query.text, surfaces)
    if located is None:
        return None
    start, end = located
    return replace(
        new_gold,
        entity=EntityLabel(
            start=start,
            end=end,
            surface=new_query.text[start:end],
            entity_id=gold.entity.entity_id,
        ),
    )


def categorize_domain(
    gold: GoldLabel,
    relations: dict[str, RelationSpec],
    snapshot: KgSnapshot | None = None,
) -> str:
    """Relation's domain when one is labeled, else the entity's ontology
    type through the lookup table, else general_qa."""
    if gold.relation is not None and gold.relation in relations:
        return relations[gold.relation].domain_category
    if gold.entity is not None and snapshot is not None:
        record = snapshot.entity(gold.entity.entity_id)
        if record is not None:
            return ONTOLOGY_DOMAIN_TABLE.get(record.ontology_type, "general_qa")
    return "general_qa"


def build_slices(
    dataset: list[QueryRecord],
    golds: dict[str, GoldLabel],
    relations: dict[str, RelationSpec],
    snapshot: KgSnapshot | None = None,
) -> list[DatasetSlice]:
    """Slice census over one dataset: the six domains partition "all";
    property slices and "unanswerable" may overlap them."""
    members: dict[str, list[str]] = {key: [] for key in SLICE_KEYS}
    for query in dataset:
        gold = golds.get(query.query_id)
        if gold is None:
            raise MissingGold(f"no gold label for {query.query_id!r}")
        members["all"].append(query.query_id)
        members[categorize_domain(gold, relations, snapshot)].append(query.query_id)
        flags = set(gold.properties)
        if gold.relation is not None and gold.relation in relations:
            if relations[gold.relation].time_sensitive:
                flags.add("time_sensitive")
        for flag in flags:
            members[flag].append(query.query_id)
        if gold.answer is None:
            members["unanswerable"].append(query.query_id)
    return [DatasetSlice(slice_key=key, query_ids=tuple(sorted(members[key]))) for key in SLICE_KEYS]
