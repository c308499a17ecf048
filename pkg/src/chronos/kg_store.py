"""Immutable knowledge-graph snapshots and the query interface over them.

A snapshot is a validated, in-memory bundle of entities, relation
definitions and facts, loaded from a three-file jsonl layout. Snapshots
never mutate; fault studies and refreshes derive new ones through
`derive_snapshot`. Executing a structured query returns a status-tagged
result so downstream stages can tell "no such fact" apart from "entity
missing" and "engine broke".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .answers import (
    ANSWER_TYPES,
    AnswerValue,
    answer_from_json,
    answer_to_json,
    normalize_surface,
)
from .errors import DuplicateId, EmptyInput, ParseError, ReferentialError

DOMAIN_CATEGORIES = (
    "people",
    "albums_and_songs",
    "sports",
    "movies_tv",
    "events",
    "general_qa",
)

RESULT_STATUSES = ("answer", "no_fact", "missing_entity", "execution_failure")

# Stamp used when a bundle carries no meta.json; keeps loads reproducible.
DEFAULT_CREATED_AT = "1970-01-01T00:00:00Z"


@dataclass(frozen=True)
class EntityRecord:
    entity_id: str
    canonical_name: str
    aliases: tuple[str, ...]
    ontology_type: str

    def __post_init__(self) -> None:
        if not self.ontology_type:
            raise ValueError(f"entity {self.entity_id!r} needs an ontology_type")
        # The canonical name is always one of the surface forms.
        if self.canonical_name not in self.aliases:
            object.__setattr__(self, "aliases", (self.canonical_name,) + tuple(self.aliases))


@dataclass(frozen=True)
class RelationSpec:
    """Catalog entry for one relation: its domain, answer shape, trigger
    patterns, and whether the reference system serves it at all."""

    relation_id: str
    surface_patterns: tuple[str, ...]
    domain_category: str
    time_sensitive: bool
    expected_answer_type: str
    supported: bool = True


@dataclass(frozen=True)
class FactRecord:
    subject: str
    relation: str
    object: AnswerValue
    last_verified: date | None = None
    # None inherits the relation's flag; a bool here overrides it per fact.
    time_sensitive: bool | None = None

    def identity(self) -> tuple:
        # Verification bookkeeping is not part of what the fact asserts.
        return (self.subject, self.relation, self.object.canonical())


@dataclass(frozen=True)
class StructuredQuery:
    subject: str
    relation: str


@dataclass(frozen=True)
class FactResult:
    """Outcome of executing a structured query against one snapshot."""

    status: str
    answers: tuple[AnswerValue, ...] = ()
    detail: str | None = None

    def __post_init__(self) -> None:
        if self.status not in RESULT_STATUSES:
            raise ValueError(f"unknown fact status {self.status!r}")
        if self.status == "answer" and not self.answers:
            raise ValueError("answer result needs at least one value")
        if self.status != "answer" and self.answers:
            raise ValueError(f"{self.status} result cannot carry answers")

    def primary(self) -> AnswerValue | None:
        return self.answers[0] if self.answers else None


@dataclass(frozen=True)
class FactDelta:
    """Difference between two snapshots' fact sets.

    `changed` pairs old/new facts sharing a (subject, relation) key whose
    object swapped one value for another; multi-valued groups fall back to
    independent added/removed entries.
    """

    added: tuple[FactRecord, ...]
    removed: tuple[FactRecord, ...]
    changed: tuple[tuple[FactRecord, FactRecord], ...]

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.changed)


@dataclass(frozen=True)
class SnapshotStats:
    entity_count: int
    fact_count: int
    relation_count: int
    time_sensitive_fact_count: int


@dataclass(frozen=True)
class KgSnapshot:
    snapshot_id: str
    created_at: str
    entities: dict[str, EntityRecord]
    relations: dict[str, RelationSpec]
    facts: tuple[FactRecord, ...]
    alias_index: dict[str, tuple[str, ...]]
    # Simulated backend outage; set only on derived snapshots.
    engine_fault: str | None = None
    _fact_index: dict[tuple[str, str], tuple[FactRecord, ...]] = field(
        default_factory=dict, repr=False
    )

    def entity(self, entity_id: str) -> EntityRecord | None:
        return self.entities.get(entity_id)

    def relation(self, relation_id: str) -> RelationSpec | None:
        return self.relations.get(relation_id)

    def facts_for(self, subject: str, relation: str) -> tuple[FactRecord, ...]:
        return self._fact_index.get((subject, relation), ())


def _index_facts(facts: tuple[FactRecord, ...]) -> dict[tuple[str, str], tuple[FactRecord, ...]]:
    grouped: dict[tuple[str, str], list[FactRecord]] = {}
    for fact in facts:
        grouped.setdefault((fact.subject, fact.relation), []).append(fact)
    return {
        key: tuple(sorted(group, key=lambda f: f.object.sort_key()))
        for key, group in grouped.items()
    }


def _build_alias_index(entities: dict[str, EntityRecord]) -> dict[str, tuple[str, ...]]:
    surface_to_ids: dict[str, set[str]] = {}
    for record in entities.values():
        for surface in record.aliases:
            normalized = normalize_surface(surface)
            if normalized:
                surface_to_ids.setdefault(normalized, set()).add(record.entity_id)
    return {surface: tuple(sorted(ids)) for surface, ids in sorted(surface_to_ids.items())}


def build_snapshot(
    entities: list[EntityRecord],
    relations: list[RelationSpec],
    facts: list[FactRecord],
    snapshot_id: str,
    created_at: str = DEFAULT_CREATED_AT,
    engine_fault: str | None = None,
) -> KgSnapshot:
    """Validate and index a snapshot; every cross-reference must resolve."""
    entity_map: dict[str, EntityRecord] = {}
    for record in entities:
        if record.entity_id in entity_map:
            raise DuplicateId(f"duplicate entity id {record.entity_id!r}")
        entity_map[record.entity_id] = record

    relation_map: dict[str, RelationSpec] = {}
    for spec in relations:
        if spec.relation_id in relation_map:
            raise DuplicateId(f"duplicate relation id {spec.relation_id!r}")
        if spec.domain_category not in DOMAIN_CATEGORIES:
            raise ParseError(
                f"relation {spec.relation_id!r} has unknown domain {spec.domain_category!r}"
            )
        if spec.expected_answer_type not in ANSWER_TYPES:
            raise ParseError(
                f"relation {spec.relation_id!r} has unknown answer type"
                f" {spec.expected_answer_type!r}"
            )
        relation_map[spec.relation_id] = spec

    seen_identities: set[tuple] = set()
    for fact in facts:
        if fact.subject not in entity_map:
            raise ReferentialError(f"fact subject {fact.subject!r} is not a known entity")
        spec = relation_map.get(fact.relation)
        if spec is None:
            raise ReferentialError(f"fact relation {fact.relation!r} is not in the catalog")
        if not spec.supported:
            raise ReferentialError(
                f"fact uses unsupported relation {fact.relation!r}; unsupported"
                " relations carry no servable facts"
            )
        if fact.object.kind == "entity" and str(fact.object.value) not in entity_map:
            raise ReferentialError(
                f"fact object entity {fact.object.value!r} is not a known entity"
            )
        key = fact.identity()
        if key in seen_identities:
            raise DuplicateId(f"duplicate fact {key!r}")
        seen_identities.add(key)

    fact_tuple = tuple(facts)
    return KgSnapshot(
        snapshot_id=snapshot_id,
        created_at=created_at,
        entities=entity_map,
        relations=relation_map,
        facts=fact_tuple,
        alias_index=_build_alias_index(entity_map),
        engine_fault=engine_fault,
        _fact_index=_index_facts(fact_tuple),
    )


def _read_jsonl(path: Path) -> list[tuple[int, dict]]:
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
            if not isinstance(row, dict):
                raise ParseError(f"{path.name}:{lineno}: expected an object")
            rows.append((lineno, row))
    return rows


def _require(row: dict, key: str, where: str) -> object:
    if key not in row:
        raise ParseError(f"{where}: missing field {key!r}")
    return row[key]


def load_snapshot(path: str | Path, format: str = "facts-jsonl") -> KgSnapshot:
    """Load a bundle directory: entities.jsonl, relations.jsonl, facts.jsonl.

    An optional meta.json supplies snapshot_id and created_at; without it the
    directory name and a fixed epoch stamp are used.
    """
    if format != "facts-jsonl":
        raise ParseError(f"unknown snapshot format {format!r}")
    root = Path(path)

    entities: list[EntityRecord] = []
    for lineno, row in _read_jsonl(root / "entities.jsonl"):
        where = f"entities.jsonl:{lineno}"
        entities.append(
            EntityRecord(
                entity_id=str(_require(row, "entity_id", where)),
                canonical_name=str(_require(row, "canonical_name", where)),
                aliases=tuple(row.get("aliases") or ()),
                ontology_type=str(_require(row, "ontology_type", where)),
            )
        )

    relations: list[RelationSpec] = []
    for lineno, row in _read_jsonl(root / "relations.jsonl"):
        where = f"relations.jsonl:{lineno}"
        relations.append(
            RelationSpec(
                relation_id=str(_require(row, "relation_id", where)),
                surface_patterns=tuple(row.get("surface_patterns") or ()),
                domain_category=str(_require(row, "domain_category", where)),
                time_sensitive=bool(row.get("time_sensitive", False)),
                expected_answer_type=str(_require(row, "expected_answer_type", where)),
                supported=bool(row.get("supported", True)),
            )
        )

    facts: list[FactRecord] = []
    for lineno, row in _read_jsonl(root / "facts.jsonl"):
        where = f"facts.jsonl:{lineno}"
        obj = answer_from_json(_require(row, "object", where), where)  # type: ignore[arg-type]
        if obj is None:
            raise ParseError(f"{where}: fact object cannot be null")
        verified = row.get("last_verified")
        try:
            last_verified = date.fromisoformat(verified) if verified else None
        except ValueError as exc:
            raise ParseError(f"{where}: bad date {verified!r}") from exc
        override = row.get("time_sensitive")
        facts.append(
            FactRecord(
                subject=str(_require(row, "subject", where)),
                relation=str(_require(row, "relation", where)),
                object=obj,
                last_verified=last_verified,
                time_sensitive=bool(override) if override is not None else None,
            )
        )

    meta_path = root / "meta.json"
    snapshot_id = root.name
    created_at = DEFAULT_CREATED_AT
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        snapshot_id = str(meta.get("snapshot_id", snapshot_id))
        created_at = str(meta.get("created_at", created_at))

    return build_snapshot(entities, relations, facts, snapshot_id, created_at)


def write_snapshot(snapshot: KgSnapshot, bundle_dir: str | Path) -> None:
    """Serialize back to the jsonl bundle layout, sorted for stable diffs."""
    root = Path(bundle_dir)
    root.mkdir(parents=True, exist_ok=True)

    with (root / "entities.jsonl").open("w", encoding="utf-8") as handle:
        for record in sorted(snapshot.entities.values(), key=lambda e: e.entity_id):
            handle.write(
                json.dumps(
                    {
                        "entity_id": record.entity_id,
                        "canonical_name": record.canonical_name,
                        "aliases": list(record.aliases),
                        "ontology_type": record.ontology_type,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    with (root / "relations.jsonl").open("w", encoding="utf-8") as handle:
        for spec in sorted(snapshot.relations.values(), key=lambda r: r.relation_id):
            handle.write(
                json.dumps(
                    {
                        "relation_id": spec.relation_id,
                        "surface_patterns": list(spec.surface_patterns),
                        "domain_category": spec.domain_category,
                        "time_sensitive": spec.time_sensitive,
                        "expected_answer_type": spec.expected_answer_type,
                        "supported": spec.supported,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    with (root / "facts.jsonl").open("w", encoding="utf-8") as handle:
        for fact in sorted(snapshot.facts, key=lambda f: f.identity()):
            row: dict = {
                "subject": fact.subject,
                "relation": fact.relation,
                "object": answer_to_json(fact.object),
            }
            if fact.last_verified is not None:
                row["last_verified"] = fact.last_verified.isoformat()
            if fact.time_sensitive is not None:
                row["time_sensitive"] = fact.time_sensitive
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")

    (root / "meta.json").write_text(
        json.dumps(
            {"snapshot_id": snapshot.snapshot_id, "created_at": snapshot.created_at},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )


def lookup_entities_by_alias(snapshot: KgSnapshot, surface: str) -> list[EntityRecord]:
    ids = snapshot.alias_index.get(normalize_surface(surface), ())
    return [snapshot.entities[eid] for eid in ids]


def entities_of_type(snapshot: KgSnapshot, ontology_type: str) -> list[EntityRecord]:
    return sorted(
        (e for e in snapshot.entities.values() if e.ontology_type == ontology_type),
        key=lambda e: e.entity_id,
    )


def execute_structured_query(snapshot: KgSnapshot, query: StructuredQuery) -> FactResult:
    """Run one (subject, relation) lookup with explicit failure statuses.

    Failures are result variants, never exceptions: an injected engine fault
    or unknown relation is an execution failure, an absent subject is
    missing_entity, a valid pair with no triple is no_fact.
    """
    if snapshot.engine_fault is not None:
        return FactResult(status="execution_failure", detail=snapshot.engine_fault)
    if not query.subject or not query.relation:
        return FactResult(status="execution_failure", detail="malformed query")
    if query.relation not in snapshot.relations:
        return FactResult(status="execution_failure", detail="unknown relation")
    if query.subject not in snapshot.entities:
        return FactResult(status="missing_entity", detail=query.subject)
    matches = snapshot.facts_for(query.subject, query.relation)
    if not matches:
        return FactResult(status="no_fact")
    return FactResult(status="answer", answers=tuple(f.object for f in matches))


def fact_is_time_sensitive(snapshot: KgSnapshot, fact: FactRecord) -> bool:
    if fact.time_sensitive is not None:
        return fact.time_sensitive
    spec = snapshot.relation(fact.relation)
    return bool(spec and spec.time_sensitive)


def snapshot_stats(snapshot: KgSnapshot) -> SnapshotStats:
    return SnapshotStats(
        entity_count=len(snapshot.entities),
        fact_count=len(snapshot.facts),
        relation_count=len(snapshot.relations),
        time_sensitive_fact_count=sum(
            1 for f in snapshot.facts if fact_is_time_sensitive(snapshot, f)
        ),
    )


def delta_facts(old: KgSnapshot, new: KgSnapshot) -> FactDelta:
    """Diff two snapshots' fact sets.

    Facts are grouped by (subject, relation); a group swapping exactly one
    object for another becomes a changed pair, everything else added or
    removed. last_verified differences alone do not register.
    """
    old_groups: dict[tuple[str, str], dict[tuple, FactRecord]] = {}
    for fact in old.facts:
        old_groups.setdefault((fact.subject, fact.relation), {})[fact.object.canonical()] = fact
    new_groups: dict[tuple[str, str], dict[tuple, FactRecord]] = {}
    for fact in new.facts:
        new_groups.setdefault((fact.subject, fact.relation), {})[fact.object.canonical()] = fact

    added: list[FactRecord] = []
    removed: list[FactRecord] = []
    changed: list[tuple[FactRecord, FactRecord]] = []
    for key in sorted(set(old_groups) | set(new_groups)):
        old_objs = old_groups.get(key, {})
        new_objs = new_groups.get(key, {})
        gone = [old_objs[k] for k in sorted(set(old_objs) - set(new_objs), key=str)]
        came = [new_objs[k] for k in sorted(set(new_objs) - set(old_objs), key=str)]
        if len(gone) == 1 and len(came) == 1:
            changed.append((gone[0], came[0]))
        else:
            removed.extend(gone)
            added.extend(came)
    return FactDelta(added=tuple(added), removed=tuple(removed), changed=tuple(changed))


def apply_delta(old_facts: tuple[FactRecord, ...], delta: FactDelta) -> set[tuple]:
    """Fact identities of the old set transformed by the delta."""
    identities = {f.identity() for f in old_facts}
    identities -= {f.identity() for f in delta.removed}
    for before, after in delta.changed:
        identities.discard(before.identity())
        identities.add(after.identity())
    identities |= {f.identity() for f in delta.added}
    return identities


def derive_snapshot(
    snapshot: KgSnapshot,
    suffix: str,
    remove_entities: tuple[str, ...] = (),
    remove_facts: tuple[tuple, ...] = (),
    upsert_facts: tuple[FactRecord, ...] = (),
    engine_fault: str | None = None,
) -> KgSnapshot:
    """Build a new snapshot from this one with surgical edits applied.

    `remove_facts` takes identities as returned by FactRecord.identity().
    Removing an entity also drops every fact that references it. Upserts
    replace any existing facts with the same (subject, relation) key.
    """
    if not suffix:
        raise EmptyInput("derived snapshot needs a suffix")
    dropped_entities = set(remove_entities)
    dropped_identities = set(remove_facts)
    upsert_keys = {(f.subject, f.relation) for f in upsert_facts}

    entities = [e for e in snapshot.entities.values() if e.entity_id not in dropped_entities]
    kept: list[FactRecord] = []
    for fact in snapshot.facts:
        if fact.subject in dropped_entities:
            continue
        if fact.object.kind == "entity" and str(fact.object.value) in dropped_entities:
            continue
        if fact.identity() in dropped_identities:
            continue
        if (fact.subject, fact.relation) in upsert_keys:
            continue
        kept.append(fact)
    kept.extend(upsert_facts)

    return build_snapshot(
        entities=entities,
        relations=list(snapshot.relations.values()),
        facts=kept,
        snapshot_id=f"{snapshot.snapshot_id}+{suffix}",
        created_at=snapshot.created_at,
        engine_fault=engine_fault if engine_fault is not None else snapshot.engine_fault,
    )
