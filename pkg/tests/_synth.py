"""Synthetic corpora for the property suites.

Two generators live here: a wide KG-plus-queries corpus stamped from the
same relation catalog and query surface shapes as fixtures/kg_small, big
enough that every fault kind has well over a hundred fully correct base
predictions, and a random JudgedQuery factory that respects the dataclass
invariants for partition and identity checks.
"""

from __future__ import annotations

import random
from datetime import date, timedelta

from chronos.annotation import EntityLabel, GoldLabel
from chronos.answers import AnswerValue
from chronos.datasets import QueryRecord
from chronos.kg_store import (
    EntityRecord,
    FactRecord,
    KgSnapshot,
    RelationSpec,
    build_snapshot,
)
from chronos.metrics import JudgedQuery

RELATIONS = [
    RelationSpec("spouse", ("married to", "spouse"), "people", False, "Entity", True),
    RelationSpec("height", ("how tall", "height"), "general_qa", False, "NumberWithUnit", True),
    RelationSpec("winner", ("who won", "winner"), "sports", False, "Entity", True),
    RelationSpec("event_date", ("when is", "event date"), "sports", True, "Date", True),
    RelationSpec("net_worth", ("net worth", "how rich"), "people", True, "NumberWithUnit", True),
]


def build_wide_corpus(
    couples: int = 30, events: int = 20
) -> tuple[KgSnapshot, list[QueryRecord], dict[str, GoldLabel]]:
    """A stamped-out corpus: every query is fully correct by construction."""
    entities: list[EntityRecord] = []
    facts: list[FactRecord] = []
    queries: list[QueryRecord] = []
    golds: dict[str, GoldLabel] = {}

    def add_query(qid: str, text: str, surface: str, entity_id: str, relation: str,
                  answer: AnswerValue, answer_type: str, props: tuple[str, ...] = ()) -> None:
        start = text.index(surface)
        queries.append(QueryRecord(qid, text, "research_set", "wide"))
        golds[qid] = GoldLabel(
            query_id=qid,
            knowledge_seeking=True,
            properties=frozenset(props),
            entity=EntityLabel(start, start + len(surface), surface, entity_id),
            relation=relation,
            answer=answer,
            answer_type=answer_type,
            support_count=3,
            total_annotators=3,
            dominant=True,
        )

    for i in range(couples):
        a, b = f"pa{i}", f"pb{i}"
        name_a, name_b = f"Avery{i} North{i}", f"Blake{i} South{i}"
        entities.append(EntityRecord(a, name_a, (name_a,), "person"))
        entities.append(EntityRecord(b, name_b, (name_b,), "person"))
        facts.append(FactRecord(a, "spouse", AnswerValue("entity", b), date(2025, 5, 1)))
        facts.append(FactRecord(b, "spouse", AnswerValue("entity", a), date(2025, 5, 1)))
        worth = AnswerValue("number_unit", 10.0 + i, "million USD")
        facts.append(FactRecord(a, "net_worth", worth, date(2026, 1, 10)))
        tall = AnswerValue("number_unit", 1.5 + (i % 5) / 10, "metre")
        facts.append(FactRecord(b, "height", tall, date(2025, 3, 2)))

        add_query(f"sp{i}", f"Who is {name_a}'s spouse?", name_a, a, "spouse",
                  AnswerValue("entity", b), "Entity")
        add_query(f"nw{i}", f"What is {name_a}'s net worth?", name_a, a, "net_worth",
                  worth, "NumberWithUnit", ("time_sensitive",))
        add_query(f"ht{i}", f"How tall is {name_b}?", name_b, b, "height",
                  tall, "NumberWithUnit")

    for i in range(events):
        t = f"tt{i}"
        name_t = f"Open{i} Cup{i}"
        entities.append(EntityRecord(t, name_t, (name_t,), "tennis_tournament"))
        champion = f"pa{i % couples}"
        facts.append(FactRecord(t, "winner", AnswerValue("entity", champion), date(2025, 11, 2)))
        when = AnswerValue("date", date(2026, 3, 1) + timedelta(days=i))
        facts.append(FactRecord(t, "event_date", when, date(2026, 1, 5)))

        add_query(f"wn{i}", f"Who won the {name_t}?", name_t, t, "winner",
                  AnswerValue("entity", champion), "Entity")
        add_query(f"ev{i}", f"When is the {name_t}?", name_t, t, "event_date",
                  when, "Date", ("time_sensitive",))

    snapshot = build_snapshot(entities, RELATIONS, facts, "wide", "2026-02-01T00:00:00Z")
    return snapshot, queries, golds


_STATUSES = ("answer", "no_fact", "missing_entity", "execution_failure", "not_attempted")


def random_judged(rng: random.Random, query_id: str) -> JudgedQuery:
    """A random verdict row satisfying the JudgedQuery invariants."""
    has_rel = rng.random() < 0.85
    has_ent = rng.random() < 0.85
    gold_relation = rng.choice(("spouse", "winner", None))
    rel_ok = has_rel and gold_relation is not None and rng.random() < 0.8
    ent_ok = has_ent and rng.random() < 0.8
    if has_rel and has_ent and rng.random() < 0.8:
        status = "answer" if rng.random() < 0.75 else rng.choice(_STATUSES[1:4])
    else:
        status = "not_attempted"
    answer_ok = (rng.random() < 0.85) if status == "answer" else None
    return JudgedQuery(
        query_id=query_id,
        has_relation_pred=has_rel,
        has_entity_pred=has_ent,
        relation_supported=not has_rel or rng.random() < 0.9,
        relation_correct=rel_ok,
        entity_correct=ent_ok,
        fact_status=status,
        answer_correct=answer_ok,
        gold_relation=gold_relation,
        gold_relation_supported=gold_relation is not None and rng.random() < 0.9,
        gold_has_entity=rng.random() < 0.9,
        gold_in_kg=rng.random() < 0.9,
        time_sensitive=rng.random() < 0.3,
    )


def random_judged_set(seed: int, size: int) -> list[JudgedQuery]:
    rng = random.Random(seed)
    return [random_judged(rng, f"r{seed}-{i}") for i in range(size)]
