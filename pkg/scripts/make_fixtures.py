"""Regenerate everything under fixtures/ from first principles.

Usage, from the repository root:

    python3 scripts/make_fixtures.py

The outputs are committed; this script exists so the corpus stays
reproducible and internally consistent. It refuses to write golds the
reference pipeline cannot reproduce exactly.
"""

from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from chronos.annotation import EntityLabel, GoldLabel, save_annotations, save_golds
from chronos.answers import AnswerValue, answers_equal
from chronos.datasets import QueryRecord, save_queries
from chronos.kg_store import (
    EntityRecord,
    FactRecord,
    RelationSpec,
    build_snapshot,
    write_snapshot,
)
from chronos.metrics import judge_query
from chronos.pipeline import run_reference_pipeline
from chronos.simulate import simulate_annotations

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

ENTITIES = [
    EntityRecord("Q1", "Barack Obama", ("Barack Obama", "President Obama", "Barack"), "person"),
    EntityRecord("Q2", "Michelle Obama", ("Michelle Obama", "Michelle"), "person"),
    EntityRecord("Q3", "Eiffel Tower", ("Eiffel Tower", "the eiffel tower"), "landmark"),
    EntityRecord("Q4", "Paris Masters", ("Paris Masters", "paris"), "tennis_tournament"),
    EntityRecord("Q5", "Paris–Roubaix", ("Paris–Roubaix", "Paris-Roubaix", "paris"), "cycling_race"),
    EntityRecord("Q6", "Tour de France", ("Tour de France", "le tour"), "cycling_race"),
]

RELATIONS = [
    RelationSpec("spouse", ("married to", "spouse", "wife of", "husband of"), "people", False, "Entity", True),
    RelationSpec("height", ("how tall", "height"), "general_qa", False, "NumberWithUnit", True),
    RelationSpec("winner", ("who won", "winner"), "sports", False, "Entity", True),
    RelationSpec("event_date", ("when is", "when will", "event date"), "sports", True, "Date", True),
    RelationSpec("net_worth", ("net worth", "how rich"), "people", True, "NumberWithUnit", True),
]


def _facts(net_worth: float, verified: str) -> list[FactRecord]:
    lv = date.fromisoformat
    return [
        FactRecord("Q1", "spouse", AnswerValue("entity", "Q2"), lv("2025-05-01")),
        FactRecord("Q2", "spouse", AnswerValue("entity", "Q1"), lv("2025-05-01")),
        FactRecord("Q3", "height", AnswerValue("number_unit", 330.0, "metre"), lv("2025-03-10")),
        FactRecord("Q2", "height", AnswerValue("number_unit", 1.8, "metre"), lv("2025-03-10")),
        FactRecord("Q4", "winner", AnswerValue("entity", "Q1"), lv("2025-11-20")),
        FactRecord("Q6", "event_date", AnswerValue("date", date(2026, 7, 4)), lv("2026-01-15")),
        FactRecord("Q1", "net_worth", AnswerValue("number_unit", net_worth, "million USD"), lv(verified)),
    ]


# (query_id, text, entity surface, entity id, relation, gold answer, properties)
DEMO = [
    ("q1", "Who is Barack Obama's spouse?", "Barack Obama", "Q1", "spouse",
     AnswerValue("entity", "Q2"), ()),
    ("q2", "Who is Michelle Obama married to?", "Michelle Obama", "Q2", "spouse",
     AnswerValue("entity", "Q1"), ()),
    ("q3", "How tall is the Eiffel Tower?", "Eiffel Tower", "Q3", "height",
     AnswerValue("number_unit", 330.0, "metre"), ()),
    ("q4", "Who won the Paris Masters?", "Paris Masters", "Q4", "winner",
     AnswerValue("entity", "Q1"), ()),
    ("q5", "When is the Tour de France?", "Tour de France", "Q6", "event_date",
     AnswerValue("date", date(2026, 7, 4)), ("time_sensitive",)),
    ("q6", "What is Barack Obama's net worth?", "Barack Obama", "Q1", "net_worth",
     AnswerValue("number_unit", 50.0, "million USD"), ("time_sensitive",)),
    ("q7", "How tall is Michelle Obama?", "Michelle Obama", "Q2", "height",
     AnswerValue("number_unit", 1.8, "metre"), ()),
]

PARAPHRASE_RULES = [
    {"name": "possessive_to_of", "pattern": r"Who is (?P<owner>.+)'s (?P<rel>[\w ]+)\?",
     "template": "What is the {rel} of {owner}?", "involutive": False},
    {"name": "of_to_possessive", "pattern": r"What is the (?P<rel>[\w ]+) of (?P<owner>.+)\?",
     "template": "Who is {owner}'s {rel}?", "involutive": False},
    {"name": "politeness_add", "pattern": r"(?P<q>(?:Who|What|How|When)\b.+\?)",
     "template": "Could you tell me: {q}", "involutive": False},
    {"name": "politeness_remove", "pattern": r"Could you tell me: (?P<q>.+)",
     "template": "{q}", "involutive": False},
    {"name": "contract_what_is", "pattern": r"What is (?P<rest>.+)",
     "template": "What's {rest}", "involutive": False},
    {"name": "expand_whats", "pattern": r"What's (?P<rest>.+)",
     "template": "What is {rest}", "involutive": False},
    {"name": "flip_pair", "pattern": r"Who are (?P<a>[\w ]+) and (?P<b>[\w ]+)\?",
     "template": "Who are {b} and {a}?", "involutive": True},
]

RUN_TOML = """\
datasets = ["queries/demo.jsonl"]
snapshot = "{snapshot}"
system = "reference"
seed = 7
alpha_threshold = 0.667
qualification_threshold = 0.9
"""


def build_demo() -> tuple[list[QueryRecord], list[GoldLabel]]:
    queries: list[QueryRecord] = []
    golds: list[GoldLabel] = []
    for qid, text, surface, entity_id, relation, answer, props in DEMO:
        start = text.index(surface)
        queries.append(QueryRecord(qid, text, "log_sample", "demo"))
        golds.append(
            GoldLabel(
                query_id=qid,
                knowledge_seeking=True,
                properties=frozenset(props),
                entity=EntityLabel(start, start + len(surface), surface, entity_id),
                relation=relation,
                answer=answer,
                answer_type=RELATIONS_BY_ID[relation].expected_answer_type,
                support_count=3,
                total_annotators=3,
                dominant=True,
            )
        )
    return queries, golds


RELATIONS_BY_ID = {r.relation_id: r for r in RELATIONS}


def main() -> None:
    kg_small = build_snapshot(
        ENTITIES, RELATIONS, _facts(50.0, "2026-01-15"), "kg_small", "2026-01-15T00:00:00Z"
    )
    kg_small_v2 = build_snapshot(
        ENTITIES, RELATIONS, _facts(55.0, "2026-02-15"), "kg_small_v2", "2026-02-15T00:00:00Z"
    )
    write_snapshot(kg_small, FIXTURES / "kg_small")
    write_snapshot(kg_small_v2, FIXTURES / "kg_small_v2")

    queries, golds = build_demo()
    gold_by_id = {g.query_id: g for g in golds}
    for query in queries:
        prediction = run_reference_pipeline(query, kg_small)
        gold = gold_by_id[query.query_id]
        judged = judge_query(prediction, gold, kg_small, kg_small.relations)
        if not judged.fully_correct:
            raise SystemExit(f"{query.query_id}: reference pipeline disagrees with gold: {judged}")
        assert prediction.answer is not None and answers_equal(prediction.answer, gold.answer)

    (FIXTURES / "queries").mkdir(parents=True, exist_ok=True)
    save_queries(queries, FIXTURES / "queries" / "demo.jsonl")
    save_golds(golds, FIXTURES / "queries" / "demo.gold.jsonl")

    with (FIXTURES / "paraphrase_rules.jsonl").open("w", encoding="utf-8") as handle:
        for rule in PARAPHRASE_RULES:
            handle.write(json.dumps(rule, ensure_ascii=False) + "\n")

    (FIXTURES / "annotations").mkdir(parents=True, exist_ok=True)
    records = simulate_annotations(golds, kg_small, seed=11)
    save_annotations(records, FIXTURES / "annotations" / "demo.annotations.jsonl")

    (FIXTURES / "qualification").mkdir(parents=True, exist_ok=True)
    key = [gold_by_id[qid] for qid in ("q1", "q3", "q4", "q5", "q6")]
    save_golds(key, FIXTURES / "qualification" / "key.gold.jsonl")

    (FIXTURES / "run.toml").write_text(RUN_TOML.format(snapshot="kg_small"), encoding="utf-8")
    (FIXTURES / "run_v2.toml").write_text(RUN_TOML.format(snapshot="kg_small_v2"), encoding="utf-8")
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
