from __future__ import annotations

import pytest

from chronos.buckets import (
    BUCKETS,
    EXPECTED_BUCKET,
    assign_bucket,
    attribution_check,
    load_buckets,
    sankey_payload,
    save_buckets,
    summarize_buckets,
)
from chronos.errors import ParseError
from chronos.metrics import JudgedQuery, judge_query
from chronos.pipeline import FaultKind, inject_fault, run_reference_pipeline

from _synth import random_judged_set


def _j(**kwargs) -> JudgedQuery:
    base = dict(
        query_id="q",
        has_relation_pred=True,
        has_entity_pred=True,
        relation_supported=True,
        relation_correct=True,
        entity_correct=True,
        fact_status="answer",
        answer_correct=True,
        gold_relation="spouse",
        gold_relation_supported=True,
        gold_has_entity=True,
        gold_in_kg=True,
    )
    base.update(kwargs)
    return JudgedQuery(**base)


def test_fully_correct_gets_no_bucket():
    assignment = assign_bucket(_j())
    assert assignment.bucket is None
    assert assignment.rationale == "fully correct"


def test_each_bucket_reachable():
    cases = {
        "QUE_UnsupportedRelation": _j(relation_supported=False, relation_correct=False),
        "QUE_RelationPredictionError": _j(relation_correct=False),
        "QUE_EntityPredictionError": _j(entity_correct=False),
        "KGE_MissingEntity": _j(gold_in_kg=False, fact_status="missing_entity", answer_correct=None),
        "KGE_ExecutionError": _j(fact_status="execution_failure", answer_correct=None),
        "KGE_MissingFact": _j(fact_status="no_fact", answer_correct=None),
        "KGE_IncorrectFact": _j(answer_correct=False),
    }
    assert set(cases) == set(BUCKETS)
    for expected, judged in cases.items():
        assert assign_bucket(judged).bucket == expected


def test_upstream_bucket_wins():
    both = _j(relation_correct=False, fact_status="no_fact", answer_correct=None)
    assert assign_bucket(both).bucket == "QUE_RelationPredictionError"
    unsupported_and_wrong = _j(
        relation_supported=False, relation_correct=False, entity_correct=False
    )
    assert assign_bucket(unsupported_and_wrong).bucket == "QUE_UnsupportedRelation"
    entity_and_kg = _j(entity_correct=False, fact_status="no_fact", answer_correct=None)
    assert assign_bucket(entity_and_kg).bucket == "QUE_EntityPredictionError"


def test_abstention_routes_by_gold():
    # No prediction at all, gold relation out of catalog: unsupported.
    silent = _j(
        has_relation_pred=False,
        has_entity_pred=False,
        relation_correct=False,
        entity_correct=False,
        fact_status="not_attempted",
        answer_correct=None,
        gold_relation="favorite_color",
        gold_relation_supported=False,
    )
    assert assign_bucket(silent).bucket == "QUE_UnsupportedRelation"
    # Same silence with a supported gold: charged to the relation stage.
    missed = _j(
        has_relation_pred=False,
        has_entity_pred=False,
        relation_correct=False,
        entity_correct=False,
        fact_status="not_attempted",
        answer_correct=None,
    )
    assert assign_bucket(missed).bucket == "QUE_RelationPredictionError"


def test_entity_error_requires_gold_in_kg():
    # Wrong link but the gold entity is not in the graph: the graph is at fault.
    judged = _j(entity_correct=False, gold_in_kg=False, fact_status="no_fact", answer_correct=None)
    assert assign_bucket(judged).bucket == "KGE_MissingEntity"


def test_not_attempted_is_execution_error():
    judged = _j(fact_status="not_attempted", answer_correct=None)
    assignment = assign_bucket(judged)
    assert assignment.bucket == "KGE_ExecutionError"
    assert "not attempted" in assignment.rationale


def test_partition_property_over_random_sets():
    for seed in range(200):
        judged = random_judged_set(seed, size=30)
        assignments = [assign_bucket(j) for j in judged]
        summary = summarize_buckets(assignments)
        assert summary.correct_count + sum(summary.counts.values()) == summary.total
        assert summary.total == len(judged)
        for judged_row, assignment in zip(judged, assignments):
            assert (assignment.bucket is None) == (
                judged_row.relation_correct
                and judged_row.entity_correct
                and judged_row.answer_correct is True
            )


def test_fault_diagonal_on_fixture(kg_small, demo_queries, demo_golds):
    scenarios = []
    for query in demo_queries:
        prediction = run_reference_pipeline(query, kg_small)
        gold = demo_golds[query.query_id]
        for fault in FaultKind:
            scenario = inject_fault(prediction, gold, kg_small, fault)
            judged = judge_query(
                scenario.prediction, scenario.gold, scenario.snapshot, scenario.snapshot.relations
            )
            scenarios.append((scenario, judged))
    matrix = attribution_check(scenarios)
    for fault in FaultKind:
        row = matrix[fault.value]
        assert row[EXPECTED_BUCKET[fault]] == len(demo_queries), fault
        off_diagonal = {b: n for b, n in row.items() if n and b != EXPECTED_BUCKET[fault]}
        assert off_diagonal == {}, (fault, off_diagonal)


def test_summary_sankey_shape():
    judged = [
        _j(query_id="a"),
        _j(query_id="b", relation_correct=False),
        _j(query_id="c", fact_status="no_fact", answer_correct=None),
    ]
    summary = summarize_buckets([assign_bucket(j) for j in judged])
    assert summary.correct_count == 1
    assert summary.family_counts == {"QUE": 1, "KGE": 1}
    payload = sankey_payload(summary)
    assert payload["nodes"][:4] == ["All", "Correct", "QUE", "KGE"]
    weights = {(e["from"], e["to"]): e["weight"] for e in payload["edges"]}
    assert weights[("All", "Correct")] == 1
    assert weights[("All", "QUE")] == 1
    assert weights[("QUE", "QUE_RelationPredictionError")] == 1
    assert weights[("KGE", "KGE_MissingFact")] == 1
    # Zero-weight edges stay in the payload so the diagram shape is stable.
    assert len(payload["edges"]) == 3 + len(BUCKETS)
    assert weights[("KGE", "KGE_IncorrectFact")] == 0


def test_buckets_file_round_trip(tmp_path):
    assignments = [
        assign_bucket(_j(query_id="a")),
        assign_bucket(_j(query_id="b", entity_correct=False)),
    ]
    path = tmp_path / "buckets.jsonl"
    save_buckets(assignments, path)
    assert load_buckets(path) == assignments


def test_load_buckets_rejects_unknown_bucket(tmp_path):
    path = tmp_path / "buckets.jsonl"
    path.write_text('{"query_id": "a", "bucket": "QUE_Gremlins"}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="buckets.jsonl:1"):
        load_buckets(path)
