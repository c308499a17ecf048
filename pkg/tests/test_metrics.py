from __future__ import annotations

import csv

import pytest

from chronos.errors import EmptyInput, IdMismatch, MixedSystems
from chronos.metrics import (
    METRIC_NAMES,
    JudgedQuery,
    MetricReport,
    MetricValue,
    aggregate_macro,
    build_report,
    component_metrics_cascaded,
    component_metrics_headroom,
    e2e_metrics,
    judge_query,
    kg_quality,
    round2,
    top_incorrect_relations,
    write_metrics_csv,
)
from chronos.pipeline import run_reference_pipeline

from _synth import random_judged_set


def _j(
    qid: str = "q",
    *,
    rel_pred: bool = True,
    ent_pred: bool = True,
    rel_ok: bool = True,
    ent_ok: bool = True,
    status: str = "answer",
    ans_ok: bool | None = True,
    supported: bool = True,
    gold_relation: str | None = "spouse",
    time_sensitive: bool = False,
) -> JudgedQuery:
    return JudgedQuery(
        query_id=qid,
        has_relation_pred=rel_pred,
        has_entity_pred=ent_pred,
        relation_supported=supported,
        relation_correct=rel_ok,
        entity_correct=ent_ok,
        fact_status=status,
        answer_correct=ans_ok,
        gold_relation=gold_relation,
        gold_relation_supported=gold_relation is not None,
        gold_has_entity=True,
        time_sensitive=time_sensitive,
    )


def test_round2_half_up():
    assert round2(0.125) == 0.13
    assert round2(79.084999) == 79.08
    assert round2(79.085) == 79.09
    assert round2(-1.005) == -1.01  # half-up rounds away from zero
    assert round2(100.0) == 100.0


def test_metric_value_pct_and_json():
    half = MetricValue(1, 2)
    assert half.pct == 50.0
    assert MetricValue(0, 0).pct is None
    assert MetricValue.from_json(half.to_json()) == half
    assert half.to_json() == {"numerator": 1, "denominator": 2, "pct": 50.0}


def test_judged_query_invariants():
    with pytest.raises(ValueError):
        _j(rel_pred=False, rel_ok=True)
    with pytest.raises(ValueError):
        _j(ent_pred=False, ent_ok=True)
    with pytest.raises(ValueError):
        _j(status="no_fact", ans_ok=True)
    with pytest.raises(ValueError):
        _j(status="answer", ans_ok=None)


def test_judge_query_clean_fixture(kg_small, demo_queries, demo_golds):
    for query in demo_queries:
        pred = run_reference_pipeline(query, kg_small)
        judged = judge_query(pred, demo_golds[query.query_id], kg_small, kg_small.relations)
        assert judged.fully_correct, query.query_id
        assert judged.covered
        assert judged.relation_supported
        assert judged.gold_in_kg
    sensitive = {
        q.query_id
        for q in demo_queries
        if judge_query(
            run_reference_pipeline(q, kg_small),
            demo_golds[q.query_id],
            kg_small,
            kg_small.relations,
        ).time_sensitive
    }
    assert sensitive == {"q5", "q6"}


def test_judge_query_id_mismatch(kg_small, demo_queries, demo_golds):
    pred = run_reference_pipeline(demo_queries[0], kg_small)
    with pytest.raises(IdMismatch):
        judge_query(pred, demo_golds["q2"], kg_small, kg_small.relations)


def test_judge_abstention_is_uncovered_not_wrong(kg_small, demo_golds):
    from chronos.datasets import QueryRecord

    query = QueryRecord("q1", "how many cells are in the human body", "log_sample", "demo")
    pred = run_reference_pipeline(query, kg_small)
    judged = judge_query(pred, demo_golds["q1"], kg_small, kg_small.relations)
    assert not judged.covered
    assert not judged.relation_correct and not judged.entity_correct
    assert judged.relation_supported  # vacuous without a prediction
    assert judged.fact_status == "not_attempted"
    assert judged.answer_correct is None


def test_e2e_metrics_hand_counts():
    judged = [
        _j("a"),
        _j("b", ent_ok=False),
        _j("c", rel_pred=False, rel_ok=False, status="not_attempted", ans_ok=None),
        _j("d", rel_ok=False, ent_ok=False),
    ]
    coverage, precision = e2e_metrics(judged)
    assert (coverage.numerator, coverage.denominator) == (3, 4)
    assert (precision.numerator, precision.denominator) == (1, 3)


def test_e2e_empty_set():
    coverage, precision = e2e_metrics([])
    assert coverage.pct is None and precision.pct is None


def test_cascaded_pools_shrink_downstream():
    judged = [
        _j("a"),
        _j("b", ent_ok=False),
        _j("c", rel_ok=False),
        _j("d", status="no_fact", ans_ok=None),
        _j("e", ans_ok=False),
    ]
    rel_cov, rel_prec = component_metrics_cascaded(judged, "relation")
    ent_cov, ent_prec = component_metrics_cascaded(judged, "entity")
    ans_cov, ans_prec = component_metrics_cascaded(judged, "answer")
    assert rel_cov.denominator == 5 and rel_prec.numerator == 4
    assert ent_cov.denominator == 4  # only relation-correct rows
    assert ent_prec.numerator == 3
    assert ans_cov.denominator == 3  # relation and entity both correct
    assert ans_cov.numerator == 2  # the no_fact row produced nothing
    assert ans_prec == MetricValue(1, 2)
    with pytest.raises(ValueError):
        component_metrics_cascaded(judged, "retrieval")


def test_headroom_perfect_on_fixture(kg_small, demo_queries, demo_golds):
    for component in ("relation", "entity", "answer"):
        coverage, precision = component_metrics_headroom(
            demo_queries, demo_golds, kg_small, component
        )
        assert coverage.pct == 100.0, component
        assert precision.pct == 100.0, component


def test_kg_quality_hand_counts():
    judged = [
        _j("a"),
        _j("b", ans_ok=False, time_sensitive=True),
        _j("c", ans_ok=True, time_sensitive=True),
        _j("d", status="no_fact", ans_ok=None),
        _j("e", rel_ok=False),  # wrong upstream: excluded everywhere
    ]
    accuracy, freshness, coverage = kg_quality(judged, {})
    assert accuracy == MetricValue(2, 3)
    assert freshness == MetricValue(1, 2)
    assert coverage == MetricValue(3, 4)


def test_build_report_clean_fixture(kg_small, demo_queries, demo_golds):
    judged = [
        judge_query(run_reference_pipeline(q, kg_small), demo_golds[q.query_id], kg_small, kg_small.relations)
        for q in demo_queries
    ]
    report = build_report("demo", "all", "reference", judged, demo_queries, demo_golds, kg_small)
    flat = report.flatten()
    assert set(flat) == set(METRIC_NAMES)
    for name, value in flat.items():
        assert value.pct == 100.0, name


def test_report_json_round_trip(kg_small, demo_queries, demo_golds):
    judged = [
        judge_query(run_reference_pipeline(q, kg_small), demo_golds[q.query_id], kg_small, kg_small.relations)
        for q in demo_queries
    ]
    report = build_report("demo", "all", "reference", judged, demo_queries, demo_golds, kg_small)
    payload = report.to_json()
    assert "run_id" not in payload and "computed_at" not in payload
    restored = MetricReport.from_json(payload, run_id="r1", computed_at="t1")
    assert restored.flatten() == report.flatten()
    assert restored.run_id == "r1"


def _tiny_report(dataset_id: str, num: int, den: int, system_id: str = "reference") -> MetricReport:
    value = MetricValue(num, den)
    cell = {"coverage": value, "precision": value}
    return MetricReport(
        dataset_id=dataset_id,
        slice_key="all",
        system_id=system_id,
        e2e_coverage=value,
        e2e_precision=value,
        components={c: {"headroom": dict(cell), "cascaded": dict(cell)} for c in ("relation", "entity", "answer")},
        kg_accuracy=value,
        kg_freshness=value,
        kg_coverage=value,
    )


def test_aggregate_macro_is_unweighted_mean():
    reports = [_tiny_report("d1", 1, 2), _tiny_report("d2", 3, 4)]
    combined = aggregate_macro(reports)
    assert combined.dataset_id == "average"
    for value in combined.flatten().values():
        assert value.pct == pytest.approx(62.5)
        # The stored ratio reproduces the mean exactly.
        assert 100.0 * value.numerator / value.denominator == value.pct


def test_aggregate_macro_skips_empty_cells():
    reports = [_tiny_report("d1", 1, 2), _tiny_report("d2", 0, 0), _tiny_report("d3", 1, 1)]
    combined = aggregate_macro(reports)
    assert combined.e2e_coverage.pct == pytest.approx(75.0)
    assert combined.e2e_coverage.denominator == 2


def test_aggregate_macro_rejects_bad_input():
    with pytest.raises(EmptyInput):
        aggregate_macro([])
    with pytest.raises(MixedSystems):
        aggregate_macro([_tiny_report("d1", 1, 2), _tiny_report("d2", 1, 2, system_id="other")])


def test_top_incorrect_relations_ranking():
    judged = [
        _j("a", gold_relation="spouse", ans_ok=False),
        _j("b", gold_relation="spouse", ent_ok=False),
        _j("c", gold_relation="winner", rel_ok=False),
        _j("d", gold_relation="height"),
        _j("e", gold_relation="aaa", ans_ok=False),
    ]
    ranked = top_incorrect_relations(judged)
    assert ranked == [("spouse", 2), ("aaa", 1), ("winner", 1)]
    assert top_incorrect_relations(judged, k=1) == [("spouse", 2)]


def test_write_metrics_csv(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv([_tiny_report("d1", 1, 3)], path, run_id="r42")
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["run_id", "dataset_id", "slice", "metric", "value", "numerator", "denominator"]
    assert len(rows) == 1 + len(METRIC_NAMES)
    body = {row[3]: row for row in rows[1:]}
    assert body["e2e_coverage"] == ["r42", "d1", "all", "e2e_coverage", "33.33", "1", "3"]


def test_identity_and_range_over_random_sets():
    for seed in range(120):
        judged = random_judged_set(seed, size=40)
        coverage, precision = e2e_metrics(judged)
        fully = sum(1 for j in judged if j.relation_correct and j.entity_correct)
        if coverage.pct is not None and precision.pct is not None:
            left = coverage.pct * precision.pct / 100.0
            right = 100.0 * fully / len(judged)
            assert left == pytest.approx(right, rel=1e-12)
        for value in (coverage, precision):
            if value.pct is not None:
                assert 0.0 <= value.pct <= 100.0
                assert 100.0 * value.numerator / value.denominator == value.pct
