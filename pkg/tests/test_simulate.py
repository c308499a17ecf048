from __future__ import annotations

import random

from chronos.annotation import agreement_report, aggregate_gold
from chronos.simulate import (
    SimulatedAnnotator,
    annotate_query,
    default_panel,
    simulate_annotations,
)


def test_careful_annotator_copies_gold(kg_small, demo_golds):
    careful = SimulatedAnnotator("sim-careful", 0.0)
    for gold in demo_golds.values():
        record = annotate_query(gold, careful, kg_small, seed=1)
        assert record.query_id == gold.query_id
        assert record.relation == gold.relation
        assert record.entity == gold.entity
        assert record.answer == gold.answer
        assert record.answer_type == gold.answer_type
        assert record.properties == gold.properties


def test_simulation_is_deterministic(kg_small, demo_golds):
    golds = list(demo_golds.values())
    first = simulate_annotations(golds, kg_small, seed=11)
    second = simulate_annotations(golds, kg_small, seed=11)
    assert first == second
    assert first != simulate_annotations(golds, kg_small, seed=12)


def test_per_query_seeding_ignores_batch_order(kg_small, demo_golds):
    golds = list(demo_golds.values())
    shuffled = list(golds)
    random.Random(3).shuffle(shuffled)
    by_key = lambda records: {(r.annotator_id, r.query_id): r for r in records}
    assert by_key(simulate_annotations(golds, kg_small, seed=11)) == by_key(
        simulate_annotations(shuffled, kg_small, seed=11)
    )


def test_records_always_satisfy_annotation_invariants(kg_small, demo_golds):
    panel = [
        SimulatedAnnotator("wild", 0.9),
        SimulatedAnnotator("foe", 1.0, adversarial=True),
    ]
    for seed in range(20):
        records = simulate_annotations(list(demo_golds.values()), kg_small, panel, seed=seed)
        for record in records:
            assert (record.answer_type == "Unanswerable") == (record.answer is None)


def test_error_rate_orders_agreement(kg_small, demo_golds):
    golds = list(demo_golds.values())
    panel = default_panel()
    records = simulate_annotations(golds, kg_small, panel, seed=11)
    assert {r.annotator_id for r in records} == {"sim-careful", "sim-typical", "sim-hasty"}
    careful = [r for r in records if r.annotator_id == "sim-careful"]
    assert len(careful) == len(golds)
    # The zero-error grader reproduces every gold relation.
    gold_by_id = {g.query_id: g for g in golds}
    assert all(r.relation == gold_by_id[r.query_id].relation for r in careful)


def test_noisy_panel_feeds_agreement_pipeline(kg_small, demo_golds):
    golds = list(demo_golds.values())
    panel = [
        SimulatedAnnotator("a", 0.0),
        SimulatedAnnotator("b", 0.0),
        SimulatedAnnotator("chaos", 1.0, adversarial=True),
    ]
    records = simulate_annotations(golds, kg_small, panel, seed=4)
    report = agreement_report("sim", records, alpha_threshold=0.99)
    assert report.flagged
    assert report.suspect_annotator == "chaos"
    # Majority voting still recovers the gold entity for every query.
    for gold in golds:
        votes = [r for r in records if r.query_id == gold.query_id]
        recovered = aggregate_gold(votes)
        assert recovered.entity_matches(gold.entity.entity_id if gold.entity else None)


def test_fixture_annotation_file_matches_generator(fixtures_dir, kg_small, demo_golds):
    from chronos.annotation import load_annotations

    stored = load_annotations(fixtures_dir / "annotations" / "demo.annotations.jsonl")
    regenerated = simulate_annotations(list(demo_golds.values()), kg_small, seed=11)
    assert stored == regenerated
