from __future__ import annotations

import random
from collections import Counter

import pytest

from chronos.annotation import EntityLabel, GoldLabel
from chronos.datasets import (
    SLICE_KEYS,
    QueryRecord,
    build_slices,
    carry_gold,
    categorize_domain,
    ingest_queries,
    load_ruleset,
    locate_surface,
    paraphrase,
    save_queries,
    substitute_entities,
    weighted_sample,
)
from chronos.errors import DuplicateId, InvalidN, MissingGold, NoPeers, NoSpan, ParseError


def test_ingest_demo_queries(demo_queries):
    assert len(demo_queries) == 7
    assert all(q.dataset_id == "demo" for q in demo_queries)
    assert demo_queries[0].text == "Who is Barack Obama's spouse?"


def test_ingest_dataset_id_is_authoritative(tmp_path, demo_queries):
    path = tmp_path / "again.jsonl"
    save_queries(demo_queries, path)
    renamed = ingest_queries(path, "renamed")
    assert all(q.dataset_id == "renamed" for q in renamed)
    assert [q.query_id for q in renamed] == [q.query_id for q in demo_queries]


def test_save_load_round_trip(tmp_path, demo_queries):
    path = tmp_path / "copy.jsonl"
    save_queries(demo_queries, path)
    assert ingest_queries(path, "demo") == demo_queries


def test_ingest_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.jsonl"
    row = '{"query_id": "a", "text": "Who?", "source": "log_sample"}\n'
    path.write_text(row + row, encoding="utf-8")
    with pytest.raises(DuplicateId, match="dup.jsonl:2"):
        ingest_queries(path, "d")


def test_ingest_rejects_bad_rows(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(ParseError, match="bad.jsonl:1"):
        ingest_queries(path, "d")
    path.write_text('{"text": "no id"}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="query_id"):
        ingest_queries(path, "d")
    path.write_text('{"query_id": "a", "text": "x", "source": "wiki_dump"}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        ingest_queries(path, "d")


def test_synthetic_source_requires_parent():
    with pytest.raises(ValueError):
        QueryRecord("a", "x", "synthetic_paraphrase", "d")


def _weighted(qid: str, weight: float) -> QueryRecord:
    return QueryRecord(qid, f"text {qid}", "log_sample", "d", weight=weight)


def test_sample_edge_sizes(demo_queries):
    assert weighted_sample(demo_queries, 0, seed=1) == []
    assert sorted(q.query_id for q in weighted_sample(demo_queries, 7, seed=1)) == [
        q.query_id for q in demo_queries
    ]
    with pytest.raises(InvalidN):
        weighted_sample(demo_queries, 8, seed=1)
    with pytest.raises(InvalidN):
        weighted_sample(demo_queries, -1, seed=1)


def test_sample_rejects_non_finite_weight():
    with pytest.raises(InvalidN):
        weighted_sample([_weighted("a", float("inf"))], 1, seed=1)


def test_sample_is_seed_deterministic(demo_queries):
    first = weighted_sample(demo_queries, 3, seed=99)
    second = weighted_sample(demo_queries, 3, seed=99)
    assert first == second
    # Different seeds should disagree at least once over a few draws.
    assert any(weighted_sample(demo_queries, 3, seed=s) != first for s in range(5))


def test_zero_weight_never_beats_positive():
    dataset = [_weighted("dead", 0.0)] + [_weighted(f"q{i}", 1.0) for i in range(5)]
    for seed in range(200):
        chosen = weighted_sample(dataset, 5, seed)
        assert all(q.query_id != "dead" for q in chosen)
    # A zero-weight record can still appear when n forces it in.
    assert {q.query_id for q in weighted_sample(dataset, 6, seed=3)} == {
        q.query_id for q in dataset
    }


def test_heavier_weights_sample_more_often():
    dataset = [_weighted("heavy", 9.0)] + [_weighted(f"q{i}", 1.0) for i in range(9)]
    hits = Counter(weighted_sample(dataset, 1, seed)[0].query_id for seed in range(4000))
    # heavy carries half the total weight; give the estimate a wide margin.
    assert 0.40 < hits["heavy"] / 4000 < 0.60


def test_substitution_swaps_same_type_peer(kg_small, demo_queries, demo_golds):
    query = demo_queries[0]
    variants = substitute_entities(query, demo_golds["q1"], kg_small, k=5, seed=3)
    assert len(variants) == 1  # only one other person in the fixture graph
    new_query, new_gold = variants[0]
    assert new_query.text == "Who is Michelle Obama's spouse?"
    assert new_query.source == "synthetic_substitution"
    assert new_query.parent_query_id == "q1"
    assert new_gold.entity is not None and new_gold.entity.entity_id == "Q2"
    assert new_query.text[new_gold.entity.start : new_gold.entity.end] == "Michelle Obama"
    assert new_gold.relation == "spouse"
    assert new_gold.answer is not None and new_gold.answer.value == "Q1"


def test_substitution_can_produce_unanswerable(kg_small, demo_queries, demo_golds):
    # Michelle has a height fact; swapping her for Barack (no height) drops the answer.
    query = next(q for q in demo_queries if q.query_id == "q7")
    variants = substitute_entities(query, demo_golds["q7"], kg_small, k=5, seed=3)
    by_id = {gold.entity.entity_id: gold for _, gold in variants}
    assert by_id["Q1"].answer is None


def test_substitution_k_zero(kg_small, demo_queries, demo_golds):
    assert substitute_entities(demo_queries[0], demo_golds["q1"], kg_small, 0, 1) == []


def test_substitution_errors(kg_small, demo_queries, demo_golds):
    gold = demo_golds["q1"]
    no_span = GoldLabel(
        query_id="q1",
        knowledge_seeking=True,
        properties=frozenset(),
        entity=None,
        relation="spouse",
        answer=None,
        answer_type="Unanswerable",
        support_count=3,
        total_annotators=3,
        dominant=True,
    )
    with pytest.raises(NoSpan):
        substitute_entities(demo_queries[0], no_span, kg_small, 1, 1)
    # Only landmark in the graph: no peers to swap in.
    tower = next(q for q in demo_queries if q.query_id == "q3")
    with pytest.raises(NoPeers):
        substitute_entities(tower, demo_golds["q3"], kg_small, 1, 1)
    assert gold.entity is not None


def test_paraphrase_applies_matching_rules(fixtures_dir, demo_queries):
    rules = load_ruleset(fixtures_dir / "paraphrase_rules.jsonl")
    variants = paraphrase(demo_queries[0], rules)
    texts = {v.text for v in variants}
    assert "What is the spouse of Barack Obama?" in texts
    assert any(t.startswith("Could you tell me:") for t in texts)
    assert all(v.source == "synthetic_paraphrase" for v in variants)
    assert all(v.parent_query_id == "q1" for v in variants)


def test_involutive_rules_round_trip(fixtures_dir, demo_queries):
    rules = load_ruleset(fixtures_dir / "paraphrase_rules.jsonl")
    involutive = [r for r in rules if r.involutive]
    assert involutive
    probes = [q.text for q in demo_queries] + ["Who are Alice Prim and Bob Querty?"]
    checked = 0
    for rule in involutive:
        for text in probes:
            seed = QueryRecord("p", text, "log_sample", "d")
            once = [v for v in paraphrase(seed, [rule])]
            if not once:
                continue
            again = paraphrase(
                QueryRecord("p2", once[0].text, "log_sample", "d"), [rule]
            )
            assert again and again[0].text == text
            checked += 1
    assert checked > 0


def test_paraphrase_no_match_no_variants(fixtures_dir):
    rules = load_ruleset(fixtures_dir / "paraphrase_rules.jsonl")
    assert paraphrase(QueryRecord("x", "tell me everything", "log_sample", "d"), rules) == []


def test_load_ruleset_rejects_bad_regex(tmp_path):
    path = tmp_path / "rules.jsonl"
    path.write_text('{"name": "broken", "pattern": "(", "template": "x"}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="rules.jsonl:1"):
        load_ruleset(path)


def test_locate_surface_longest_then_leftmost():
    assert locate_surface("the eiffel tower stands", ["eiffel", "eiffel tower"]) == (4, 16)
    assert locate_surface("no match", ["xyz"]) is None
    assert locate_surface("EIFFEL TOWER", ["eiffel tower"]) == (0, 12)


def test_carry_gold_reanchors_span(fixtures_dir, kg_small, demo_queries, demo_golds):
    rules = load_ruleset(fixtures_dir / "paraphrase_rules.jsonl")
    gold = demo_golds["q1"]
    for variant in paraphrase(demo_queries[0], rules):
        carried = carry_gold(gold, variant, kg_small)
        assert carried is not None
        assert carried.query_id == variant.query_id
        span = carried.entity
        assert variant.text[span.start : span.end].lower() == span.surface.lower()
        assert span.entity_id == "Q1"
        assert carried.relation == gold.relation
        assert carried.answer == gold.answer


def test_carry_gold_none_when_surface_vanishes(kg_small, demo_golds):
    moved = QueryRecord("q1-x", "Who is the president's wife?", "synthetic_paraphrase", "demo", parent_query_id="q1")
    assert carry_gold(demo_golds["q1"], moved, kg_small) is None


def test_categorize_domain_fallbacks(kg_small, demo_golds):
    relations = kg_small.relations
    assert categorize_domain(demo_golds["q1"], relations) == "people"
    assert categorize_domain(demo_golds["q4"], relations) == "sports"
    no_relation = GoldLabel(
        query_id="x",
        knowledge_seeking=True,
        properties=frozenset(),
        entity=EntityLabel(0, 4, "Q4 surface"[:4], "Q4"),
        relation=None,
        answer=None,
        answer_type="Unanswerable",
        support_count=3,
        total_annotators=3,
        dominant=True,
    )
    assert categorize_domain(no_relation, relations, kg_small) == "sports"
    assert categorize_domain(no_relation, relations, None) == "general_qa"


def test_build_slices_census(kg_small, demo_queries, demo_golds):
    slices = {s.slice_key: s.query_ids for s in build_slices(demo_queries, demo_golds, kg_small.relations, kg_small)}
    assert set(slices) == set(SLICE_KEYS)
    assert slices["all"] == ("q1", "q2", "q3", "q4", "q5", "q6", "q7")
    assert slices["people"] == ("q1", "q2", "q6")
    assert slices["sports"] == ("q4", "q5")
    assert slices["general_qa"] == ("q3", "q7")
    assert slices["time_sensitive"] == ("q5", "q6")
    assert slices["unanswerable"] == ()
    domain_total = sum(
        len(slices[k]) for k in ("people", "sports", "general_qa", "movies_tv", "albums_and_songs", "events")
    )
    assert domain_total == len(slices["all"])


def test_build_slices_requires_gold(demo_queries, demo_golds, kg_small):
    partial = dict(demo_golds)
    del partial["q4"]
    with pytest.raises(MissingGold, match="q4"):
        build_slices(demo_queries, partial, kg_small.relations, kg_small)


def test_slice_membership_random_property(kg_small, demo_queries, demo_golds):
    rng = random.Random(20260817)
    for _ in range(50):
        subset = rng.sample(demo_queries, rng.randint(1, len(demo_queries)))
        slices = {
            s.slice_key: s.query_ids
            for s in build_slices(subset, demo_golds, kg_small.relations, kg_small)
        }
        chosen = {q.query_id for q in subset}
        assert set(slices["all"]) == chosen
        for key, ids in slices.items():
            assert set(ids) <= chosen, key
