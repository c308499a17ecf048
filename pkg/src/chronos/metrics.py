"""Judging predictions against gold and turning verdicts into metrics.

Every ratio is kept as an explicit numerator/denominator pair; the
percentage is derived, never stored alone, so any reported number can be
audited. Component metrics come in two modes: headroom re-runs a single
component on gold upstream inputs, cascaded conditions the live pipeline's
verdicts on correct upstream predictions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .annotation import GoldLabel
from .answers import answers_equal
from .errors import EmptyInput, IdMismatch, MissingGold, MixedSystems
from .kg_store import KgSnapshot, RelationSpec, StructuredQuery, execute_structured_query
from .pipeline import (
    SystemPrediction,
    classify_relation,
    detect_mentions,
    rank_candidates,
    retrieve_candidates,
)

COMPONENTS = ("relation", "entity", "answer")
MODES = ("headroom", "cascaded")

KG_METRICS = ("kg_accuracy", "kg_freshness", "kg_coverage")
METRIC_NAMES = (
    ("e2e_coverage", "e2e_precision")
    + KG_METRICS
    + tuple(
        f"{component}_{mode}_{ratio}"
        for component in COMPONENTS
        for mode in MODES
        for ratio in ("coverage", "precision")
    )
)


def round2(value: float) -> float:
    """Half-up rounding to two decimals, for display and table comparison."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class MetricValue:
    """One auditable ratio; pct is None when the denominator is empty."""

    numerator: float
    denominator: float

    @property
    def pct(self) -> float | None:
        if self.denominator == 0:
            return None
        return 100.0 * self.numerator / self.denominator

    def to_json(self) -> dict:
        return {"numerator": self.numerator, "denominator": self.denominator, "pct": self.pct}

    @staticmethod
    def from_json(obj: dict) -> "MetricValue":
        return MetricValue(numerator=obj["numerator"], denominator=obj["denominator"])


@dataclass(frozen=True)
class JudgedQuery:
    """Per-component verdicts for one query, joined with the gold and KG
    state the bucketizer needs. fact_status 'not_attempted' means the
    prediction never reached fact retrieval."""

    query_id: str
    has_relation_pred: bool
    has_entity_pred: bool
    relation_supported: bool
    relation_correct: bool
    entity_correct: bool
    fact_status: str
    answer_correct: bool | None
    gold_relation: str | None = None
    gold_relation_supported: bool = False
    gold_has_entity: bool = False
    gold_in_kg: bool = True
    time_sensitive: bool = False
    slice_tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.relation_correct and not self.has_relation_pred:
            raise ValueError("relation cannot be correct without a prediction")
        if self.entity_correct and not self.has_entity_pred:
            raise ValueError("entity cannot be correct without a prediction")
        if (self.answer_correct is not None) != (self.fact_status == "answer"):
            raise ValueError("answer verdict exists exactly when a fact was answered")

    @property
    def covered(self) -> bool:
        return self.has_relation_pred and self.has_entity_pred

    @property
    def fully_correct(self) -> bool:
        return self.relation_correct and self.entity_correct and self.answer_correct is True


def judge_query(
    pred: SystemPrediction,
    gold: GoldLabel,
    snapshot: KgSnapshot,
    relations: dict[str, RelationSpec],
) -> JudgedQuery:
    """Score one prediction. Correctness always requires a prediction:
    an abstention is never 'correct', it is simply not covered."""
    if pred.query_id != gold.query_id:
        raise IdMismatch(f"prediction {pred.query_id!r} vs gold {gold.query_id!r}")

    has_relation = pred.predicted_relation is not None
    has_entity = pred.predicted_entity is not None
    relation_correct = has_relation and pred.predicted_relation == gold.relation
    spec = relations.get(pred.predicted_relation) if has_relation else None
    relation_supported = (spec is not None and spec.supported) if has_relation else True
    entity_correct = has_entity and gold.entity_matches(pred.predicted_entity[0])  # type: ignore[index]

    fact_status = pred.fact_result.status if pred.fact_result is not None else "not_attempted"
    answer_correct = (
        answers_equal(pred.answer, gold.answer) if fact_status == "answer" else None
    )

    gold_spec = relations.get(gold.relation) if gold.relation is not None else None
    gold_entity_ids = (
        set(gold.acceptable_entities)
        if gold.acceptable_entities
        else ({gold.entity.entity_id} if gold.entity else set())
    )
    gold_in_kg = not gold_entity_ids or any(e in snapshot.entities for e in gold_entity_ids)
    time_sensitive = bool(gold_spec and gold_spec.time_sensitive) or (
        "time_sensitive" in gold.properties
    )

    return JudgedQuery(
        query_id=pred.query_id,
        has_relation_pred=has_relation,
        has_entity_pred=has_entity,
        relation_supported=relation_supported,
        relation_correct=relation_correct,
        entity_correct=entity_correct,
        fact_status=fact_status,
        answer_correct=answer_correct,
        gold_relation=gold.relation,
        gold_relation_supported=bool(gold_spec and gold_spec.supported),
        gold_has_entity=bool(gold_entity_ids),
        gold_in_kg=gold_in_kg,
        time_sensitive=time_sensitive,
    )


def e2e_metrics(judged: list[JudgedQuery]) -> tuple[MetricValue, MetricValue]:
    """Coverage: queries with both predictions over all queries.
    Precision: both-correct over covered."""
    covered = [j for j in judged if j.covered]
    both_correct = sum(1 for j in covered if j.relation_correct and j.entity_correct)
    return (
        MetricValue(numerator=len(covered), denominator=len(judged)),
        MetricValue(numerator=both_correct, denominator=len(covered)),
    )


def component_metrics_cascaded(
    judged: list[JudgedQuery], component: str
) -> tuple[MetricValue, MetricValue]:
    """Coverage/precision for one component, conditioned on every upstream
    component being correct in the live pipeline."""
    if component == "relation":
        pool = list(judged)
        produced = [j for j in pool if j.has_relation_pred]
        correct = sum(1 for j in produced if j.relation_correct)
    elif component == "entity":
        pool = [j for j in judged if j.relation_correct]
        produced = [j for j in pool if j.has_entity_pred]
        correct = sum(1 for j in produced if j.entity_correct)
    elif component == "answer":
        pool = [j for j in judged if j.relation_correct and j.entity_correct]
        produced = [j for j in pool if j.fact_status == "answer"]
        correct = sum(1 for j in produced if j.answer_correct is True)
    else:
        raise ValueError(f"unknown component {component!r}")
    return (
        MetricValue(numerator=len(produced), denominator=len(pool)),
        MetricValue(numerator=correct, denominator=len(produced)),
    )


def component_metrics_headroom(
    dataset: list,
    golds: dict[str, GoldLabel],
    snapshot: KgSnapshot,
    component: str,
) -> tuple[MetricValue, MetricValue]:
    """Re-run one component with gold upstream inputs: the relation
    classifier sees raw text, entity linking is ranked with the gold
    relation, answer retrieval executes the gold structured query."""
    produced = 0
    correct = 0
    for query in dataset:
        gold = golds.get(query.query_id)
        if gold is None:
            raise MissingGold(f"no gold label for {query.query_id!r}")
        if component == "relation":
            out = classify_relation(query.text, snapshot.relations)
            if out is not None:
                produced += 1
                correct += out == gold.relation
        elif component == "entity":
            top = None
            for mention in detect_mentions(query.text, snapshot):
                top = rank_candidates(
                    query.text, retrieve_candidates(mention, snapshot), snapshot, gold.relation
                )
                if top is not None:
                    break
            if top is not None:
                produced += 1
                correct += gold.entity_matches(top.entity_id)
        elif component == "answer":
            if gold.entity is None or gold.relation is None:
                continue
            result = execute_structured_query(
                snapshot,
                StructuredQuery(subject=gold.entity.entity_id, relation=gold.relation),
            )
            if result.status == "answer":
                produced += 1
                correct += answers_equal(result.primary(), gold.answer)
        else:
            raise ValueError(f"unknown component {component!r}")
    return (
        MetricValue(numerator=produced, denominator=len(dataset)),
        MetricValue(numerator=correct, denominator=produced),
    )


def kg_quality(
    judged: list[JudgedQuery], relations: dict[str, RelationSpec]
) -> tuple[MetricValue, MetricValue, MetricValue]:
    """Graph quality over the correct-upstream subset so query-understanding
    errors never pollute it: fact accuracy, freshness of time-sensitive
    answers, and fact coverage."""
    eligible = [j for j in judged if j.relation_correct and j.entity_correct]
    answered_right = sum(1 for j in eligible if j.answer_correct is True)
    answered_wrong = sum(1 for j in eligible if j.answer_correct is False)
    accuracy = MetricValue(numerator=answered_right, denominator=answered_right + answered_wrong)

    sensitive = [j for j in eligible if j.time_sensitive]
    stale = sum(1 for j in sensitive if j.answer_correct is False)
    freshness = MetricValue(numerator=len(sensitive) - stale, denominator=len(sensitive))

    gaps = sum(1 for j in eligible if j.fact_status == "no_fact")
    coverage = MetricValue(numerator=len(eligible) - gaps, denominator=len(eligible))
    return accuracy, freshness, coverage


@dataclass(frozen=True)
class MetricReport:
    """One (dataset, slice, system) cell of an evaluation run."""

    dataset_id: str
    slice_key: str
    system_id: str
    e2e_coverage: MetricValue
    e2e_precision: MetricValue
    components: dict[str, dict[str, dict[str, MetricValue]]]
    kg_accuracy: MetricValue
    kg_freshness: MetricValue
    kg_coverage: MetricValue
    run_id: str = ""
    computed_at: str = ""

    def flatten(self) -> dict[str, MetricValue]:
        flat = {
            "e2e_coverage": self.e2e_coverage,
            "e2e_precision": self.e2e_precision,
            "kg_accuracy": self.kg_accuracy,
            "kg_freshness": self.kg_freshness,
            "kg_coverage": self.kg_coverage,
        }
        for component in COMPONENTS:
            for mode in MODES:
                cell = self.components[component][mode]
                flat[f"{component}_{mode}_coverage"] = cell["coverage"]
                flat[f"{component}_{mode}_precision"] = cell["precision"]
        return flat

    def to_json(self) -> dict:
        # run_id/computed_at are volatile run metadata and live in the run
        # record, keeping this payload byte-stable for identical inputs.
        return {
            "dataset_id": self.dataset_id,
            "slice_key": self.slice_key,
            "system_id": self.system_id,
            "e2e": {
                "coverage": self.e2e_coverage.to_json(),
                "precision": self.e2e_precision.to_json(),
            },
            "components": {
                component: {
                    mode: {
                        ratio: self.components[component][mode][ratio].to_json()
                        for ratio in ("coverage", "precision")
                    }
                    for mode in MODES
                }
                for component in COMPONENTS
            },
            "kg_quality": {
                "accuracy": self.kg_accuracy.to_json(),
                "freshness": self.kg_freshness.to_json(),
                "coverage": self.kg_coverage.to_json(),
            },
        }

    @staticmethod
    def from_json(obj: dict, run_id: str = "", computed_at: str = "") -> "MetricReport":
        return MetricReport(
            dataset_id=obj["dataset_id"],
            slice_key=obj["slice_key"],
            system_id=obj["system_id"],
            e2e_coverage=MetricValue.from_json(obj["e2e"]["coverage"]),
            e2e_precision=MetricValue.from_json(obj["e2e"]["precision"]),
            components={
                component: {
                    mode: {
                        ratio: MetricValue.from_json(obj["components"][component][mode][ratio])
                        for ratio in ("coverage", "precision")
                    }
                    for mode in MODES
                }
                for component in COMPONENTS
            },
            kg_accuracy=MetricValue.from_json(obj["kg_quality"]["accuracy"]),
            kg_freshness=MetricValue.from_json(obj["kg_quality"]["freshness"]),
            kg_coverage=MetricValue.from_json(obj["kg_quality"]["coverage"]),
            run_id=run_id,
            computed_at=computed_at,
        )


def build_report(
    dataset_id: str,
    slice_key: str,
    system_id: str,
    judged: list[JudgedQuery],
    dataset: list,
    golds: dict[str, GoldLabel],
    snapshot: KgSnapshot,
) -> MetricReport:
    """All metric families for one judged subset."""
    coverage, precision = e2e_metrics(judged)
    components: dict[str, dict[str, dict[str, MetricValue]]] = {}
    for component in COMPONENTS:
        head_cov, head_prec = component_metrics_headroom(dataset, golds, snapshot, component)
        casc_cov, casc_prec = component_metrics_cascaded(judged, component)
        components[component] = {
            "headroom": {"coverage": head_cov, "precision": head_prec},
            "cascaded": {"coverage": casc_cov, "precision": casc_prec},
        }
    accuracy, freshness, kg_cov = kg_quality(judged, snapshot.relations)
    return MetricReport(
        dataset_id=dataset_id,
        slice_key=slice_key,
        system_id=system_id,
        e2e_coverage=coverage,
        e2e_precision=precision,
        components=components,
        kg_accuracy=accuracy,
        kg_freshness=freshness,
        kg_coverage=kg_cov,
    )


def aggregate_macro(reports: list[MetricReport]) -> MetricReport:
    """Unweighted arithmetic mean of every percentage across reports.

    The result's ratios are stored as (sum of fractions, report count) so
    the denominator audit still reproduces the mean exactly.
    """
    if not reports:
        raise EmptyInput("nothing to average")
    systems = {r.system_id for r in reports}
    if len(systems) > 1:
        raise MixedSystems(f"cannot average across systems {sorted(systems)}")

    def mean(values: list[MetricValue]) -> MetricValue:
        pcts = [v.pct for v in values if v.pct is not None]
        if not pcts:
            return MetricValue(numerator=0.0, denominator=0.0)
        return MetricValue(numerator=sum(p / 100.0 for p in pcts), denominator=len(pcts))

    flats = [r.flatten() for r in reports]

    def averaged(name: str) -> MetricValue:
        return mean([flat[name] for flat in flats])

    components = {
        component: {
            mode: {
                "coverage": averaged(f"{component}_{mode}_coverage"),
                "precision": averaged(f"{component}_{mode}_precision"),
            }
            for mode in MODES
        }
        for component in COMPONENTS
    }
    slice_keys = {r.slice_key for r in reports}
    return MetricReport(
        dataset_id="average",
        slice_key=slice_keys.pop() if len(slice_keys) == 1 else "all",
        system_id=reports[0].system_id,
        e2e_coverage=averaged("e2e_coverage"),
        e2e_precision=averaged("e2e_precision"),
        components=components,
        kg_accuracy=averaged("kg_accuracy"),
        kg_freshness=averaged("kg_freshness"),
        kg_coverage=averaged("kg_coverage"),
    )


def top_incorrect_relations(
    judged: list[JudgedQuery], k: int | None = None
) -> list[tuple[str, int]]:
    """Gold relations ranked by how many of their queries failed anywhere."""
    counts: dict[str, int] = {}
    for j in judged:
        if j.fully_correct or j.gold_relation is None:
            continue
        counts[j.gold_relation] = counts.get(j.gold_relation, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked if k is None else ranked[:k]


def write_metrics_csv(reports: list[MetricReport], path: str | Path, run_id: str) -> None:
    """Flat export, one row per (dataset, slice, metric)."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run_id", "dataset_id", "slice", "metric", "value", "numerator", "denominator"])
        for report in reports:
            flat = report.flatten()
            for name in METRIC_NAMES:
                value = flat[name]
                writer.writerow(
                    [
                        run_id,
                        report.dataset_id,
                        report.slice_key,
                        name,
                        "" if value.pct is None else round2(value.pct),
                        value.numerator,
                        value.denominator,
                    ]
                )
