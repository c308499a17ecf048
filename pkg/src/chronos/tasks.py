"""Annotation task lifecycle.

A task bundles queries that need labels. Annotators submit one record per
query; once every query has reached the quorum the task aggregates golds,
computes an agreement report, and closes itself. Qualification tasks grade
each submission against a hidden answer key instead.

Each task is one JSON file under the task directory, written atomically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .annotation import (
    DEFAULT_ALPHA_THRESHOLD,
    DEFAULT_QUALIFICATION_THRESHOLD,
    AgreementReport,
    AnnotationRecord,
    GoldLabel,
    QualificationResult,
    aggregate_gold,
    agreement_report,
    annotation_from_json,
    annotation_to_json,
    gold_from_json,
    gold_to_json,
    score_qualification,
    validate_span,
)
from .errors import EmptyInput, NotFound, ParseError, StateConflict

TASK_KINDS = ("fresh", "qualification", "refresh")
TASK_STATUSES = ("open", "closed")

# Independent labels per query before aggregation may run.
DEFAULT_QUORUM = 3


@dataclass(frozen=True)
class TaskQuery:
    query_id: str
    text: str


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    kind: str
    status: str
    quorum: int
    alpha_threshold: float
    qualification_threshold: float
    queries: tuple[TaskQuery, ...]
    assigned_annotators: tuple[str, ...] = ()
    submissions: tuple[AnnotationRecord, ...] = ()
    golds: tuple[GoldLabel, ...] = ()
    agreement: AgreementReport | None = None
    answer_key: tuple[GoldLabel, ...] = ()
    results: tuple[QualificationResult, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.status not in TASK_STATUSES:
            raise ValueError(f"unknown task status {self.status!r}")
        if self.quorum < 1:
            raise ValueError("quorum must be at least 1")
        if not self.queries:
            raise ValueError("task needs at least one query")
        if self.kind == "qualification" and not self.answer_key:
            raise ValueError("qualification task needs an answer key")

    def coverage(self) -> dict[str, int]:
        """Distinct annotators that labeled each query so far."""
        seen: dict[str, set[str]] = {q.query_id: set() for q in self.queries}
        for record in self.submissions:
            seen[record.query_id].add(record.annotator_id)
        return {qid: len(names) for qid, names in seen.items()}

    def quorum_met(self) -> bool:
        return all(count >= self.quorum for count in self.coverage().values())


def _agreement_to_json(report: AgreementReport) -> dict:
    return {
        "task_id": report.task_id,
        "field": report.field,
        "alpha": report.alpha,
        "kappa_pairs": [[a, b, value] for (a, b), value in sorted(report.kappa_pairs.items())],
        "flagged": report.flagged,
        "drop_one_alphas": dict(sorted(report.drop_one_alphas.items())),
        "suspect_annotator": report.suspect_annotator,
    }


def _agreement_from_json(obj: dict) -> AgreementReport:
    return AgreementReport(
        task_id=obj["task_id"],
        field=obj["field"],
        alpha=obj["alpha"],
        kappa_pairs={(a, b): value for a, b, value in obj["kappa_pairs"]},
        flagged=obj["flagged"],
        drop_one_alphas=dict(obj["drop_one_alphas"]),
        suspect_annotator=obj["suspect_annotator"],
    )


def task_to_json(task: AnnotationTask) -> dict:
    return {
        "task_id": task.task_id,
        "kind": task.kind,
        "status": task.status,
        "quorum": task.quorum,
        "alpha_threshold": task.alpha_threshold,
        "qualification_threshold": task.qualification_threshold,
        "queries": [{"query_id": q.query_id, "text": q.text} for q in task.queries],
        "assigned_annotators": list(task.assigned_annotators),
        "submissions": [annotation_to_json(r) for r in task.submissions],
        "golds": [gold_to_json(g) for g in task.golds],
        "agreement": _agreement_to_json(task.agreement) if task.agreement else None,
        "answer_key": [gold_to_json(g) for g in task.answer_key],
        "results": [
            {
                "annotator_id": r.annotator_id,
                "score": r.score,
                "passed": r.passed,
                "items": [[query_id, ok] for query_id, ok in r.item_verdicts],
            }
            for r in task.results
        ],
    }


def task_from_json(obj: dict, where: str = "task") -> AnnotationTask:
    try:
        return AnnotationTask(
            task_id=obj["task_id"],
            kind=obj["kind"],
            status=obj["status"],
            quorum=obj["quorum"],
            alpha_threshold=obj["alpha_threshold"],
            qualification_threshold=obj["qualification_threshold"],
            queries=tuple(TaskQuery(q["query_id"], q["text"]) for q in obj["queries"]),
            assigned_annotators=tuple(obj.get("assigned_annotators", ())),
            submissions=tuple(
                annotation_from_json(r, where) for r in obj.get("submissions", ())
            ),
            golds=tuple(gold_from_json(g, where) for g in obj.get("golds", ())),
            agreement=_agreement_from_json(obj["agreement"]) if obj.get("agreement") else None,
            answer_key=tuple(gold_from_json(g, where) for g in obj.get("answer_key", ())),
            results=tuple(
                QualificationResult(
                    r["annotator_id"],
                    r["score"],
                    r["passed"],
                    tuple((row[0], bool(row[1])) for row in r.get("items", ())),
                )
                for r in obj.get("results", ())
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bad task record ({exc})") from exc


class TaskStore:
    """Directory of task files keyed by task id."""

    def __init__(self, tasks_dir: str | Path) -> None:
        self.tasks_dir = Path(tasks_dir)
        self.tasks_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, task_id: str) -> Path:
        return self.tasks_dir / f"{task_id}.json"

    def _save(self, task: AnnotationTask) -> None:
        target = self._path(task.task_id)
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(task_to_json(task), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        os.replace(tmp, target)

    def _next_id(self) -> str:
        existing = {p.stem for p in self.tasks_dir.glob("task-*.json")}
        seq = len(existing) + 1
        while f"task-{seq:04d}" in existing:
            seq += 1
        return f"task-{seq:04d}"

    def create_task(
        self,
        kind: str,
        queries: list[TaskQuery],
        quorum: int = DEFAULT_QUORUM,
        assigned_annotators: tuple[str, ...] = (),
        answer_key: tuple[GoldLabel, ...] = (),
        alpha_threshold: float = DEFAULT_ALPHA_THRESHOLD,
        qualification_threshold: float = DEFAULT_QUALIFICATION_THRESHOLD,
        task_id: str | None = None,
    ) -> AnnotationTask:
        task = AnnotationTask(
            task_id=task_id or self._next_id(),
            kind=kind,
            status="open",
            quorum=quorum,
            alpha_threshold=alpha_threshold,
            qualification_threshold=qualification_threshold,
            queries=tuple(queries),
            assigned_annotators=assigned_annotators,
            answer_key=answer_key,
        )
        if self._path(task.task_id).exists():
            raise StateConflict(f"task {task.task_id} already exists")
        self._save(task)
        return task

    def get_task(self, task_id: str) -> AnnotationTask:
        path = self._path(task_id)
        if not path.exists():
            raise NotFound(f"no task {task_id!r}")
        return task_from_json(json.loads(path.read_text(encoding="utf-8")), path.name)

    def list_tasks(self) -> list[AnnotationTask]:
        tasks = [
            task_from_json(json.loads(p.read_text(encoding="utf-8")), p.name)
            for p in sorted(self.tasks_dir.glob("*.json"))
        ]
        return tasks

    def _validate_submission(
        self, task: AnnotationTask, records: list[AnnotationRecord]
    ) -> str:
        if not records:
            raise EmptyInput("submission carries no records")
        annotators = {r.annotator_id for r in records}
        if len(annotators) > 1:
            raise ValueError(f"one submission, one annotator; got {sorted(annotators)}")
        texts = {q.query_id: q.text for q in task.queries}
        seen: set[str] = set()
        for record in records:
            if record.query_id not in texts:
                raise ValueError(f"query {record.query_id!r} is not part of task {task.task_id}")
            if record.query_id in seen:
                raise ValueError(f"duplicate record for query {record.query_id!r}")
            seen.add(record.query_id)
            if record.entity is not None:
                validate_span(record.entity, texts[record.query_id])
        return next(iter(annotators))

    def submit(self, task_id: str, records: list[AnnotationRecord]) -> AnnotationTask:
        """Accept one annotator's records; aggregate and close on quorum."""
        task = self.get_task(task_id)
        if task.status == "closed":
            raise StateConflict(f"task {task_id} is closed")
        annotator = self._validate_submission(task, records)

        if task.kind == "qualification":
            task = self._submit_qualification(task, annotator, records)
        else:
            done = {(r.annotator_id, r.query_id) for r in task.submissions}
            dup = [r.query_id for r in records if (annotator, r.query_id) in done]
            if dup:
                raise StateConflict(f"{annotator} already labeled {dup[:3]} on {task_id}")
            task = replace(task, submissions=task.submissions + tuple(records))
            if task.quorum_met():
                task = self._close_with_golds(task)
        self._save(task)
        return task

    def _submit_qualification(
        self, task: AnnotationTask, annotator: str, records: list[AnnotationRecord]
    ) -> AnnotationTask:
        previous = {r.annotator_id: r for r in task.results}
        if annotator in previous and previous[annotator].passed:
            raise StateConflict(f"{annotator} already passed qualification {task.task_id}")
        result = score_qualification(
            records, list(task.answer_key), task.qualification_threshold
        )
        # A retake replaces the failed attempt wholesale.
        kept_subs = tuple(r for r in task.submissions if r.annotator_id != annotator)
        kept_results = tuple(r for r in task.results if r.annotator_id != annotator)
        return replace(
            task,
            submissions=kept_subs + tuple(records),
            results=kept_results + (result,),
        )

    def _close_with_golds(self, task: AnnotationTask) -> AnnotationTask:
        by_query: dict[str, list[AnnotationRecord]] = {q.query_id: [] for q in task.queries}
        for record in task.submissions:
            by_query[record.query_id].append(record)
        golds = tuple(aggregate_gold(by_query[q.query_id]) for q in task.queries)
        # A single-grader task has nothing to disagree about; quorum 1 is
        # legal and closes without an agreement report.
        agreement = None
        if len({r.annotator_id for r in task.submissions}) >= 2:
            agreement = agreement_report(
                task.task_id, list(task.submissions), "record", task.alpha_threshold
            )
        return replace(task, status="closed", golds=golds, agreement=agreement)

    def close_task(self, task_id: str) -> AnnotationTask:
        """Force-close; aggregates whatever quorum-complete labels exist."""
        task = self.get_task(task_id)
        if task.status == "closed":
            raise StateConflict(f"task {task_id} is already closed")
        if task.kind != "qualification" and task.quorum_met():
            task = self._close_with_golds(task)
        else:
            task = replace(task, status="closed")
        self._save(task)
        return task
