"""HTTP service over the run ledger and the annotation task store.

Read endpoints serve persisted artifacts with no recomputation, so a fixed
ledger always yields identical responses. The only writes are annotation
task creation and submissions; closed runs are never mutated.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from .annotation import annotation_from_json, gold_from_json
from .datasets import SLICE_KEYS
from .errors import (
    ChronosError,
    CorruptRecord,
    EmptyInput,
    MappingError,
    MissingItems,
    NotFound,
    ParseError,
    StateConflict,
    UnknownMetric,
)
from .kg_store import KgSnapshot, load_snapshot
from .answers import normalize_surface
from .runs import list_runs, trend_series
from .tasks import DEFAULT_QUORUM, TaskQuery, TaskStore, task_to_json

KG_SEARCH_LIMIT = 20

_UNPROCESSABLE = (ParseError, EmptyInput, MissingItems, UnknownMetric, MappingError)


def _public_task_json(task) -> dict:
    """Task payload for clients; the qualification key never leaves the server."""
    payload = task_to_json(task)
    payload["answer_key_size"] = len(payload.pop("answer_key"))
    return payload


def _read_run_file(ledger_dir: Path, run_id: str, name: str) -> dict:
    path = ledger_dir / run_id / name
    if not path.exists():
        raise NotFound(f"no run {run_id!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def _search_snapshot(snapshot: KgSnapshot, query: str) -> list[dict]:
    """Alias lookup: exact normalized matches first, then substring hits."""
    needle = normalize_surface(query)
    if not needle:
        return []
    scored: list[tuple[int, str, str]] = []
    for entity_id, entity in snapshot.entities.items():
        best: tuple[int, str] | None = None
        for alias in entity.aliases:
            normalized = normalize_surface(alias)
            if normalized == needle:
                rank = 0
            elif needle in normalized:
                rank = 1
            else:
                continue
            if best is None or rank < best[0]:
                best = (rank, alias)
        if best is not None:
            scored.append((best[0], entity_id, best[1]))
    scored.sort(key=lambda row: (row[0], row[1]))
    matches = []
    for rank, entity_id, alias in scored[:KG_SEARCH_LIMIT]:
        entity = snapshot.entities[entity_id]
        matches.append(
            {
                "entity_id": entity_id,
                "canonical_name": entity.canonical_name,
                "ontology_type": entity.ontology_type,
                "aliases": list(entity.aliases),
                "matched_alias": alias,
                "exact": rank == 0,
            }
        )
    return matches


def create_app(
    ledger_dir: str | Path,
    snapshot_dir: str | Path | None = None,
    tasks_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    ledger = Path(ledger_dir)
    snapshot = load_snapshot(snapshot_dir) if snapshot_dir else None
    store = TaskStore(tasks_dir) if tasks_dir else None
    app = FastAPI(title="chronos", docs_url=None, redoc_url=None)

    @app.exception_handler(ChronosError)
    async def _domain_error(request: Request, exc: ChronosError) -> JSONResponse:
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, StateConflict):
            status = 409
        elif isinstance(exc, _UNPROCESSABLE):
            status = 422
        elif isinstance(exc, CorruptRecord):
            status = 500
        else:
            status = 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/runs")
    def runs() -> dict:
        return {"runs": list_runs(ledger)}

    @app.get("/runs/{run_id}/metrics")
    def run_metrics(run_id: str, slice: str | None = Query(default=None)) -> dict:
        payload = _read_run_file(ledger, run_id, "report.json")
        reports = payload["reports"]
        if slice is not None:
            reports = [r for r in reports if r["slice_key"] == slice]
        return {
            "run_id": run_id,
            "system_id": payload["system_id"],
            "snapshot_id": payload["snapshot_id"],
            "dataset_ids": payload["dataset_ids"],
            "slice": slice,
            "reports": reports,
        }

    @app.get("/runs/{run_id}/buckets/sankey")
    def run_sankey(run_id: str) -> dict:
        return _read_run_file(ledger, run_id, "sankey.json")

    @app.get("/runs/{run_id}/relations/top")
    def run_top_relations(run_id: str, k: int | None = Query(default=None, ge=1)) -> dict:
        payload = _read_run_file(ledger, run_id, "report.json")
        rows = payload["top_incorrect_relations"]
        if k is not None:
            rows = rows[:k]
        return {
            "run_id": run_id,
            "relations": [{"relation": rel, "count": count} for rel, count in rows],
        }

    @app.get("/trends")
    def trends(metric: str, slice: str = Query(default="all")) -> dict:
        return {
            "metric": metric,
            "slice": slice,
            "points": trend_series(ledger, slice, metric),
        }

    @app.get("/slices")
    def slices() -> dict:
        return {"slices": list(SLICE_KEYS)}

    @app.get("/kg/search")
    def kg_search(q: str = Query(default="")) -> dict:
        if snapshot is None:
            return {"query": q, "matches": []}
        return {"query": q, "matches": _search_snapshot(snapshot, q)}

    def _store() -> TaskStore:
        if store is None:
            raise NotFound("annotation tasks are not enabled on this server")
        return store

    @app.get("/annotation/tasks")
    def tasks() -> dict:
        rows = []
        for task in _store().list_tasks():
            rows.append(
                {
                    "task_id": task.task_id,
                    "kind": task.kind,
                    "status": task.status,
                    "quorum": task.quorum,
                    "query_count": len(task.queries),
                    "coverage": task.coverage(),
                }
            )
        return {"tasks": rows}

    @app.get("/annotation/tasks/{task_id}")
    def task_detail(task_id: str) -> dict:
        return _public_task_json(_store().get_task(task_id))

    @app.post("/annotation/tasks", status_code=201)
    def task_create(body: dict = Body(...)) -> dict:
        queries = [
            TaskQuery(q["query_id"], q["text"]) for q in body.get("queries", [])
        ]
        answer_key = tuple(
            gold_from_json(row, "answer_key") for row in body.get("answer_key", [])
        )
        task = _store().create_task(
            kind=body.get("kind", "fresh"),
            queries=queries,
            quorum=int(body.get("quorum", DEFAULT_QUORUM)),
            assigned_annotators=tuple(body.get("assigned_annotators", ())),
            answer_key=answer_key,
            task_id=body.get("task_id"),
        )
        return _public_task_json(task)

    @app.post("/annotation/tasks/{task_id}/submissions")
    def task_submit(task_id: str, body: dict = Body(...)) -> dict:
        rows = body.get("records")
        if not isinstance(rows, list) or not rows:
            raise ParseError("submission body needs a non-empty records list")
        records = [
            annotation_from_json(row, f"records[{index}]") for index, row in enumerate(rows)
        ]
        task = _store().submit(task_id, records)
        return _public_task_json(task)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def index() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    return app
