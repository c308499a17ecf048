"""Replay adapter for evaluating an external KGQA service.

Each query becomes one POST /v1/answer; responses are mapped into
SystemPrediction and cached on disk, keyed by (system_id, query_id, query
text hash), so a re-run over unchanged inputs is byte-identical and makes
zero network calls. Request failures are isolated per query: the batch
always completes, with errors recorded next to the predictions.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .answers import answer_from_json
from .datasets import QueryRecord
from .errors import MappingError, ParseError, TransportError
from .kg_store import FactResult, StructuredQuery
from .pipeline import MentionSpan, SystemPrediction


@dataclass(frozen=True)
class ReplayConfig:
    base_url: str
    system_id: str
    cache_dir: str | Path
    max_in_flight: int = 8
    retry_max: int = 3
    timeout: float = 10.0


@dataclass
class ReplayOutcome:
    predictions: list[SystemPrediction]
    errors: dict[str, str] = field(default_factory=dict)
    network_calls: int = 0
    cache_hits: int = 0


def cache_key(system_id: str, query: QueryRecord) -> str:
    text_hash = hashlib.sha256(query.text.encode("utf-8")).hexdigest()
    raw = f"{system_id}\n{query.query_id}\n{text_hash}".encode("utf-8")
    return hashlib.sha256(raw).hexdigest()


def map_response(row: dict, query: QueryRecord, system_id: str, produced_at: str) -> SystemPrediction:
    """Wire payload -> SystemPrediction, enforcing the prediction invariants.

    fact_status is mandatory. An entity without a span gets the whole-query
    span. A status that implies retrieval ran is only kept when both the
    relation and entity are present; an answer without them is invalid.
    """
    if not isinstance(row, dict):
        raise MappingError(f"{query.query_id}: response is not an object")
    status = row.get("fact_status")
    if status not in ("answer", "no_fact", "missing_entity", "execution_failure"):
        raise MappingError(f"{query.query_id}: bad fact_status {status!r}")

    relation = row.get("relation")
    entity = None
    if row.get("entity_id") is not None:
        span_raw = row.get("span")
        if span_raw is None:
            span = MentionSpan(start=0, end=len(query.text), surface=query.text)
        else:
            try:
                start, end = int(span_raw["start"]), int(span_raw["end"])
                if not (0 <= start < end <= len(query.text)):
                    raise ValueError
                span = MentionSpan(start=start, end=end, surface=query.text[start:end])
            except (TypeError, KeyError, ValueError) as exc:
                raise MappingError(f"{query.query_id}: bad span {span_raw!r}") from exc
        entity = (str(row["entity_id"]), span)

    try:
        answer = answer_from_json(row.get("answer"), query.query_id)
    except ParseError as exc:
        raise MappingError(str(exc)) from exc

    structured = None
    fact_result = None
    if relation is not None and entity is not None:
        structured = StructuredQuery(subject=entity[0], relation=str(relation))
        if status == "answer":
            if answer is None:
                raise MappingError(f"{query.query_id}: answer status without an answer value")
            fact_result = FactResult(status="answer", answers=(answer,))
        else:
            fact_result = FactResult(status=status)
    elif status == "answer":
        raise MappingError(
            f"{query.query_id}: answer status without relation and entity predictions"
        )

    return SystemPrediction(
        query_id=query.query_id,
        system_id=system_id,
        produced_at=produced_at,
        predicted_relation=str(relation) if relation is not None else None,
        predicted_entity=entity,
        structured_query=structured,
        fact_result=fact_result,
        answer=answer if fact_result is not None and fact_result.status == "answer" else None,
    )


class _Counter:
    def __init__(self) -> None:
        self.value = 0
        self._lock = threading.Lock()

    def bump(self) -> None:
        with self._lock:
            self.value += 1


def _fetch(
    client: httpx.Client, query: QueryRecord, config: ReplayConfig, calls: _Counter
) -> dict:
    last_error = "no attempt made"
    for _ in range(max(1, config.retry_max)):
        try:
            calls.bump()
            response = client.post(
                "/v1/answer",
                json={"query_id": query.query_id, "text": query.text},
                timeout=config.timeout,
            )
        except httpx.HTTPError as exc:
            last_error = f"transport failure: {exc}"
            continue
        if response.status_code >= 500:
            last_error = f"server returned {response.status_code}"
            continue
        if response.status_code != 200:
            raise TransportError(f"{query.query_id}: server returned {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise MappingError(f"{query.query_id}: response body is not json") from exc
    raise TransportError(f"{query.query_id}: {last_error} after {config.retry_max} attempts")


def replay_external(queries: list[QueryRecord], config: ReplayConfig) -> ReplayOutcome:
    """Collect predictions for every query, cache-first.

    Network fetches run on a bounded pool; cache files are written only by
    this thread, atomically, and only for successful fetches.
    """
    cache_dir = Path(config.cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    outcome = ReplayOutcome(predictions=[])
    calls = _Counter()

    cached: dict[str, dict] = {}
    to_fetch: list[QueryRecord] = []
    for query in queries:
        path = cache_dir / f"{cache_key(config.system_id, query)}.json"
        if path.exists():
            cached[query.query_id] = json.loads(path.read_text(encoding="utf-8"))
            outcome.cache_hits += 1
        else:
            to_fetch.append(query)

    fetched: dict[str, tuple[dict, str]] = {}
    if to_fetch:
        with httpx.Client(base_url=config.base_url) as client:
            with ThreadPoolExecutor(max_workers=max(1, config.max_in_flight)) as pool:
                futures = {
                    query.query_id: pool.submit(_fetch, client, query, config, calls)
                    for query in to_fetch
                }
            for query in to_fetch:
                try:
                    payload = futures[query.query_id].result()
                except (TransportError, MappingError) as exc:
                    outcome.errors[query.query_id] = str(exc)
                    continue
                fetched[query.query_id] = (
                    payload,
                    datetime.now(timezone.utc).isoformat(timespec="seconds"),
                )

    for query in queries:
        if query.query_id in cached:
            entry = cached[query.query_id]
            payload, produced_at = entry["response"], entry["produced_at"]
        elif query.query_id in fetched:
            payload, produced_at = fetched[query.query_id]
        else:
            continue
        try:
            prediction = map_response(payload, query, config.system_id, produced_at)
        except MappingError as exc:
            outcome.errors[query.query_id] = str(exc)
            continue
        outcome.predictions.append(prediction)
        if query.query_id in fetched:
            path = cache_dir / f"{cache_key(config.system_id, query)}.json"
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(
                    {"response": payload, "produced_at": produced_at},
                    ensure_ascii=False,
                    sort_keys=True,
                ),
                encoding="utf-8",
            )
            os.replace(tmp, path)

    outcome.network_calls = calls.value
    return outcome
