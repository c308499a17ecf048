"""Evaluation runs end-to-end: configuration, orchestration, and the
append-only run ledger.

A run judges every query of every configured dataset, computes per-slice
metric reports plus a macro average row, bucketizes failures, and persists
the result as one directory under the ledger. Identical inputs always
produce byte-identical report artifacts; only the run id and timestamps
differ, and those live outside the deterministic files.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from .annotation import DEFAULT_ALPHA_THRESHOLD, DEFAULT_QUALIFICATION_THRESHOLD, load_golds
from .buckets import (
    BucketAssignment,
    BucketSummary,
    assign_bucket,
    load_buckets,
    sankey_payload,
    save_buckets,
    summarize_buckets,
)
from .datasets import SLICE_KEYS, QueryRecord, build_slices, ingest_queries
from .errors import (
    CorruptRecord,
    LedgerWriteError,
    MissingGold,
    MissingPredictions,
    NotFound,
    ParseError,
    UnknownMetric,
)
from .kg_store import KgSnapshot, load_snapshot
from .metrics import (
    METRIC_NAMES,
    MetricReport,
    aggregate_macro,
    build_report,
    judge_query,
    top_incorrect_relations,
)
from .pipeline import REFERENCE_SYSTEM_ID, SystemPrediction, run_reference_pipeline
from .replay import ReplayConfig, replay_external

LEDGER_ENV_VAR = "CHRONOS_LEDGER"
DEFAULT_LEDGER = "ledger"

RUN_META_FILE = "run.json"
DIGEST_FILE = "digest"
ARTIFACT_FILES = ("report.json", "buckets.jsonl", "sankey.json", "config.toml", RUN_META_FILE)


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[str, ...]
    snapshot: str
    system: str
    seed: int
    slices: tuple[str, ...]
    alpha_threshold: float
    qualification_threshold: float
    base_dir: Path
    ledger: str | None = None
    system_id: str = "external"
    replay_cache: str | None = None
    max_in_flight: int = 8
    retry_max: int = 3

    def resolve(self, path: str) -> Path:
        return (self.base_dir / path).resolve()

    @property
    def uses_reference(self) -> bool:
        return self.system == "reference"


@dataclass(frozen=True)
class EvaluationRun:
    run_id: str
    system_id: str
    dataset_ids: tuple[str, ...]
    snapshot_id: str
    created_at: str
    config_digest: str
    reports: tuple[MetricReport, ...]
    bucket_summary: BucketSummary
    top_incorrect: tuple[tuple[str, int], ...]


def load_run_config(path: str | Path) -> RunConfig:
    source = Path(path)
    try:
        with source.open("rb") as handle:
            raw = tomllib.load(handle)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ParseError(f"cannot read run config {source}: {exc}") from exc

    datasets = raw.get("datasets")
    if not datasets or not isinstance(datasets, list):
        raise ParseError("run config needs a non-empty datasets list")
    snapshot = raw.get("snapshot")
    if not snapshot:
        raise ParseError("run config needs a snapshot path")
    system = raw.get("system", "reference")
    slices = tuple(raw.get("slices") or SLICE_KEYS)
    unknown = set(slices) - set(SLICE_KEYS)
    if unknown:
        raise ParseError(f"unknown slices {sorted(unknown)}")

    return RunConfig(
        datasets=tuple(str(d) for d in datasets),
        snapshot=str(snapshot),
        system=str(system),
        seed=int(raw.get("seed", 0)),
        slices=slices,
        alpha_threshold=float(raw.get("alpha_threshold", DEFAULT_ALPHA_THRESHOLD)),
        qualification_threshold=float(
            raw.get("qualification_threshold", DEFAULT_QUALIFICATION_THRESHOLD)
        ),
        base_dir=source.resolve().parent,
        ledger=raw.get("ledger"),
        system_id=str(raw.get("system_id", "reference" if system == "reference" else "external")),
        replay_cache=raw.get("replay_cache"),
        max_in_flight=int(raw.get("max_in_flight", 8)),
        retry_max=int(raw.get("retry_max", 3)),
    )


def resolve_ledger(explicit: str | None = None, config: RunConfig | None = None) -> Path:
    """Ledger location precedence: explicit flag, environment, config, default."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(LEDGER_ENV_VAR)
    if env:
        return Path(env)
    if config is not None and config.ledger:
        return config.resolve(config.ledger)
    return Path(DEFAULT_LEDGER)


def _gold_path_for(queries_path: Path) -> Path:
    return queries_path.with_name(queries_path.stem + ".gold.jsonl")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def config_digest(config: RunConfig) -> str:
    """Hash of the logical config plus every input file's content."""
    files: dict[str, str] = {}
    for dataset in config.datasets:
        queries_path = config.resolve(dataset)
        files[dataset] = _sha256_file(queries_path)
        gold_path = _gold_path_for(queries_path)
        if gold_path.exists():
            files[f"{dataset}:gold"] = _sha256_file(gold_path)
    snapshot_dir = config.resolve(config.snapshot)
    for name in ("entities.jsonl", "relations.jsonl", "facts.jsonl", "meta.json"):
        bundle_file = snapshot_dir / name
        if bundle_file.exists():
            files[f"{config.snapshot}/{name}"] = _sha256_file(bundle_file)
    payload = {
        "datasets": list(config.datasets),
        "snapshot": config.snapshot,
        "system": config.system,
        "system_id": config.system_id,
        "seed": config.seed,
        "slices": list(config.slices),
        "alpha_threshold": config.alpha_threshold,
        "qualification_threshold": config.qualification_threshold,
        "files": files,
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _collect_predictions(
    config: RunConfig,
    queries: list[QueryRecord],
    snapshot: KgSnapshot,
    ledger_dir: Path,
) -> dict[str, SystemPrediction]:
    if config.uses_reference:
        return {q.query_id: run_reference_pipeline(q, snapshot) for q in queries}
    cache_dir = (
        config.resolve(config.replay_cache)
        if config.replay_cache
        else ledger_dir / ".replay-cache"
    )
    outcome = replay_external(
        queries,
        ReplayConfig(
            base_url=config.system,
            system_id=config.system_id,
            cache_dir=cache_dir,
            max_in_flight=config.max_in_flight,
            retry_max=config.retry_max,
        ),
    )
    predictions = {p.query_id: p for p in outcome.predictions}
    missing = [q.query_id for q in queries if q.query_id not in predictions]
    if missing:
        reasons = "; ".join(f"{qid}: {outcome.errors.get(qid, 'no response')}" for qid in missing[:3])
        raise MissingPredictions(f"{len(missing)} queries lack predictions ({reasons})")
    return predictions


def _next_run_id(ledger_dir: Path, created_at: datetime, digest: str) -> str:
    stamp = created_at.strftime("%Y%m%dT%H%M%SZ")
    base = f"{stamp}-{digest[:8]}"
    run_id = base
    seq = 1
    while (ledger_dir / run_id).exists():
        seq += 1
        run_id = f"{base}-{seq}"
    return run_id


def run_evaluation(config: RunConfig, ledger_dir: str | Path | None = None) -> EvaluationRun:
    """Judge, measure, bucketize, persist. Returns the persisted run."""
    ledger = resolve_ledger(str(ledger_dir) if ledger_dir is not None else None, config)
    snapshot = load_snapshot(config.resolve(config.snapshot))
    system_id = REFERENCE_SYSTEM_ID if config.uses_reference else config.system_id

    reports: list[MetricReport] = []
    assignments: list[BucketAssignment] = []
    all_judged = []
    dataset_ids: list[str] = []
    for dataset_path in config.datasets:
        queries_path = config.resolve(dataset_path)
        dataset_id = queries_path.name.removesuffix(".jsonl")
        dataset_ids.append(dataset_id)
        queries = ingest_queries(queries_path, dataset_id)
        gold_path = _gold_path_for(queries_path)
        if not gold_path.exists():
            raise MissingGold(f"no gold file {gold_path}")
        golds = {g.query_id: g for g in load_golds(gold_path)}
        unlabeled = [q.query_id for q in queries if q.query_id not in golds]
        if unlabeled:
            raise MissingGold(f"{dataset_id}: no gold labels for {unlabeled[:5]}")

        predictions = _collect_predictions(config, queries, snapshot, ledger)
        judged = {
            q.query_id: judge_query(
                predictions[q.query_id], golds[q.query_id], snapshot, snapshot.relations
            )
            for q in queries
        }
        all_judged.extend(judged.values())
        assignments.extend(assign_bucket(judged[q.query_id]) for q in queries)

        slices = {s.slice_key: s for s in build_slices(queries, golds, snapshot.relations, snapshot)}
        for slice_key in config.slices:
            member_ids = set(slices[slice_key].query_ids)
            reports.append(
                build_report(
                    dataset_id=dataset_id,
                    slice_key=slice_key,
                    system_id=system_id,
                    judged=[judged[qid] for qid in (q.query_id for q in queries) if qid in member_ids],
                    dataset=[q for q in queries if q.query_id in member_ids],
                    golds=golds,
                    snapshot=snapshot,
                )
            )

    for slice_key in config.slices:
        per_dataset = [r for r in reports if r.slice_key == slice_key and r.dataset_id != "average"]
        reports.append(aggregate_macro(per_dataset))

    summary = summarize_buckets(assignments)
    top = tuple(top_incorrect_relations(all_judged))

    digest = config_digest(config)
    created = datetime.now(timezone.utc)
    ledger.mkdir(parents=True, exist_ok=True)
    run_id = _next_run_id(ledger, created, digest)
    # Microsecond precision keeps list/trend ordering stable when several
    # runs land within the same wall-clock second.
    created_at = created.isoformat(timespec="microseconds")

    run = EvaluationRun(
        run_id=run_id,
        system_id=system_id,
        dataset_ids=tuple(dataset_ids),
        snapshot_id=snapshot.snapshot_id,
        created_at=created_at,
        config_digest=digest,
        reports=tuple(
            replace(report, run_id=run_id, computed_at=created_at) for report in reports
        ),
        bucket_summary=summary,
        top_incorrect=top,
    )
    persist_run(run, assignments, ledger, _render_config_toml(config))
    return run


def _render_config_toml(config: RunConfig) -> str:
    """The effective configuration, rendered for the run directory."""

    def fmt(value: object) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, (int, float)):
            return repr(value)
        return json.dumps(str(value))

    lines = [
        f"datasets = [{', '.join(fmt(d) for d in config.datasets)}]",
        f"snapshot = {fmt(config.snapshot)}",
        f"system = {fmt(config.system)}",
        f"system_id = {fmt(config.system_id)}",
        f"seed = {config.seed}",
        f"slices = [{', '.join(fmt(s) for s in config.slices)}]",
        f"alpha_threshold = {config.alpha_threshold}",
        f"qualification_threshold = {config.qualification_threshold}",
    ]
    return "\n".join(lines) + "\n"


def _report_payload(run: EvaluationRun) -> dict:
    return {
        "system_id": run.system_id,
        "snapshot_id": run.snapshot_id,
        "dataset_ids": list(run.dataset_ids),
        "reports": [report.to_json() for report in run.reports],
        "top_incorrect_relations": [[relation, count] for relation, count in run.top_incorrect],
    }


def persist_run(
    run: EvaluationRun,
    assignments: list[BucketAssignment],
    ledger_dir: str | Path,
    config_toml: str,
) -> Path:
    run_dir = Path(ledger_dir) / run.run_id
    try:
        run_dir.mkdir(parents=True, exist_ok=False)
    except OSError as exc:
        raise LedgerWriteError(f"cannot create run directory {run_dir}: {exc}") from exc

    try:
        (run_dir / "report.json").write_text(
            json.dumps(_report_payload(run), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        save_buckets(assignments, run_dir / "buckets.jsonl")
        (run_dir / "sankey.json").write_text(
            json.dumps(sankey_payload(run.bucket_summary), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (run_dir / "config.toml").write_text(config_toml, encoding="utf-8")
        (run_dir / RUN_META_FILE).write_text(
            json.dumps(
                {
                    "run_id": run.run_id,
                    "system_id": run.system_id,
                    "dataset_ids": list(run.dataset_ids),
                    "snapshot_id": run.snapshot_id,
                    "created_at": run.created_at,
                    "config_digest": run.config_digest,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        digest_payload = {
            "config_digest": run.config_digest,
            "artifacts": {name: _sha256_file(run_dir / name) for name in ARTIFACT_FILES},
        }
        (run_dir / DIGEST_FILE).write_text(
            json.dumps(digest_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise LedgerWriteError(f"cannot write run artifacts under {run_dir}: {exc}") from exc
    return run_dir


def _verify_run_dir(run_dir: Path) -> dict:
    digest_path = run_dir / DIGEST_FILE
    if not digest_path.exists():
        raise CorruptRecord(f"{run_dir.name}: missing digest file")
    digest_payload = json.loads(digest_path.read_text(encoding="utf-8"))
    for name, expected in digest_payload.get("artifacts", {}).items():
        artifact = run_dir / name
        if not artifact.exists():
            raise CorruptRecord(f"{run_dir.name}: missing artifact {name}")
        if _sha256_file(artifact) != expected:
            raise CorruptRecord(f"{run_dir.name}: digest mismatch on {name}")
    return digest_payload


def load_run(ledger_dir: str | Path, run_id: str) -> EvaluationRun:
    """Reload a persisted run after verifying artifact digests."""
    run_dir = Path(ledger_dir) / run_id
    if not run_dir.is_dir():
        raise NotFound(f"no run {run_id!r} in {ledger_dir}")
    _verify_run_dir(run_dir)

    meta = json.loads((run_dir / RUN_META_FILE).read_text(encoding="utf-8"))
    payload = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
    assignments = load_buckets(run_dir / "buckets.jsonl")
    return EvaluationRun(
        run_id=meta["run_id"],
        system_id=meta["system_id"],
        dataset_ids=tuple(meta["dataset_ids"]),
        snapshot_id=meta["snapshot_id"],
        created_at=meta["created_at"],
        config_digest=meta["config_digest"],
        reports=tuple(
            MetricReport.from_json(obj, meta["run_id"], meta["created_at"])
            for obj in payload["reports"]
        ),
        bucket_summary=summarize_buckets(assignments),
        top_incorrect=tuple((rel, count) for rel, count in payload["top_incorrect_relations"]),
    )


def list_runs(ledger_dir: str | Path) -> list[dict]:
    """Run metadata rows, oldest first."""
    ledger = Path(ledger_dir)
    if not ledger.is_dir():
        return []
    rows: list[dict] = []
    for entry in ledger.iterdir():
        meta_path = entry / RUN_META_FILE
        if entry.is_dir() and meta_path.exists():
            rows.append(json.loads(meta_path.read_text(encoding="utf-8")))
    rows.sort(key=lambda row: (row.get("created_at", ""), row.get("run_id", "")))
    return rows


def trend_series(ledger_dir: str | Path, slice_key: str, metric: str) -> list[dict]:
    """Chronological (run, value) points for one metric on one slice,
    taken from each run's macro-average row."""
    if metric not in METRIC_NAMES:
        raise UnknownMetric(f"unknown metric {metric!r}")
    points: list[dict] = []
    for meta in list_runs(ledger_dir):
        run_dir = Path(ledger_dir) / meta["run_id"]
        payload = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
        for obj in payload["reports"]:
            if obj["dataset_id"] != "average" or obj["slice_key"] != slice_key:
                continue
            value = MetricReport.from_json(obj).flatten()[metric].pct
            if value is not None:
                points.append(
                    {"run_id": meta["run_id"], "created_at": meta["created_at"], "value": value}
                )
            break
    return points
