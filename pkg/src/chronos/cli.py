"""Command-line entry point.

Exit statuses: 0 success, 1 domain error (anything deriving from
ChronosError), 2 usage error.
"""

from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

import click

from .annotation import build_refresh_task, load_golds, save_annotations, save_golds
from .datasets import (
    QueryRecord,
    ingest_queries,
    load_ruleset,
    paraphrase,
    carry_gold,
    save_queries,
    substitute_entities,
    weighted_sample,
)
from .errors import ChronosError, NoPeers, NoSpan
from .kg_store import FactRecord, delta_facts, load_snapshot, snapshot_stats
from .answers import answer_to_json
from .metrics import write_metrics_csv
from .runs import (
    load_run,
    load_run_config,
    resolve_ledger,
    run_evaluation,
)
from .simulate import simulate_annotations


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Run config.")
@click.pass_context
def cli(ctx: click.Context, seed: int, config_path: str | None) -> None:
    """Evaluation platform for cascaded question answering over a KG."""
    ctx.obj = {"seed": seed, "config": config_path}


@cli.command()
@click.argument("queries", type=click.Path(exists=True))
@click.option("--dataset-id", default=None, help="Defaults to the file stem.")
@click.option("--out", type=click.Path(), default=None, help="Write a normalized copy.")
def ingest(queries: str, dataset_id: str | None, out: str | None) -> None:
    """Validate a queries.jsonl file."""
    path = Path(queries)
    records = ingest_queries(path, dataset_id or path.name.removesuffix(".jsonl"))
    if out:
        save_queries(records, out)
    click.echo(f"{len(records)} queries ok")


@cli.command()
@click.argument("queries", type=click.Path(exists=True))
@click.argument("n", type=int)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def sample(ctx: click.Context, queries: str, n: int, out: str | None) -> None:
    """Draw a weighted sample of queries."""
    path = Path(queries)
    records = ingest_queries(path, path.name.removesuffix(".jsonl"))
    chosen = weighted_sample(records, n, ctx.obj["seed"])
    if out:
        save_queries(chosen, out)
    for record in chosen:
        click.echo(record.query_id)


@cli.command()
@click.argument("queries", type=click.Path(exists=True))
@click.argument("golds", type=click.Path(exists=True))
@click.option("--snapshot", type=click.Path(exists=True), required=True)
@click.option("--rules", type=click.Path(exists=True), default=None, help="Paraphrase rules.")
@click.option("--substitute", "substitute_k", type=int, default=0, help="Peers per query.")
@click.option("--out-queries", type=click.Path(), required=True)
@click.option("--out-golds", type=click.Path(), required=True)
@click.pass_context
def augment(
    ctx: click.Context,
    queries: str,
    golds: str,
    snapshot: str,
    rules: str | None,
    substitute_k: int,
    out_queries: str,
    out_golds: str,
) -> None:
    """Grow a dataset by entity substitution and rule-based paraphrase."""
    path = Path(queries)
    records = ingest_queries(path, path.name.removesuffix(".jsonl"))
    gold_by_id = {g.query_id: g for g in load_golds(golds)}
    snap = load_snapshot(snapshot)
    ruleset = load_ruleset(rules) if rules else []

    out_records: list[QueryRecord] = list(records)
    out_gold_list = [gold_by_id[r.query_id] for r in records if r.query_id in gold_by_id]
    made = 0
    for record in records:
        gold = gold_by_id.get(record.query_id)
        if gold is None:
            continue
        if substitute_k > 0:
            try:
                for new_query, new_gold in substitute_entities(
                    record, gold, snap, substitute_k, ctx.obj["seed"]
                ):
                    out_records.append(new_query)
                    out_gold_list.append(new_gold)
                    made += 1
            except (NoSpan, NoPeers):
                pass
        for new_query in paraphrase(record, ruleset):
            new_gold = carry_gold(gold, new_query, snap)
            if new_gold is None:
                continue
            out_records.append(new_query)
            out_gold_list.append(new_gold)
            made += 1

    save_queries(out_records, out_queries)
    save_golds(out_gold_list, out_golds)
    click.echo(f"{made} synthetic queries added ({len(out_records)} total)")


@cli.group()
def annotate() -> None:
    """Annotation utilities."""


@annotate.command("simulate")
@click.argument("golds", type=click.Path(exists=True))
@click.option("--snapshot", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def annotate_simulate(ctx: click.Context, golds: str, snapshot: str, out: str) -> None:
    """Produce a deterministic noisy annotator panel from gold labels."""
    gold_list = load_golds(golds)
    snap = load_snapshot(snapshot)
    records = simulate_annotations(gold_list, snap, seed=ctx.obj["seed"])
    save_annotations(records, out)
    click.echo(f"{len(records)} annotations from {len(gold_list)} golds")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--ledger", type=click.Path(), default=None)
@click.pass_context
def evaluate(ctx: click.Context, config_path: str | None, ledger: str | None) -> None:
    """Run the full evaluation described by a run.toml config."""
    chosen = config_path or ctx.obj["config"]
    if not chosen:
        raise click.UsageError("evaluate needs --config")
    config = load_run_config(chosen)
    run = run_evaluation(config, resolve_ledger(ledger, config))
    click.echo(f"run {run.run_id}")
    for report in run.reports:
        if report.dataset_id != "average" or report.slice_key != "all":
            continue
        for name, value in report.flatten().items():
            shown = "n/a" if value.pct is None else f"{value.pct:.2f}"
            click.echo(f"  {name}: {shown}")
    correct = run.bucket_summary.correct_count
    click.echo(f"  buckets: {run.bucket_summary.total - correct} lossy / {run.bucket_summary.total}")


@cli.command()
@click.argument("run_id")
@click.option("--ledger", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(), default=None)
def report(run_id: str, ledger: str | None, fmt: str, out: str | None) -> None:
    """Export a persisted run's metric reports."""
    ledger_dir = resolve_ledger(ledger)
    run = load_run(ledger_dir, run_id)
    if fmt == "csv":
        target = out or f"{run_id}.csv"
        write_metrics_csv(list(run.reports), target, run.run_id)
        click.echo(target)
        return
    text = (Path(ledger_dir) / run_id / "report.json").read_text(encoding="utf-8")
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(out)
    else:
        click.echo(text, nl=False)


def _fact_row(fact: FactRecord) -> dict:
    row: dict = {
        "subject": fact.subject,
        "relation": fact.relation,
        "object": answer_to_json(fact.object),
    }
    if fact.last_verified is not None:
        row["last_verified"] = fact.last_verified.isoformat()
    if fact.time_sensitive is not None:
        row["time_sensitive"] = fact.time_sensitive
    return row


@cli.command("diff-kg")
@click.argument("old", type=click.Path(exists=True))
@click.argument("new", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Write the delta as JSON.")
@click.option("--refresh-golds", type=click.Path(exists=True), default=None)
@click.option("--as-of", default=None, help="Refresh task date, YYYY-MM-DD (default today).")
@click.option("--out-task", type=click.Path(), default=None)
def diff_kg(
    old: str,
    new: str,
    out: str | None,
    refresh_golds: str | None,
    as_of: str | None,
    out_task: str | None,
) -> None:
    """Diff two snapshot bundles; optionally emit a refresh task."""
    old_snap = load_snapshot(old)
    new_snap = load_snapshot(new)
    delta = delta_facts(old_snap, new_snap)
    click.echo(
        f"added={len(delta.added)} removed={len(delta.removed)} changed={len(delta.changed)}"
    )
    if out:
        payload = {
            "added": [_fact_row(f) for f in delta.added],
            "removed": [_fact_row(f) for f in delta.removed],
            "changed": [
                {"old": _fact_row(a), "new": _fact_row(b)} for a, b in delta.changed
            ],
        }
        Path(out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if refresh_golds:
        golds = load_golds(refresh_golds)
        task_date = date.fromisoformat(as_of) if as_of else date.today()
        task = build_refresh_task(delta, golds, new_snap.relations, task_date)
        payload = {
            "as_of": task.as_of.isoformat(),
            "facts": [_fact_row(f) for f in task.facts],
            "query_ids": list(task.query_ids),
        }
        target = Path(out_task or "refresh_task.json")
        target.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        click.echo(f"refresh task: {len(task.facts)} facts -> {target}")


@cli.command("stats")
@click.argument("snapshot", type=click.Path(exists=True))
def stats(snapshot: str) -> None:
    """Print snapshot census counts."""
    snap = load_snapshot(snapshot)
    counts = snapshot_stats(snap)
    click.echo(
        f"entities={counts.entity_count} facts={counts.fact_count} "
        f"relations={counts.relation_count} time_sensitive={counts.time_sensitive_fact_count}"
    )


@cli.command()
@click.option("--ledger", type=click.Path(), default=None)
@click.option("--snapshot", type=click.Path(exists=True), default=None)
@click.option("--tasks-dir", type=click.Path(), default=None)
@click.option("--ui", "ui_dir", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8777, show_default=True)
def serve(
    ledger: str | None,
    snapshot: str | None,
    tasks_dir: str | None,
    ui_dir: str | None,
    host: str,
    port: int,
) -> None:
    """Serve the ledger, annotation tasks, and the workbench UI."""
    import uvicorn

    from .api import create_app

    app = create_app(
        resolve_ledger(ledger), snapshot_dir=snapshot, tasks_dir=tasks_dir, ui_dir=ui_dir
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.UsageError as exc:
        exc.show()
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except ChronosError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
