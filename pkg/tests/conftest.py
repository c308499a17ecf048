from __future__ import annotations

from pathlib import Path

import pytest

from chronos.annotation import load_golds
from chronos.datasets import ingest_queries
from chronos.kg_store import load_snapshot

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def kg_small():
    return load_snapshot(FIXTURES / "kg_small")


@pytest.fixture(scope="session")
def kg_small_v2():
    return load_snapshot(FIXTURES / "kg_small_v2")


@pytest.fixture(scope="session")
def demo_queries():
    return ingest_queries(FIXTURES / "queries" / "demo.jsonl", "demo")


@pytest.fixture(scope="session")
def demo_golds():
    return {g.query_id: g for g in load_golds(FIXTURES / "queries" / "demo.gold.jsonl")}
