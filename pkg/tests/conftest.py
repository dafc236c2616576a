from __future__ import annotations

from pathlib import Path

import pytest

from ratlog.corpus import load_corpus, validate_corpus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_records():
    records, issues = validate_corpus(load_corpus(FIXTURES / "golden.jsonl"))
    assert not issues, issues
    return records


@pytest.fixture(scope="session")
def golden_by_id(golden_records):
    return {r.id: r for r in golden_records}


@pytest.fixture(scope="session")
def a5_records():
    records, issues = validate_corpus(load_corpus(FIXTURES / "a5.jsonl"))
    assert not issues, issues
    return {r.id: r for r in records}


@pytest.fixture(scope="session")
def mini_records():
    records, issues = validate_corpus(load_corpus(FIXTURES / "mini.jsonl"))
    assert not issues, issues
    return records


@pytest.fixture()
def candidate_text():
    def read(name: str) -> str:
        return (FIXTURES / "candidates" / name).read_text(encoding="utf-8")

    return read
