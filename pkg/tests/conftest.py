import os
import socket
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES_DIR = TESTS_DIR / "fixtures"

# The suite must run offline with the gateway replaying recorded replies.
os.environ.setdefault("DYNAVIS_LLM_MODE", "replay")
os.environ.setdefault("DYNAVIS_FIXTURE_DIR", str(FIXTURES_DIR / "llm"))


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    """Any attempt to resolve or dial out fails the test."""

    def blocked(*args, **kwargs):
        raise AssertionError("network access attempted during tests")

    monkeypatch.setattr(socket, "getaddrinfo", blocked)
    monkeypatch.setattr(socket, "create_connection", blocked)
    yield


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def stocks_csv() -> str:
    return (FIXTURES_DIR / "data" / "stocks.csv").read_text(encoding="utf-8")
