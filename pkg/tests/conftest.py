from __future__ import annotations

from pathlib import Path

import pytest

from fedldf.federation import load_federation

FIXTURES = Path(__file__).parent / "fixtures"

EX = "http://example.org/"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def fed_base():
    """c1 endpoint + c2 TPF."""
    return load_federation(FIXTURES / "fex4.json")


@pytest.fixture
def fed_f1():
    """Both services as endpoints."""
    return load_federation(FIXTURES / "fex4_f1.json")


@pytest.fixture
def fed_f2():
    """c1 TPF + c2 endpoint."""
    return load_federation(FIXTURES / "fex4_f2.json")


@pytest.fixture
def query_text() -> str:
    return (FIXTURES / "fex4.rq").read_text()
