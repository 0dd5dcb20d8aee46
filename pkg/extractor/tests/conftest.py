from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def mini_vocab_text() -> str:
    return (FIXTURES / "mini_vocab.json").read_text(encoding="utf-8")
