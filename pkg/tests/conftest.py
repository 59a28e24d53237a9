"""Root test configuration: shared knowledge-base and corpus fixtures"""

from pathlib import Path

import pytest

from qinterp.config import Settings
from qinterp.core.corpus import load_corpus
from qinterp.kb.ingest import load_snapshot


_PROJECT_ROOT = Path(__file__).parent.parent

TINY_KB_DIR = _PROJECT_ROOT / "fixtures" / "tiny_kb"
MINI_CORPUS = _PROJECT_ROOT / "fixtures" / "mini" / "corpus.jsonl"
MINI_QUERIES = _PROJECT_ROOT / "fixtures" / "mini" / "queries.txt"

SAMPLE_QUERY = "new york times square dance"


@pytest.fixture(name="tiny_kb", scope="session")
def tiny_kb_fixture():
    """Snapshot built in memory from the tiny_kb source files; read-only, so shared."""
    return load_snapshot(TINY_KB_DIR)


@pytest.fixture(name="mini_corpus", scope="session")
def mini_corpus_fixture():
    return load_corpus(MINI_CORPUS)


@pytest.fixture(name="settings")
def settings_fixture():
    """Default settings pointing at the tiny_kb fixture, independent of config.yaml and env."""
    return Settings(kb=str(TINY_KB_DIR))
