"""Snapshot database engine and schema initialization"""

from pathlib import Path

from sqlalchemy.engine import Engine
from sqlmodel import SQLModel, create_engine


DB_FILE = "snapshot.db"


def make_engine(path: Path) -> Engine:
    """Create a SQLite engine for the snapshot database inside directory path."""
    return create_engine(f"sqlite:///{path / DB_FILE}")


def init_db(engine: Engine) -> None:
    """Create all snapshot tables on the given engine."""
    SQLModel.metadata.create_all(engine)
