"""Snapshot table definitions and the snapshot manifest"""

from enum import Enum

from pydantic import BaseModel
from sqlalchemy import Column, LargeBinary, Text
from sqlmodel import Field, SQLModel


class AliasSourceEnum(str, Enum):
    """Where an alias comes from; declaration order is the candidate ordering rank"""
    title          = "title"
    redirect       = "redirect"
    disambiguation = "disambiguation"


SOURCE_RANK: dict[AliasSourceEnum, int] = {s: i for i, s in enumerate(AliasSourceEnum)}


class Alias(SQLModel, table=True):
    """A normalized surface form that can refer to an entity"""
    __tablename__ = "aliases"
    surface: str = Field(sa_column=Column(Text, primary_key=True))
    entity: str = Field(sa_column=Column(Text, primary_key=True))
    source: AliasSourceEnum = Field(..., nullable=False)


class Anchor(SQLModel, table=True):
    """How often an anchor text links to an entity"""
    __tablename__ = "anchors"
    anchor: str = Field(sa_column=Column(Text, primary_key=True))
    entity: str = Field(sa_column=Column(Text, primary_key=True))
    count: int = Field(..., ge=0, nullable=False)


class Ngram(SQLModel, table=True):
    """Occurrence frequency of a normalized n-gram"""
    __tablename__ = "ngrams"
    ngram: str = Field(sa_column=Column(Text, primary_key=True))
    frequency: int = Field(..., ge=0, nullable=False)


class Embedding(SQLModel, table=True):
    """A word or ENTITY/-prefixed vector, stored as raw float64 bytes"""
    __tablename__ = "embeddings"
    key: str = Field(sa_column=Column(Text, primary_key=True))
    vector: bytes = Field(sa_column=Column(LargeBinary, nullable=False))


class Manifest(BaseModel):
    """Build metadata written next to snapshot.db"""
    counts: dict[str, int]
    checksums: dict[str, str]
    dimension: int
