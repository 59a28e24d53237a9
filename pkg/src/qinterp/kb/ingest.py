"""Snapshot ingestion: parse pre-extracted TSV stores, validate, and persist"""

import logging
import math
import re
from collections.abc import Iterator
from pathlib import Path

import numpy as np
from sqlmodel import Session

from qinterp.core.utils.hashing import sha256_file
from qinterp.core.utils.normalize import normalize
from qinterp.kb.database import DB_FILE, init_db, make_engine
from qinterp.kb.models import SOURCE_RANK, Alias, AliasSourceEnum, Anchor, Embedding, Manifest, Ngram
from qinterp.kb.snapshot import MANIFEST_FILE, KnowledgeSnapshot, open_snapshot


SOURCE_FILES = {
    "aliases": "aliases.tsv",
    "anchors": "anchors.tsv",
    "ngrams": "ngrams.tsv",
    "embeddings": "embeddings.txt",
}
ENTITY_RE = re.compile(r'^\S+$')

logger = logging.getLogger(__name__)


class IngestError(ValueError):
    """A source file line that cannot be ingested; message names file and line."""


def _rows(path: Path, fields: int, skip: int = 0) -> Iterator[tuple[int, list[str]]]:
    """Yield (line_number, fields) for each non-blank tab-separated line after the first skip."""
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if lineno <= skip:
                continue
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != fields:
                raise IngestError(f"{path}:{lineno}: expected {fields} tab-separated fields, got {len(parts)}")
            yield lineno, parts


def _count(path: Path, lineno: int, raw: str) -> int:
    """Parse a non-negative decimal count or raise IngestError."""
    if not raw.strip().isdigit():
        raise IngestError(f"{path}:{lineno}: expected a non-negative integer, got {raw!r}")
    return int(raw)


def _entity(path: Path, lineno: int, raw: str) -> str:
    """Validate an entity id: non-empty and free of whitespace."""
    entity = raw.strip()
    if not ENTITY_RE.match(entity):
        raise IngestError(f"{path}:{lineno}: invalid entity id {raw!r}")
    return entity


def read_aliases(path: Path) -> list[tuple[str, str, AliasSourceEnum]]:
    """Parse aliases.tsv into deduplicated (surface, entity, source) records.

    A pair listed under several sources keeps the best-ranked one, whatever the line order.
    """
    seen: dict[tuple[str, str], AliasSourceEnum] = {}
    for lineno, (surface, entity, source) in _rows(path, 3):
        surface = normalize(surface)
        if not surface:
            raise IngestError(f"{path}:{lineno}: empty surface")
        try:
            kind = AliasSourceEnum(source.strip())
        except ValueError as e:
            raise IngestError(f"{path}:{lineno}: unknown alias source {source!r}") from e
        key = (surface, _entity(path, lineno, entity))
        if key not in seen or SOURCE_RANK[kind] < SOURCE_RANK[seen[key]]:
            seen[key] = kind
    return [(s, e, kind) for (s, e), kind in seen.items()]


def read_anchors(path: Path) -> list[tuple[str, str, int]]:
    """Parse anchors.tsv; identical duplicates collapse, conflicting counts are an error."""
    seen: dict[tuple[str, str], int] = {}
    for lineno, (anchor, entity, raw) in _rows(path, 3):
        key = (normalize(anchor), _entity(path, lineno, entity))
        count = _count(path, lineno, raw)
        if seen.setdefault(key, count) != count:
            raise IngestError(f"{path}:{lineno}: conflicting count for anchor {key[0]!r} -> {key[1]}")
    return [(a, e, c) for (a, e), c in seen.items()]


def read_ngrams(path: Path) -> dict[str, int]:
    """Parse ngrams.tsv into a normalized n-gram -> frequency map."""
    table: dict[str, int] = {}
    for lineno, (ngram, raw) in _rows(path, 2):
        key, freq = normalize(ngram), _count(path, lineno, raw)
        if table.setdefault(key, freq) != freq:
            raise IngestError(f"{path}:{lineno}: conflicting frequency for n-gram {key!r}")
    return table


def read_embeddings(path: Path) -> dict[str, np.ndarray]:
    """Parse embeddings.txt: an 'N D' header, then key<TAB>space-separated floats."""
    with path.open(encoding="utf-8") as f:
        header = f.readline().split()
    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise IngestError(f"{path}:1: expected header 'N D'")
    expected, dim = int(header[0]), int(header[1])

    table: dict[str, np.ndarray] = {}
    for lineno, (key, raw) in _rows(path, 2, skip=1):
        try:
            values = [float(v) for v in raw.split()]
        except ValueError as e:
            raise IngestError(f"{path}:{lineno}: non-numeric vector component") from e
        if len(values) != dim:
            raise IngestError(f"{path}:{lineno}: dimension mismatch, expected {dim}, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise IngestError(f"{path}:{lineno}: NaN or Inf vector component")
        key = key.strip()
        if key in table:
            raise IngestError(f"{path}:{lineno}: duplicate vector key {key!r}")
        table[key] = np.array(values, dtype=np.float64)

    if len(table) != expected:
        raise IngestError(f"{path}: header declares {expected} vectors, found {len(table)}")
    return table


def _sources(aliases_path: Path, anchors_path: Path, ngrams_path: Path, embeddings_path: Path) -> dict[str, Path]:
    return {"aliases": aliases_path, "anchors": anchors_path, "ngrams": ngrams_path, "embeddings": embeddings_path}


def _stamp(snapshot: KnowledgeSnapshot, sources: dict[str, Path]) -> KnowledgeSnapshot:
    """Attach a manifest with store counts and source checksums to snapshot."""
    snapshot.manifest = Manifest(
        counts=snapshot.counts(),
        checksums={name: sha256_file(p) for name, p in sources.items()},
        dimension=snapshot.dimension,
    )
    return snapshot


def build_snapshot(
    aliases_path: Path,
    anchors_path: Path,
    ngrams_path: Path,
    embeddings_path: Path,
    ) -> KnowledgeSnapshot:
    """Parse all four source files into an in-memory snapshot without persisting it."""
    snapshot = KnowledgeSnapshot(
        read_aliases(aliases_path),
        read_anchors(anchors_path),
        read_ngrams(ngrams_path),
        read_embeddings(embeddings_path),
    )
    return _stamp(snapshot, _sources(aliases_path, anchors_path, ngrams_path, embeddings_path))


def ingest_snapshot(
    aliases_path: Path,
    anchors_path: Path,
    ngrams_path: Path,
    embeddings_path: Path,
    out_path: Path,
    ) -> KnowledgeSnapshot:
    """Parse the source files and persist them as snapshot.db + manifest.json under out_path.

    Any existing snapshot at out_path is replaced. Rows are written in sorted key order
    so two ingestions of the same files produce identical databases.
    """
    aliases = sorted(read_aliases(aliases_path))
    anchors = sorted(read_anchors(anchors_path))
    ngrams = read_ngrams(ngrams_path)
    embeddings = read_embeddings(embeddings_path)

    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / DB_FILE).unlink(missing_ok=True)
    engine = make_engine(out_path)
    init_db(engine)
    with Session(engine) as session:
        session.add_all(Alias(surface=s, entity=e, source=src) for s, e, src in aliases)
        session.add_all(Anchor(anchor=a, entity=e, count=c) for a, e, c in anchors)
        session.add_all(Ngram(ngram=k, frequency=ngrams[k]) for k in sorted(ngrams))
        session.add_all(Embedding(key=k, vector=embeddings[k].tobytes()) for k in sorted(embeddings))
        session.commit()
    engine.dispose()

    sources = _sources(aliases_path, anchors_path, ngrams_path, embeddings_path)
    snapshot = _stamp(KnowledgeSnapshot(aliases, anchors, ngrams, embeddings), sources)
    (out_path / MANIFEST_FILE).write_text(snapshot.manifest.model_dump_json(indent=2))
    logger.info("Ingested snapshot into %s: %s", out_path, snapshot.manifest.counts)
    return snapshot


def load_snapshot(path: Path) -> KnowledgeSnapshot:
    """Open a persisted snapshot, or build one in memory from a directory of source files."""
    if (path / MANIFEST_FILE).exists():
        return open_snapshot(path)
    sources = [path / name for name in SOURCE_FILES.values()]
    if all(p.exists() for p in sources):
        return build_snapshot(*sources)
    raise FileNotFoundError(f"No snapshot or source files found at {path}")
