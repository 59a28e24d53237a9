"""Immutable in-memory knowledge snapshot: aliases, anchors, n-grams, and embeddings"""

import logging
from collections import defaultdict
from collections.abc import Iterable, Mapping
from pathlib import Path
from types import MappingProxyType

import numpy as np
from sqlmodel import Session, select

from qinterp.kb.database import make_engine
from qinterp.kb.fuzzy import TrigramIndex
from qinterp.kb.models import SOURCE_RANK, Alias, AliasSourceEnum, Anchor, Embedding, Manifest, Ngram


ENTITY_PREFIX = "ENTITY/"
MANIFEST_FILE = "manifest.json"
TITLE_SOURCES = {AliasSourceEnum.title, AliasSourceEnum.redirect}

logger = logging.getLogger(__name__)


class UnknownAnchor(KeyError):
    """Raised when commonness is requested for a mention with no anchor statistics."""


class KnowledgeSnapshot:
    """Read-only lookup structures built once; safe to share across threads."""

    def __init__(
        self,
        aliases: Iterable[tuple[str, str, AliasSourceEnum]],
        anchors: Iterable[tuple[str, str, int]],
        ngrams: Mapping[str, int],
        embeddings: Mapping[str, np.ndarray],
        manifest: Manifest | None = None,
        ):
        by_surface: dict[str, dict[str, AliasSourceEnum]] = defaultdict(dict)
        for surface, entity, source in aliases:
            current = by_surface[surface].get(entity)
            if current is None or SOURCE_RANK[source] < SOURCE_RANK[current]:
                by_surface[surface][entity] = source

        # Entities per surface ordered by source rank, then id.
        self._aliases = MappingProxyType({
            surface: tuple(sorted(ents, key=lambda e: (SOURCE_RANK[ents[e]], e)))
            for surface, ents in by_surface.items()
        })
        self._titles = frozenset(
            s for s, ents in by_surface.items() if any(src in TITLE_SOURCES for src in ents.values())
        )

        counts: dict[str, dict[str, int]] = defaultdict(dict)
        for anchor, entity, count in anchors:
            counts[anchor][entity] = count
        self._anchors = MappingProxyType({a: MappingProxyType(c) for a, c in counts.items()})
        self._anchor_totals = MappingProxyType({a: sum(c.values()) for a, c in counts.items()})

        self._ngrams = MappingProxyType(dict(ngrams))

        keys = sorted(embeddings)
        self._vector_index = MappingProxyType({k: i for i, k in enumerate(keys)})
        dims = {len(embeddings[k]) for k in keys}
        if len(dims) > 1:
            raise ValueError(f"Embedding dimensions differ: {sorted(dims)}")
        self.dimension = dims.pop() if dims else 0
        matrix = np.array([embeddings[k] for k in keys], dtype=np.float64).reshape(len(keys), self.dimension)
        if not np.isfinite(matrix).all():
            raise ValueError("Embedding table contains NaN or Inf components")
        matrix.setflags(write=False)
        self._vectors = matrix

        self._fuzzy = TrigramIndex(list(self._aliases))
        self.manifest = manifest or Manifest(counts=self.counts(), checksums={}, dimension=self.dimension)

    def counts(self) -> dict[str, int]:
        """Record counts per store."""
        return {
            "aliases": sum(len(v) for v in self._aliases.values()),
            "anchors": sum(len(v) for v in self._anchors.values()),
            "ngrams": len(self._ngrams),
            "embeddings": len(self._vector_index),
        }

    def commonness(self, mention: str, entity: str) -> float:
        """Share of the mention's anchor occurrences that link to entity (0 if never)."""
        if mention not in self._anchors:
            raise UnknownAnchor(mention)
        total = self._anchor_totals[mention]
        if total == 0:
            return 0.0
        return self._anchors[mention].get(entity, 0) / total

    def embedding_of(self, key: str) -> np.ndarray | None:
        """Stored vector for a bare word or ENTITY/-prefixed id, or None."""
        i = self._vector_index.get(key)
        return None if i is None else self._vectors[i]

    def entity_vector(self, entity: str) -> np.ndarray | None:
        """Shorthand for embedding_of with the entity prefix applied."""
        return self.embedding_of(f"{ENTITY_PREFIX}{entity}")

    def exact_lookup(self, surface: str) -> list[str]:
        """Entities whose alias equals surface: title < redirect < disambiguation, then by id."""
        return list(self._aliases.get(surface, ()))

    def fuzzy_lookup(self, surface: str, depth: int) -> list[tuple[str, float]]:
        """Up to depth (entity, similarity) pairs; exact-alias entities come first at 1.0."""
        if not surface:
            raise ValueError("Fuzzy lookup needs a non-empty surface")
        if depth < 1:
            raise ValueError(f"Fuzzy lookup depth must be >= 1, got {depth}")

        exact = self.exact_lookup(surface)
        best: dict[str, float] = {}
        for alias, score in self._fuzzy.search(surface):
            for entity in self._aliases[alias]:
                if entity not in exact and score > best.get(entity, 0.0):
                    best[entity] = score
        ranked = sorted(best.items(), key=lambda p: (-p[1], p[0]))
        return ([(e, 1.0) for e in exact] + ranked)[:depth]

    def is_title(self, surface: str) -> bool:
        """True iff surface is a title or redirect alias of some entity."""
        return surface in self._titles

    def ngram_frequency(self, segment: str) -> int | None:
        """Exact n-gram frequency, or None when the table has no entry."""
        return self._ngrams.get(segment)


def open_snapshot(path: Path) -> KnowledgeSnapshot:
    """Load a persisted snapshot directory (snapshot.db + manifest.json) into memory."""
    manifest = Manifest.model_validate_json((path / MANIFEST_FILE).read_text())
    engine = make_engine(path)
    with Session(engine) as session:
        aliases = [(a.surface, a.entity, AliasSourceEnum(a.source)) for a in session.exec(select(Alias))]
        anchors = [(a.anchor, a.entity, a.count) for a in session.exec(select(Anchor))]
        ngrams = {n.ngram: n.frequency for n in session.exec(select(Ngram))}
        embeddings = {
            e.key: np.frombuffer(e.vector, dtype=np.float64) for e in session.exec(select(Embedding))
        }
    engine.dispose()
    snapshot = KnowledgeSnapshot(aliases, anchors, ngrams, embeddings, manifest)
    logger.info("Opened snapshot %s: %s", path, snapshot.counts())
    return snapshot
