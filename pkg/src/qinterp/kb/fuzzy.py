"""Character-trigram inverted index for approximate alias matching"""

import math
from collections import defaultdict


def trigrams(text: str) -> frozenset[str]:
    """Return the set of character trigrams of text padded with one space on each side."""
    padded = f" {text} "
    return frozenset(padded[i:i + 3] for i in range(len(padded) - 2))


class TrigramIndex:
    """Inverted index from trigram to surface ids, scored by trigram-set cosine overlap."""

    def __init__(self, surfaces: list[str]):
        self.surfaces = sorted(set(surfaces))
        self._grams = [trigrams(s) for s in self.surfaces]
        postings: dict[str, list[int]] = defaultdict(list)
        for uid, grams in enumerate(self._grams):
            for gram in grams:
                postings[gram].append(uid)
        self._postings = dict(postings)

    def search(self, text: str, limit: int | None = None) -> list[tuple[str, float]]:
        """Return (surface, similarity) pairs sharing a trigram with text, best first.

        Similarity is |A & B| / sqrt(|A| * |B|) over trigram sets; ties sort by surface.
        """
        query = trigrams(text)
        overlap: dict[int, int] = defaultdict(int)
        for gram in query:
            for uid in self._postings.get(gram, ()):
                overlap[uid] += 1

        scored = [
            (self.surfaces[uid], shared / math.sqrt(len(query) * len(self._grams[uid])))
            for uid, shared in overlap.items()
        ]
        scored.sort(key=lambda p: (-p[1], p[0]))
        return scored[:limit] if limit is not None else scored
