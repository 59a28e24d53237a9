"""Shared fixtures for kb unit tests"""

import pytest


ALIASES = [
    ("new york", "New_York_City", "title"),
    ("big apple", "New_York_City", "redirect"),
    ("new york", "New_York_(state)", "title"),
]
ANCHORS = [
    ("new york", "New_York_City", 70),
    ("new york", "New_York_(state)", 30),
]
NGRAMS = [("new york", 165_400_000), ("big apple", 2_000_000)]
EMBEDDINGS = [
    ("ENTITY/New_York_City", [0.6, 0.8]),
    ("ENTITY/New_York_(state)", [0.3, 0.9]),
    ("new", [1.0, 0.0]),
]


def write_sources(root, aliases=ALIASES, anchors=ANCHORS, ngrams=NGRAMS, embeddings=EMBEDDINGS, dim=2):
    """Write the four source files under root and return their paths."""
    root.mkdir(parents=True, exist_ok=True)
    paths = (root / "aliases.tsv", root / "anchors.tsv", root / "ngrams.tsv", root / "embeddings.txt")
    paths[0].write_text("".join(f"{s}\t{e}\t{k}\n" for s, e, k in aliases))
    paths[1].write_text("".join(f"{a}\t{e}\t{c}\n" for a, e, c in anchors))
    paths[2].write_text("".join(f"{n}\t{f}\n" for n, f in ngrams))
    rows = "".join(f"{k}\t{' '.join(str(v) for v in vec)}\n" for k, vec in embeddings)
    paths[3].write_text(f"{len(embeddings)} {dim}\n{rows}")
    return paths


@pytest.fixture(name="sources")
def sources_fixture(tmp_path):
    """Paths of a small, valid set of source files."""
    return write_sources(tmp_path / "src")
