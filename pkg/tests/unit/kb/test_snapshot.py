"""Unit tests for kb/snapshot.py against the tiny_kb fixture"""

import random

import numpy as np
import pytest

from qinterp.kb.fuzzy import trigrams
from qinterp.kb.models import AliasSourceEnum
from qinterp.kb.snapshot import KnowledgeSnapshot, UnknownAnchor
from tests.conftest import TINY_KB_DIR


SURFACES = {line.split("\t")[0] for line in (TINY_KB_DIR / "aliases.tsv").read_text().splitlines()}


def test_exact_lookup_title(tiny_kb):
    """A title alias resolves to its entity."""
    assert tiny_kb.exact_lookup("new york times") == ["The_New_York_Times"]


def test_exact_lookup_absent(tiny_kb):
    """Unknown surfaces give an empty list, not an error."""
    assert tiny_kb.exact_lookup("zzqx") == []


def test_exact_lookup_orders_by_source_then_id(tiny_kb):
    """Titles precede disambiguation entries; ties break lexicographically."""
    assert tiny_kb.exact_lookup("square dance") == [
        "Square_Dance", "Square_Dance_(ballet)", "Square_Dance_(film)",
    ]
    assert tiny_kb.exact_lookup("new york") == ["New_York_(state)", "New_York_City"]


def test_exact_lookup_keeps_best_source_per_entity():
    """An entity listed under two sources for one surface ranks by the better source."""
    snapshot = KnowledgeSnapshot(
        [("x", "B", AliasSourceEnum.title), ("x", "A", AliasSourceEnum.disambiguation),
         ("x", "A", AliasSourceEnum.redirect)],
        [], {}, {},
    )
    assert snapshot.exact_lookup("x") == ["B", "A"]


def test_fuzzy_lookup_typo(tiny_kb):
    """A misspelled surface still reaches its entity."""
    entities = [e for e, _ in tiny_kb.fuzzy_lookup("new yrok", 150)]
    assert "New_York_City" in entities


def test_fuzzy_lookup_exact_first(tiny_kb):
    """Exact-alias entities lead with the maximal score."""
    results = tiny_kb.fuzzy_lookup("new york", 150)
    assert results[:2] == [("New_York_(state)", 1.0), ("New_York_City", 1.0)]
    assert all(score < 1.0 for _, score in results[2:])


def test_fuzzy_lookup_depth_truncates(tiny_kb):
    """depth bounds the number of results."""
    assert len(tiny_kb.fuzzy_lookup("new york", 1)) == 1


def test_fuzzy_lookup_scores_descend(tiny_kb):
    """Non-exact results are sorted by similarity."""
    scores = [s for _, s in tiny_kb.fuzzy_lookup("times squar", 150)]
    assert scores == sorted(scores, reverse=True)


def test_fuzzy_lookup_agrees_with_scan(tiny_kb):
    """The best fuzzy entity equals the best entity of a full trigram scan over all aliases."""
    query = "frnk zappa"
    q = trigrams(query)
    best = max(
        ((len(q & trigrams(s)) / (len(q) * len(trigrams(s))) ** 0.5, s) for s in SURFACES),
    )
    assert tiny_kb.fuzzy_lookup(query, 1)[0][0] == tiny_kb.exact_lookup(best[1])[0]


@pytest.mark.parametrize("surface, depth", [("", 5), ("new york", 0)])
def test_fuzzy_lookup_invalid(tiny_kb, surface, depth):
    """Empty surfaces and depth < 1 are rejected."""
    with pytest.raises(ValueError):
        tiny_kb.fuzzy_lookup(surface, depth)


def test_ngram_frequency_present(tiny_kb):
    """Fixture frequencies are served exactly."""
    assert tiny_kb.ngram_frequency("new york") == 165_400_000
    assert tiny_kb.ngram_frequency("square dance") == 210_440


def test_ngram_frequency_absent_is_none(tiny_kb):
    """Absent n-grams are distinguishable from zero."""
    assert tiny_kb.ngram_frequency("york times square dance") is None


def test_ngram_frequency_zero_is_zero():
    """A stored zero stays zero."""
    snapshot = KnowledgeSnapshot([], [], {"a b": 0}, {})
    assert snapshot.ngram_frequency("a b") == 0


def test_commonness_share(tiny_kb):
    """Commonness is the entity's share of the mention's anchor count."""
    assert tiny_kb.commonness("square dance", "Square_Dance") == pytest.approx(0.8)
    assert tiny_kb.commonness("new york times", "The_New_York_Times") == 1.0


def test_commonness_unlinked_entity_is_zero(tiny_kb):
    """A known anchor that never links to the entity gives 0."""
    assert tiny_kb.commonness("new york times", "New_York_City") == 0.0


def test_commonness_unknown_anchor(tiny_kb):
    """Mentions without anchor statistics raise UnknownAnchor."""
    with pytest.raises(UnknownAnchor):
        tiny_kb.commonness("zzqx", "The_New_York_Times")


def test_commonness_zero_total():
    """An anchor whose counts are all zero has commonness 0."""
    snapshot = KnowledgeSnapshot([], [("a", "A", 0)], {}, {})
    assert snapshot.commonness("a", "A") == 0.0


def test_embedding_of(tiny_kb):
    """Entity keys carry the ENTITY/ prefix; words are bare."""
    assert tiny_kb.embedding_of("ENTITY/Square_Dance").tolist() == [0.0, 0.0, 1.0, 0.0]
    assert tiny_kb.entity_vector("Square_Dance").tolist() == [0.0, 0.0, 1.0, 0.0]
    assert tiny_kb.embedding_of("dance") is not None
    assert tiny_kb.embedding_of("zzqx") is None


def test_embeddings_are_read_only(tiny_kb):
    """Returned vectors cannot be modified in place."""
    vec = tiny_kb.embedding_of("dance")
    with pytest.raises(ValueError):
        vec[0] = 5.0


def test_snapshot_rejects_mixed_dimensions():
    """All vectors must share one dimension."""
    with pytest.raises(ValueError, match="dimensions differ"):
        KnowledgeSnapshot([], [], {}, {"a": np.ones(2), "b": np.ones(3)})


def test_is_title(tiny_kb):
    """Titles and redirects count as titles; disambiguation entries do not."""
    assert tiny_kb.is_title("new york times")
    assert tiny_kb.is_title("nyt")
    assert not tiny_kb.is_title("times")
    assert not tiny_kb.is_title("new york times square")


def test_counts_after_dedup(tiny_kb):
    """The fixture's repeated lines are deduplicated."""
    assert tiny_kb.counts() == {"aliases": 22, "anchors": 20, "ngrams": 51, "embeddings": 28}


def test_commonness_sums_to_one_on_fixture(tiny_kb):
    """Every fixture anchor's commonness over its linked entities sums to 1."""
    pairs = [line.split("\t")[:2] for line in (TINY_KB_DIR / "anchors.tsv").read_text().splitlines() if line.strip()]
    by_anchor = {}
    for anchor, entity in pairs:
        by_anchor.setdefault(anchor, set()).add(entity)
    for anchor, entities in by_anchor.items():
        assert sum(tiny_kb.commonness(anchor, e) for e in entities) == pytest.approx(1.0)


def test_commonness_sums_to_one_random():
    """Random anchor tables: positive totals sum to 1, zero totals give 0 everywhere."""
    rng = random.Random(11)
    for _ in range(200):
        anchors = [
            (f"m{a}", f"E{e}", rng.choice([0, rng.randint(1, 10_000)]))
            for a in range(rng.randint(1, 5)) for e in rng.sample(range(8), rng.randint(1, 4))
        ]
        snapshot = KnowledgeSnapshot([], anchors, {}, {})
        for mention in {a for a, _, _ in anchors}:
            entities = [e for a, e, _ in anchors if a == mention]
            total = sum(c for a, _, c in anchors if a == mention)
            cmn = [snapshot.commonness(mention, e) for e in entities]
            assert all(0.0 <= c <= 1.0 for c in cmn)
            assert sum(cmn) == (pytest.approx(1.0) if total > 0 else 0.0)
