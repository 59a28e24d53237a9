"""Unit tests for core/linker.py"""

import pytest

from qinterp.core import linker
from qinterp.core.linker import candidate_entities, link_phase, skeletons
from qinterp.core.models import MatchKindEnum, QueryError, Segment
from qinterp.core.segmentation import tokenize
from tests.conftest import SAMPLE_QUERY


def test_candidate_entities_covers_all_segments(sample_candidates):
    """Every one of the n(n+1)/2 segments has an entry."""
    assert len(sample_candidates) == 15


def test_candidate_entities_exact_first(sample_candidates):
    """Exact alias hits lead, marked exact, with lexical score 1."""
    first = sample_candidates.get(Segment(0, 2, "new york times"))[0]
    assert (first.entity, first.match_kind, first.lexical_score) == ("The_New_York_Times", MatchKindEnum.exact, 1.0)


def test_candidate_entities_no_duplicates(sample_candidates):
    """An entity appears at most once per segment."""
    for cands in sample_candidates.candidates.values():
        entities = [c.entity for c in cands]
        assert len(entities) == len(set(entities))


def test_candidate_entities_depth_zero_is_exact_only(tiny_kb, sample_query):
    """depth=0 disables fuzzy matching."""
    result = candidate_entities(tiny_kb, sample_query, 0)
    assert [c.entity for c in result.get(Segment(0, 1, "new york"))] == ["New_York_(state)", "New_York_City"]
    assert result.get(Segment(1, 2, "york times")) == ()
    assert all(c.match_kind == MatchKindEnum.exact for cands in result.candidates.values() for c in cands)


def test_candidate_entities_fuzzy_reaches_nonexact(sample_candidates):
    """Segments without exact aliases still get fuzzy candidates."""
    cands = sample_candidates.get(Segment(1, 2, "york times"))
    assert cands
    assert "The_New_York_Times" in {c.entity for c in cands}
    assert all(c.match_kind == MatchKindEnum.fuzzy and 0 < c.lexical_score < 1 for c in cands)


def test_candidate_entities_depth_bounds_fuzzy(tiny_kb, sample_query):
    """Exact hits are always kept; fuzzy additions stay within depth."""
    result = candidate_entities(tiny_kb, sample_query, 2)
    assert len(result.get(Segment(3, 4, "square dance"))) == 3
    for cands in result.candidates.values():
        assert sum(c.match_kind == MatchKindEnum.fuzzy for c in cands) <= 2


def test_candidate_entities_negative_depth(tiny_kb, sample_query):
    """Negative depth is rejected."""
    with pytest.raises(ValueError):
        candidate_entities(tiny_kb, sample_query, -1)


def test_candidate_entities_entities(sample_candidates):
    """entities() unions the candidates of all segments."""
    assert {"The_New_York_Times", "Times_Square", "Square_Dance", "New_York_City"} <= sample_candidates.entities()


def test_skeletons_times_phase(tiny_kb, sample_query, settings):
    """skeletons() filters at the configured threshold and records its latency."""
    result = skeletons(tiny_kb, sample_query, settings)
    assert [s.rank for s in result.retained] == [1, 3]
    assert result.elapsed_ms >= 0.0


def test_link_phase_parallel_matches_sequential(tiny_kb, sample_query, settings):
    """Concurrent and sequential execution produce the same phase products."""
    par_skel, par_cands = link_phase(tiny_kb, sample_query, settings)
    seq_skel, seq_cands = link_phase(tiny_kb, sample_query, settings.model_copy(update={"parallel": False}))
    assert [str(s) for s in par_skel.retained] == [str(s) for s in seq_skel.retained]
    assert dict(par_cands.candidates) == dict(seq_cands.candidates)


def test_candidate_set_get_missing_segment(sample_candidates):
    """Unknown segments map to an empty tuple."""
    assert sample_candidates.get(Segment(0, 0, "zzqx")) == ()


@pytest.mark.parametrize("parallel", [True, False])
def test_link_phase_rejects_long_query_before_linking(tiny_kb, settings, monkeypatch, parallel):
    """An over-long query raises QueryError without starting either phase."""
    calls = []
    monkeypatch.setattr(linker, "candidate_entities", lambda *args: calls.append("link"))
    monkeypatch.setattr(linker, "skeletons", lambda *args: calls.append("segment"))
    query = tokenize(" ".join([SAMPLE_QUERY] * 16))
    with pytest.raises(QueryError, match="80 terms"):
        link_phase(tiny_kb, query, settings.model_copy(update={"parallel": parallel}))
    assert calls == []
