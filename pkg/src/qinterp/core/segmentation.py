"""Query segmentation: enumerate, weight, rank, and filter segmentations into skeletons"""

from collections.abc import Callable
from dataclasses import replace

from qinterp.core.models import (
    Query, QueryError, Segment, Segmentation,
    SkeletonDecision, SkeletonReasonEnum, SkeletonSet,
)
from qinterp.core.utils.normalize import normalize
from qinterp.kb.snapshot import KnowledgeSnapshot


MAX_TERMS = 16

WeightFn = Callable[[KnowledgeSnapshot, Segment], float | None]


def _frequency_weight(snapshot: KnowledgeSnapshot, segment: Segment) -> float | None:
    """n-gram frequency times length for multi-term segments; None when unseen."""
    if segment.length == 1:
        return 0.0
    freq = snapshot.ngram_frequency(segment.text)
    return None if freq is None else float(freq * segment.length)


def _wiki_weight(snapshot: KnowledgeSnapshot, segment: Segment) -> float | None:
    """Titles and redirects weigh (1 + most frequent sub-2-gram) times length; others by frequency."""
    if segment.length == 1 or not snapshot.is_title(segment.text):
        return _frequency_weight(snapshot, segment)
    words = segment.text.split()
    freqs = (snapshot.ngram_frequency(f"{a} {b}") for a, b in zip(words, words[1:]))
    return float((1 + max((f for f in freqs if f is not None), default=0)) * segment.length)


WEIGHTINGS: dict[str, WeightFn] = {
    "wiki":      _wiki_weight,
    "frequency": _frequency_weight,
}


def all_segments(query: Query) -> list[Segment]:
    """Every contiguous segment of the query, n(n+1)/2 in total."""
    n = len(query.terms)
    return [
        Segment(i, j, " ".join(query.terms[i:j + 1]))
        for i in range(n) for j in range(i, n)
    ]


def check_length(query: Query, max_terms: int = MAX_TERMS) -> Query:
    """Return the query unchanged, or raise QueryError when it has more than max_terms terms."""
    if len(query.terms) > max_terms:
        raise QueryError(f"Query has {len(query.terms)} terms; the limit is {max_terms}")
    return query


def enumerate_segmentations(query: Query, max_terms: int = MAX_TERMS) -> list[Segmentation]:
    """All 2^(n-1) segmentations: one per subset of the n-1 gaps between terms."""
    n = len(check_length(query, max_terms).terms)
    results = []
    for mask in range(1 << (n - 1)):
        segments, start = [], 0
        for gap in range(n - 1):
            if mask >> gap & 1:
                segments.append(Segment(start, gap, " ".join(query.terms[start:gap + 1])))
                start = gap + 1
        segments.append(Segment(start, n - 1, " ".join(query.terms[start:])))
        results.append(Segmentation(tuple(segments)))
    return results


def no_segmentation(query: Query) -> Segmentation:
    """Each term its own segment; scores 0."""
    segments = tuple(Segment(i, i, t) for i, t in enumerate(query.terms))
    return Segmentation(segments, 0.0, tuple(0.0 for _ in segments))


def segment_weight(snapshot: KnowledgeSnapshot, segment: Segment, weighting: str = "wiki") -> float | None:
    """Weight of one segment under the named scheme; None when its frequency is unknown."""
    return WEIGHTINGS[weighting](snapshot, segment)


def _scored(
    snapshot: KnowledgeSnapshot,
    segmentation: Segmentation,
    weighting: str,
    cache: dict[Segment, float | None],
    ) -> Segmentation:
    """Return segmentation with weights and score filled; any unknown weight scores -1."""
    weights = []
    for seg in segmentation.segments:
        if seg not in cache:
            cache[seg] = segment_weight(snapshot, seg, weighting)
        weights.append(cache[seg])
    score = -1.0 if None in weights else float(sum(w for w in weights if w is not None))
    return replace(segmentation, score=score, weights=tuple(weights))


def score_segmentation(snapshot: KnowledgeSnapshot, segmentation: Segmentation, weighting: str = "wiki") -> float:
    """Sum of segment weights, or -1 if any multi-term segment has no known frequency."""
    return _scored(snapshot, segmentation, weighting, {}).score


def rank_segmentations(
    snapshot: KnowledgeSnapshot,
    query: Query,
    weighting: str = "wiki",
    max_terms: int = MAX_TERMS,
    ) -> list[Segmentation]:
    """Score all segmentations and sort: score desc, fewer segments, then segmentation text."""
    cache: dict[Segment, float | None] = {}
    scored = [_scored(snapshot, s, weighting, cache) for s in enumerate_segmentations(query, max_terms)]
    scored.sort(key=lambda s: (-s.score, len(s.segments), str(s)))
    return [replace(s, rank=i) for i, s in enumerate(scored, start=1)]


def _heaviest(segmentation: Segmentation) -> Segment:
    """The segment with maximal weight; leftmost on ties."""
    weights = [w if w is not None else float("-inf") for w in segmentation.weights]
    best = max(range(len(weights)), key=lambda i: (weights[i], -i))
    return segmentation.segments[best]


def filter_skeletons(ranked: list[Segmentation], threshold: float) -> SkeletonSet:
    """Scan in rank order, keeping segmentations that pass both skeleton filters.

    A segmentation is dropped when its heaviest segment already occurs in a retained one.
    Otherwise, its score ratio to the last retained score must reach threshold; the first
    failure ends retention. Non-positive scores never pass. If nothing scores above 0,
    the all-single-term segmentation is the only skeleton.
    """
    if not ranked:
        raise ValueError("filter_skeletons needs at least one ranked segmentation")
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"Threshold must be in (0, 1], got {threshold}")

    retained: list[Segmentation] = []
    decisions: list[SkeletonDecision] = []
    seen: set[str] = set()
    stopped = False
    for seg in ranked:
        if stopped:
            decisions.append(SkeletonDecision(seg, SkeletonReasonEnum.ratio))
            continue
        if seg.score <= 0:
            decisions.append(SkeletonDecision(seg, SkeletonReasonEnum.score))
            continue
        if retained and _heaviest(seg).text in seen:
            decisions.append(SkeletonDecision(seg, SkeletonReasonEnum.contained))
            continue
        ratio = seg.score / retained[-1].score if retained else None
        if ratio is not None and ratio < threshold:
            decisions.append(SkeletonDecision(seg, SkeletonReasonEnum.ratio, ratio))
            stopped = True
            continue
        retained.append(seg)
        seen.update(s.text for s in seg.segments)
        decisions.append(SkeletonDecision(seg, SkeletonReasonEnum.kept, ratio))

    if not retained:
        n = max(len(s.segments) for s in ranked)
        fallback = next(s for s in ranked if len(s.segments) == n)
        retained.append(fallback)
        decisions = [
            SkeletonDecision(d.segmentation, SkeletonReasonEnum.fallback) if d.segmentation is fallback else d
            for d in decisions
        ]
    return SkeletonSet(tuple(retained), threshold, tuple(decisions))


def tokenize(raw: str, max_terms: int | None = None) -> Query:
    """Normalize raw text and split it into terms, enforcing max_terms when given."""
    terms = tuple(normalize(raw).split())
    if not terms:
        raise QueryError("Query is empty")
    query = Query(raw=raw, terms=terms)
    return query if max_terms is None else check_length(query, max_terms)
