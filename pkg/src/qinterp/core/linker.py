"""Recall-oriented candidate linking of every query segment, joined with segmentation"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from time import perf_counter
from types import MappingProxyType

from qinterp.config import Settings
from qinterp.core.models import Candidate, CandidateSet, MatchKindEnum, Query, Segment, SkeletonSet
from qinterp.core.segmentation import all_segments, check_length, filter_skeletons, rank_segmentations
from qinterp.kb.snapshot import KnowledgeSnapshot


def _elapsed_ms(start: float) -> float:
    return (perf_counter() - start) * 1000.0


def candidate_entities(snapshot: KnowledgeSnapshot, query: Query, depth: int) -> CandidateSet:
    """Exact plus up to depth fuzzy candidates for all n(n+1)/2 segments.

    Exact candidates come first; a fuzzy hit for an already-listed entity is dropped.
    depth=0 disables fuzzy matching.
    """
    if depth < 0:
        raise ValueError(f"Fuzzy depth must be >= 0, got {depth}")
    start = perf_counter()
    linked: dict[Segment, tuple[Candidate, ...]] = {}
    for seg in all_segments(query):
        exact = snapshot.exact_lookup(seg.text)
        found = [Candidate(seg, e, MatchKindEnum.exact) for e in exact]
        if depth > 0:
            seen = set(exact)
            for entity, score in snapshot.fuzzy_lookup(seg.text, depth):
                if entity not in seen:
                    found.append(Candidate(seg, entity, MatchKindEnum.fuzzy, score))
                    seen.add(entity)
        linked[seg] = tuple(found)
    return CandidateSet(MappingProxyType(linked), _elapsed_ms(start))


def skeletons(snapshot: KnowledgeSnapshot, query: Query, settings: Settings) -> SkeletonSet:
    """Rank and filter the query's segmentations, timing the whole phase."""
    start = perf_counter()
    ranked = rank_segmentations(snapshot, query, settings.weighting, settings.max_terms)
    return replace(filter_skeletons(ranked, settings.threshold), elapsed_ms=_elapsed_ms(start))


def link_phase(snapshot: KnowledgeSnapshot, query: Query, settings: Settings) -> tuple[SkeletonSet, CandidateSet]:
    """Run segmentation and candidate linking, concurrently when settings.parallel is set.

    The length limit is checked before either phase starts.
    """
    check_length(query, settings.max_terms)
    if not settings.parallel:
        return skeletons(snapshot, query, settings), candidate_entities(snapshot, query, settings.depth)
    with ThreadPoolExecutor(max_workers=2) as pool:
        seg_job = pool.submit(skeletons, snapshot, query, settings)
        link_job = pool.submit(candidate_entities, snapshot, query, settings.depth)
        return seg_job.result(), link_job.result()
