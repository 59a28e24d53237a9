"""Combination and ranking: fill skeletons with entity links and score interpretations"""

import itertools
import logging
import math
from dataclasses import replace
from time import perf_counter

import numpy as np

from qinterp.config import Settings
from qinterp.core.linker import link_phase
from qinterp.core.models import (
    CandidateSet, Interpretation, InterpretResult, LinkedSegment,
    ScoringWeights, Segment, Segmentation, Timings,
)
from qinterp.core.segmentation import tokenize
from qinterp.core.utils.vectors import cosine, mean_vector
from qinterp.kb.snapshot import KnowledgeSnapshot, UnknownAnchor


MAX_COMBINATIONS = 10_000

logger = logging.getLogger(__name__)


def _commonness(snapshot: KnowledgeSnapshot, mention: str, entity: str) -> float:
    """Commonness with unknown anchors treated as 0."""
    try:
        return snapshot.commonness(mention, entity)
    except UnknownAnchor:
        return 0.0


def _mean_cosine(vector: np.ndarray | None, others: list[np.ndarray | None]) -> float:
    """Mean cosine of vector against others; absent vectors count as 0."""
    if vector is None or not others:
        return 0.0
    return sum(cosine(vector, o) for o in others if o is not None) / len(others)


def _segment_vector(snapshot: KnowledgeSnapshot, segment: Segment) -> np.ndarray | None:
    """Mean of the segment's known word vectors, or None."""
    words = (snapshot.embedding_of(w) for w in segment.text.split())
    return mean_vector([v for v in words if v is not None])


def _part_index(interpretation: Interpretation, entity: str) -> int:
    for i, part in enumerate(interpretation.parts):
        if part.entity == entity:
            return i
    raise ValueError(f"Entity {entity} is not linked in {interpretation}")


def _options(snapshot: KnowledgeSnapshot, segment: Segment, candidates: CandidateSet) -> list[tuple[str | None, float]]:
    """Positive-commonness entities for segment by commonness desc, then the unlinked option."""
    options: dict[str, float] = {}
    for cand in candidates.get(segment):
        cmn = _commonness(snapshot, segment.text, cand.entity)
        if cmn > 0:
            options[cand.entity] = cmn
    ranked: list[tuple[str | None, float]] = sorted(options.items(), key=lambda o: (-o[1], o[0]))
    return ranked + [(None, 0.0)]


def combination_count(snapshot: KnowledgeSnapshot, skeleton: Segmentation, candidates: CandidateSet) -> int:
    """Size of the skeleton's full Cartesian product of link options."""
    return math.prod(len(_options(snapshot, s, candidates)) for s in skeleton.segments)


def fill_skeleton(
    skeleton: Segmentation,
    candidates: CandidateSet,
    snapshot: KnowledgeSnapshot,
    max_combinations: int = MAX_COMBINATIONS,
    ) -> list[Interpretation]:
    """Unscored interpretations: the product of each segment's link options.

    Options are ordered by commonness, so truncation at max_combinations keeps
    the combinations built from the most common entities of the leading segments.
    """
    options = [_options(snapshot, s, candidates) for s in skeleton.segments]
    total = math.prod(len(o) for o in options)
    if total > max_combinations:
        logger.warning("Skeleton '%s' has %d combinations; keeping %d", skeleton, total, max_combinations)
    combos = itertools.islice(itertools.product(*options), max_combinations)
    return [
        Interpretation(tuple(
            LinkedSegment(seg, entity, cmn) for seg, (entity, cmn) in zip(skeleton.segments, combo)
        ))
        for combo in combos
    ]


def rate(snapshot: KnowledgeSnapshot, interpretation: Interpretation, weights: ScoringWeights) -> Interpretation:
    """Return interpretation with CMN/REL/CXT per linked part and the averaged weighted score."""
    parts = list(interpretation.parts)
    linked = [i for i, p in enumerate(parts) if p.entity]
    if not linked:
        return replace(interpretation, score=0.0)

    vectors = {i: snapshot.entity_vector(parts[i].entity or "") for i in linked}
    context = [_segment_vector(snapshot, p.segment) for p in parts if p.entity is None]
    total = 0.0
    for i in linked:
        part = parts[i]
        cmn = _commonness(snapshot, part.segment.text, part.entity or "")
        rel = _mean_cosine(vectors[i], [vectors[j] for j in linked if j != i])
        cxt = _mean_cosine(vectors[i], context)
        parts[i] = replace(part, cmn=cmn, rel=rel, cxt=cxt)
        total += weights.alpha * cmn + weights.beta * rel + weights.gamma * cxt
    return Interpretation(tuple(parts), total / len(linked))


def relatedness(snapshot: KnowledgeSnapshot, entity: str, interpretation: Interpretation) -> float:
    """Mean cosine of entity's vector with every other linked entity's vector."""
    i = _part_index(interpretation, entity)
    others = [p.entity for j, p in enumerate(interpretation.parts) if j != i and p.entity]
    return _mean_cosine(snapshot.entity_vector(entity), [snapshot.entity_vector(e) for e in others])


def context(snapshot: KnowledgeSnapshot, entity: str, interpretation: Interpretation) -> float:
    """Mean cosine of entity's vector with each unlinked segment's mean word vector."""
    _part_index(interpretation, entity)
    unlinked = [_segment_vector(snapshot, p.segment) for p in interpretation.parts if p.entity is None]
    return _mean_cosine(snapshot.entity_vector(entity), unlinked)


def score_interpretation(snapshot: KnowledgeSnapshot, interpretation: Interpretation, weights: ScoringWeights) -> float:
    """(1/|E|) * sum over linked e of alpha*CMN + beta*REL + gamma*CXT; 0 with no links."""
    return rate(snapshot, interpretation, weights).score


def rank_key(interpretation: Interpretation) -> tuple[float, int, str, str]:
    """Score desc, more linked entities first, then interpretation and segmentation text."""
    return (-interpretation.score, -len(interpretation.entities), str(interpretation), interpretation.segmentation)


def interpret(snapshot: KnowledgeSnapshot, raw_query: str, settings: Settings) -> InterpretResult:
    """End to end: tokenize, segment + link, fill retained skeletons, score, and rank."""
    start = perf_counter()
    query = tokenize(raw_query, settings.max_terms)
    skeletons, candidates = link_phase(snapshot, query, settings)

    combine_start = perf_counter()
    weights = ScoringWeights(settings.alpha, settings.beta, settings.gamma)
    pool: dict[tuple, Interpretation] = {}
    truncated = False
    for skeleton in skeletons.retained:
        truncated |= combination_count(snapshot, skeleton, candidates) > settings.max_combinations
        for interp in fill_skeleton(skeleton, candidates, snapshot, settings.max_combinations):
            if interp.key not in pool:
                pool[interp.key] = rate(snapshot, interp, weights)
    ranked = sorted(pool.values(), key=rank_key)
    if settings.top_k:
        ranked = ranked[:settings.top_k]

    end = perf_counter()
    timings = Timings(
        segmentation_ms=skeletons.elapsed_ms,
        linking_ms=candidates.elapsed_ms,
        combination_ms=(end - combine_start) * 1000.0,
        total_ms=(end - start) * 1000.0,
    )
    return InterpretResult(query, skeletons, candidates, tuple(ranked), timings, truncated)
