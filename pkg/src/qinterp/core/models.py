"""Domain types for queries, segmentations, candidates, and interpretations"""

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum


class QueryError(ValueError):
    """An empty query or one longer than the configured term limit."""


@dataclass(frozen=True)
class Query:
    """A normalized keyword query as an ordered sequence of terms."""
    raw:   str
    terms: tuple[str, ...]


@dataclass(frozen=True, order=True)
class Segment:
    """A contiguous run of query terms, start..end inclusive."""
    start: int
    end:   int
    text:  str

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Segmentation:
    """Disjoint segments covering a query, with per-segment weights and the summed score."""
    segments: tuple[Segment, ...]
    score:    float = 0.0
    weights:  tuple[float | None, ...] = ()
    rank:     int = 0

    def __str__(self) -> str:
        return " | ".join(s.text for s in self.segments)


class SkeletonReasonEnum(str, Enum):
    """Why filter_skeletons kept or dropped a ranked segmentation"""
    kept      = "kept"
    fallback  = "fallback"    # no positive score anywhere; all-single-term kept
    contained = "contained"   # heaviest segment already in a retained segmentation
    ratio     = "ratio"       # score ratio to last retained below threshold
    score     = "score"       # non-positive score


@dataclass(frozen=True)
class SkeletonDecision:
    segmentation: Segmentation
    reason:       SkeletonReasonEnum
    ratio:        float | None = None

    @property
    def kept(self) -> bool:
        return self.reason in (SkeletonReasonEnum.kept, SkeletonReasonEnum.fallback)


@dataclass(frozen=True)
class SkeletonSet:
    """Segmentations surviving both filters, in rank order."""
    retained:   tuple[Segmentation, ...]
    threshold:  float
    decisions:  tuple[SkeletonDecision, ...] = ()
    elapsed_ms: float = 0.0


class MatchKindEnum(str, Enum):
    """How a candidate entity was found for a segment"""
    exact = "exact"
    fuzzy = "fuzzy"


@dataclass(frozen=True)
class Candidate:
    segment:       Segment
    entity:        str
    match_kind:    MatchKindEnum
    lexical_score: float = 1.0


@dataclass(frozen=True)
class CandidateSet:
    """Candidates for every segment of a query; segments without hits map to ()."""
    candidates: Mapping[Segment, tuple[Candidate, ...]]
    elapsed_ms: float = 0.0

    def __len__(self) -> int:
        return len(self.candidates)

    def entities(self) -> set[str]:
        return {c.entity for cands in self.candidates.values() for c in cands}

    def get(self, segment: Segment) -> tuple[Candidate, ...]:
        return self.candidates.get(segment, ())


@dataclass(frozen=True)
class LinkedSegment:
    """A segment linked to an entity (or kept as a phrase) with its component scores."""
    segment: Segment
    entity:  str | None = None
    cmn:     float = 0.0
    rel:     float = 0.0
    cxt:     float = 0.0


@dataclass(frozen=True)
class Interpretation:
    parts: tuple[LinkedSegment, ...]
    score: float = 0.0

    def __str__(self) -> str:
        return " | ".join(p.entity or p.segment.text for p in self.parts)

    @property
    def entities(self) -> tuple[str, ...]:
        return tuple(p.entity for p in self.parts if p.entity)

    @property
    def key(self) -> tuple[tuple[int, int, str | None], ...]:
        """Segmentation + link structure; equal keys are duplicates."""
        return tuple((p.segment.start, p.segment.end, p.entity) for p in self.parts)

    @property
    def segmentation(self) -> str:
        return " | ".join(p.segment.text for p in self.parts)


@dataclass(frozen=True)
class ScoringWeights:
    """Weights of commonness, relatedness, and context in an interpretation score."""
    alpha: float = 1.0
    beta:  float = 1.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"Scoring weight {name} must be in [0, 1], got {getattr(self, name)}")


@dataclass(frozen=True)
class Timings:
    segmentation_ms: float = 0.0
    linking_ms:      float = 0.0
    combination_ms:  float = 0.0
    total_ms:        float = 0.0


@dataclass(frozen=True)
class InterpretResult:
    """Ranked interpretations of one query plus the phase products and latencies."""
    query:           Query
    skeletons:       SkeletonSet
    candidates:      CandidateSet
    interpretations: tuple[Interpretation, ...]
    timings:         Timings = field(default_factory=Timings)
    truncated:       bool = False
