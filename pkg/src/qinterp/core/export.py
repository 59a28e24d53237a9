"""Output rendering: structured payloads for interpretations, segmentations, candidates, and reports"""

from collections.abc import Sequence

from pydantic import BaseModel

from qinterp.core.corpus import Part
from qinterp.core.models import CandidateSet, Interpretation, InterpretResult, SkeletonSet


class LinkOut(BaseModel):
    segment: str
    entity: str | None = None
    cmn: float = 0.0
    rel: float = 0.0
    cxt: float = 0.0


class InterpretationOut(BaseModel):
    interpretation: str
    segmentation: str
    score: float
    parts: list[LinkOut]


class TimingsOut(BaseModel):
    segmentation_ms: float
    linking_ms: float
    combination_ms: float
    total_ms: float


class InterpretResponse(BaseModel):
    """Body shared by `qinterp interpret` and GET /interpret."""
    query: str
    interpretations: list[InterpretationOut]
    skeletons: list[str]
    truncated: bool = False
    timings: TimingsOut


class SegmentationOut(BaseModel):
    rank: int
    segmentation: str
    score: float
    ratio: float | None = None
    decision: str


class CandidateOut(BaseModel):
    segment: str
    entity: str
    match: str
    lexical_score: float


def interpretation_record(interp: Interpretation) -> InterpretationOut:
    return InterpretationOut(
        interpretation=str(interp),
        segmentation=interp.segmentation,
        score=interp.score,
        parts=[LinkOut(segment=p.segment.text, entity=p.entity, cmn=p.cmn, rel=p.rel, cxt=p.cxt) for p in interp.parts],
    )


def run_parts(interp: Interpretation) -> list[Part]:
    """Interpretation as corpus-style parts for run files."""
    return [Part(text=p.segment.text, entity=p.entity) for p in interp.parts]


def result_payload(result: InterpretResult, timings: bool = True) -> InterpretResponse:
    """Structured payload of one interpretation result; timings zeroed when timings=False."""
    t = result.timings
    return InterpretResponse(
        query=" ".join(result.query.terms),
        interpretations=[interpretation_record(i) for i in result.interpretations],
        skeletons=[str(s) for s in result.skeletons.retained],
        truncated=result.truncated,
        timings=TimingsOut(
            segmentation_ms=t.segmentation_ms if timings else 0.0,
            linking_ms=t.linking_ms if timings else 0.0,
            combination_ms=t.combination_ms if timings else 0.0,
            total_ms=t.total_ms if timings else 0.0,
        ),
    )


def segmentation_records(skeletons: SkeletonSet) -> list[SegmentationOut]:
    """One record per ranked segmentation with its filter decision."""
    return [
        SegmentationOut(
            rank=d.segmentation.rank,
            segmentation=str(d.segmentation),
            score=d.segmentation.score,
            ratio=d.ratio,
            decision=d.reason.value,
        )
        for d in skeletons.decisions
    ]


def candidate_records(candidates: CandidateSet) -> list[CandidateOut]:
    return [
        CandidateOut(segment=seg.text, entity=c.entity, match=c.match_kind.value, lexical_score=c.lexical_score)
        for seg in sorted(candidates.candidates)
        for c in candidates.get(seg)
    ]


def _cell(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.3f}"
    return "" if value is None else str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Left-aligned plain-text table; floats at 3 decimals."""
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [max([len(h), *(len(r[i]) for r in cells)]) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells)
    return "\n".join(lines)
