"""Evaluation: entity-level and interpretation-level metrics, skeleton matching, baseline"""

from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ValidationError

from qinterp.core.corpus import EntityKindEnum, GroundTruthInterpretation, GroundTruthRecord, Part
from qinterp.core.interpreter import _commonness, rate
from qinterp.core.models import CandidateSet, Interpretation, LinkedSegment, Query, ScoringWeights
from qinterp.core.segmentation import filter_skeletons, rank_segmentations
from qinterp.core.utils.normalize import normalize
from qinterp.kb.snapshot import KnowledgeSnapshot


class MatchEnum(str, Enum):
    """Ordered match strength: complete implies partial"""
    none     = "none"
    partial  = "partial"
    complete = "complete"


MATCH_ORDER = {MatchEnum.none: 0, MatchEnum.partial: 1, MatchEnum.complete: 2}


class RunInterpretation(BaseModel):
    parts: list[Part]
    score: float = 0.0


class RunRecord(BaseModel):
    """One system output line of a run file."""
    query_id: str
    query: str = ""
    interpretations: list[RunInterpretation] = []
    skeletons: list[str] = []                 # retained segmentations, segments '|'-separated
    entities: list[str] | None = None         # linking-phase entity set E'
    latency_ms: float | None = None


@dataclass(frozen=True)
class EntityScores:
    """Per-query entity metrics plus the counts micro-averaging pools."""
    prec:      float
    rec:       float
    rec_star:  float
    hits:      int = 0
    predicted: int = 0
    gold:      int = 0
    hit_rel:   int = 0
    gold_rel:  int = 0


class EntityEvalResult(BaseModel):
    queries: int
    micro_prec: float
    micro_rec: float
    micro_rec_star: float
    macro_prec: float
    macro_rec: float
    macro_rec_star: float


class InterpScores(BaseModel):
    recall: float
    weighted_recall: float
    precision: float
    f1: float


class InterpEvalResult(BaseModel):
    partial: InterpScores
    complete: InterpScores
    queries: int
    skipped: int = 0              # queries without gold interpretations at min_grade
    latency_ms: float | None = None


class SkeletonEvalResult(BaseModel):
    csa: float                    # complete skeleton recall, all interpretations
    csb: float                    # complete, grade >= 2 interpretations
    psa: float                    # partial, all
    psb: float                    # partial, grade >= 2
    complete_precision: float
    partial_precision: float
    complete_f1: float
    partial_f1: float
    queries: int


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _ratio(num: float, den: float, empty_num_side: bool) -> float:
    """num/den, with a zero denominator giving 1 only when the other side is empty too."""
    if den > 0:
        return num / den
    return 1.0 if empty_num_side else 0.0


def entity_metrics(predicted: Iterable[str], gold: Mapping[str, int]) -> EntityScores:
    """prec(q), rec(q), and rec*(q) of a predicted entity set against graded gold entities."""
    found = set(predicted)
    hits = found & gold.keys()
    hit_rel = sum(gold[e] for e in hits)
    gold_rel = sum(gold.values())
    return EntityScores(
        prec=_ratio(len(hits), len(found), not gold),
        rec=_ratio(len(hits), len(gold), not found),
        rec_star=_ratio(hit_rel, gold_rel, not found),
        hits=len(hits), predicted=len(found), gold=len(gold),
        hit_rel=hit_rel, gold_rel=gold_rel,
    )


def aggregate(results: Sequence[EntityScores]) -> EntityEvalResult:
    """Micro (pooled counts) and macro (mean of per-query values) averages."""
    if not results:
        raise ValueError("Cannot aggregate an empty run")
    hits = sum(r.hits for r in results)
    predicted = sum(r.predicted for r in results)
    gold = sum(r.gold for r in results)
    return EntityEvalResult(
        queries=len(results),
        micro_prec=_ratio(hits, predicted, gold == 0),
        micro_rec=_ratio(hits, gold, predicted == 0),
        micro_rec_star=_ratio(sum(r.hit_rel for r in results), sum(r.gold_rel for r in results), predicted == 0),
        macro_prec=_mean([r.prec for r in results]),
        macro_rec=_mean([r.rec for r in results]),
        macro_rec_star=_mean([r.rec_star for r in results]),
    )


def _match_parts(predicted: Sequence[Part], gold: Sequence[Part]) -> MatchEnum:
    pairs = [(normalize(p.text), p.entity) for p in predicted]
    if pairs == [(normalize(g.text), g.entity) for g in gold]:
        return MatchEnum.complete
    if Counter(p.entity for p in predicted if p.entity) == Counter(g.entity for g in gold if g.entity):
        return MatchEnum.partial
    return MatchEnum.none


def match_interpretation(predicted: Sequence[Part], gold: Sequence[GroundTruthInterpretation]) -> MatchEnum:
    """Best match of a predicted interpretation against any member of a gold equivalence class."""
    return max((_match_parts(predicted, g.parts) for g in gold), key=MATCH_ORDER.get, default=MatchEnum.none)


def _gold_classes(record: GroundTruthRecord, min_grade: int) -> list[tuple[list[GroundTruthInterpretation], int]]:
    """Gold interpretations at min_grade or above, grouped by equivalence class with max grade."""
    classes: dict[int, list[GroundTruthInterpretation]] = defaultdict(list)
    for interp in record.interpretations:
        if interp.grade >= min_grade:
            classes[interp.equivalence_class].append(interp)
    return [(members, max(m.grade for m in members)) for _, members in sorted(classes.items())]


def _index(runs: Sequence[RunRecord], corpus: Sequence[GroundTruthRecord]) -> list[tuple[RunRecord, GroundTruthRecord]]:
    by_id = {r.id: r for r in corpus}
    pairs = []
    for run in runs:
        if run.query_id not in by_id:
            raise ValueError(f"Run query id {run.query_id!r} not found in corpus")
        pairs.append((run, by_id[run.query_id]))
    return pairs


def interpretation_metrics(
    runs: Sequence[RunRecord],
    corpus: Sequence[GroundTruthRecord],
    min_grade: int = 2,
    top_k: int = 0,
    ) -> InterpEvalResult:
    """Macro-averaged R, R*, P and F1 under partial and complete matching.

    Gold interpretations below min_grade are ignored and equivalent ones count once.
    Queries left without gold interpretations are skipped. top_k > 0 cuts predictions.
    """
    if not runs:
        raise ValueError("Cannot evaluate an empty run")
    scores: dict[MatchEnum, list[tuple[float, float, float]]] = {MatchEnum.partial: [], MatchEnum.complete: []}
    skipped = 0
    for run, record in _index(runs, corpus):
        classes = _gold_classes(record, min_grade)
        if not classes:
            skipped += 1
            continue
        preds = run.interpretations[:top_k] if top_k else run.interpretations
        matches = [[match_interpretation(p.parts, members) for members, _ in classes] for p in preds]
        for kind, bucket in scores.items():
            hit = [[MATCH_ORDER[m] >= MATCH_ORDER[kind] for m in row] for row in matches]
            found = [any(row[c] for row in hit) for c in range(len(classes))]
            recall = sum(found) / len(classes)
            weighted = sum(g for (_, g), f in zip(classes, found) if f) / sum(g for _, g in classes)
            precision = sum(any(row) for row in hit) / len(preds) if preds else 0.0
            bucket.append((recall, weighted, precision))

    def _summary(rows: list[tuple[float, float, float]]) -> InterpScores:
        r, w, p = (_mean([row[i] for row in rows]) for i in range(3))
        return InterpScores(recall=r, weighted_recall=w, precision=p, f1=_f1(p, r))

    latencies = [r.latency_ms for r in runs if r.latency_ms is not None]
    return InterpEvalResult(
        partial=_summary(scores[MatchEnum.partial]),
        complete=_summary(scores[MatchEnum.complete]),
        queries=len(runs) - skipped,
        skipped=skipped,
        latency_ms=_mean(latencies) if latencies else None,
    )


def _spans(texts: Sequence[str]) -> list[tuple[int, int]]:
    """Inclusive term spans of consecutive segment texts."""
    spans, start = [], 0
    for text in texts:
        n = len(normalize(text).split())
        spans.append((start, start + n - 1))
        start += n
    return spans


def _skeleton_match(skeleton: str, gold: GroundTruthInterpretation) -> MatchEnum:
    """Complete when boundaries agree; partial when every linked gold segment is a skeleton segment."""
    spans = _spans(skeleton.split("|"))
    gold_spans = _spans([p.text for p in gold.parts])
    if spans == gold_spans:
        return MatchEnum.complete
    mentions = [s for s, p in zip(gold_spans, gold.parts) if p.entity]
    return MatchEnum.partial if set(mentions) <= set(spans) else MatchEnum.none


def skeleton_metrics(runs: Sequence[RunRecord], corpus: Sequence[GroundTruthRecord]) -> SkeletonEvalResult:
    """Recall of gold interpretation skeletons by retained segmentations, plus precision and F1."""
    if not runs:
        raise ValueError("Cannot evaluate an empty run")
    recall: dict[tuple[MatchEnum, bool], list[float]] = defaultdict(list)
    precision: dict[MatchEnum, list[float]] = defaultdict(list)
    for run, record in _index(runs, corpus):
        table = [[_skeleton_match(s, g) for g in record.interpretations] for s in run.skeletons]
        for kind in (MatchEnum.complete, MatchEnum.partial):
            hit = [[MATCH_ORDER[m] >= MATCH_ORDER[kind] for m in row] for row in table]
            for better in (False, True):
                cols = [c for c, g in enumerate(record.interpretations) if not better or g.grade >= 2]
                if cols:
                    recall[kind, better].append(sum(any(row[c] for row in hit) for c in cols) / len(cols))
            precision[kind].append(sum(any(row) for row in hit) / len(hit) if hit else 0.0)

    cp, pp = _mean(precision[MatchEnum.complete]), _mean(precision[MatchEnum.partial])
    csa, psa = _mean(recall[MatchEnum.complete, False]), _mean(recall[MatchEnum.partial, False])
    return SkeletonEvalResult(
        csa=csa,
        csb=_mean(recall[MatchEnum.complete, True]),
        psa=psa,
        psb=_mean(recall[MatchEnum.partial, True]),
        complete_precision=cp,
        partial_precision=pp,
        complete_f1=_f1(cp, csa),
        partial_f1=_f1(pp, psa),
        queries=len(runs),
    )


def baseline_top1(
    candidates: CandidateSet,
    snapshot: KnowledgeSnapshot,
    query: Query,
    weighting: str = "wiki",
    ) -> Interpretation:
    """One interpretation: the top skeleton with each segment linked to its most common entity."""
    skeleton = filter_skeletons(rank_segmentations(snapshot, query, weighting), 1.0).retained[0]
    parts = []
    for seg in skeleton.segments:
        scored = [(_commonness(snapshot, seg.text, c.entity), c.entity) for c in candidates.get(seg)]
        best = min(((-cmn, e) for cmn, e in scored if cmn > 0), default=None)
        parts.append(LinkedSegment(seg, best[1] if best else None))
    return rate(snapshot, Interpretation(tuple(parts)), ScoringWeights())


def load_run(path: Path) -> list[RunRecord]:
    """Read a line-delimited run file."""
    runs = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            runs.append(RunRecord.model_validate_json(line))
        except ValidationError as e:
            raise ValueError(f"{path}:{lineno}: invalid run record: {e.errors()[0]['msg']}") from e
    return runs


def gold_entities(record: GroundTruthRecord, all_kinds: bool = False) -> dict[str, int]:
    """Gold entity -> relevance; explicit entities only unless all_kinds."""
    gold: dict[str, int] = {}
    for ent in record.entities:
        if all_kinds or ent.kind == EntityKindEnum.explicit:
            gold[ent.entity] = max(gold.get(ent.entity, 0), ent.relevance)
    return gold


def predicted_entities(run: RunRecord) -> set[str]:
    """The run's linking-phase entity set, or the entities its interpretations link."""
    if run.entities is not None:
        return set(run.entities)
    return {p.entity for i in run.interpretations for p in i.parts if p.entity}


def entity_evaluation(
    runs: Sequence[RunRecord],
    corpus: Sequence[GroundTruthRecord],
    all_kinds: bool = False,
    ) -> EntityEvalResult:
    """Micro and macro entity metrics of a run against the corpus gold entities."""
    pairs = _index(runs, corpus)
    return aggregate([entity_metrics(predicted_entities(run), gold_entities(rec, all_kinds)) for run, rec in pairs])
