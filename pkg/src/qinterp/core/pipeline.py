"""Batch step functions: corpus runs, latency benchmarks, threshold sweeps, and split files"""

import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from time import perf_counter

import numpy as np
from pydantic import BaseModel

from qinterp.config import Settings
from qinterp.core.corpus import GroundTruthRecord, Split
from qinterp.core.evaluation import RunInterpretation, RunRecord, SkeletonEvalResult, baseline_top1, skeleton_metrics
from qinterp.core.export import run_parts
from qinterp.core.interpreter import interpret
from qinterp.core.linker import link_phase
from qinterp.core.segmentation import filter_skeletons, no_segmentation, rank_segmentations, tokenize
from qinterp.kb.snapshot import KnowledgeSnapshot


logger = logging.getLogger(__name__)


class BenchQuery(BaseModel):
    query: str
    mean_ms: float
    top: str = ""               # best interpretation; stable across runs


class BenchReport(BaseModel):
    queries: int
    repetitions: int
    mean_ms: float
    p50_ms: float
    p95_ms: float
    phases: dict[str, float]    # mean ms per phase
    per_query: list[BenchQuery]


def _run_record(snapshot: KnowledgeSnapshot, record: GroundTruthRecord, settings: Settings, baseline: bool) -> RunRecord:
    start = perf_counter()
    if baseline:
        query = tokenize(record.query, settings.max_terms)
        skeletons, candidates = link_phase(snapshot, query, settings)
        top = baseline_top1(candidates, snapshot, query, settings.weighting)
        interps = (top,)
        entities = sorted(set(top.entities))
    else:
        result = interpret(snapshot, record.query, settings)
        skeletons, interps = result.skeletons, result.interpretations
        entities = sorted(result.candidates.entities())
    return RunRecord(
        query_id=record.id,
        query=record.query,
        interpretations=[RunInterpretation(parts=run_parts(i), score=i.score) for i in interps],
        skeletons=[str(s) for s in skeletons.retained],
        entities=entities,
        latency_ms=(perf_counter() - start) * 1000.0,
    )


def run_corpus(
    snapshot: KnowledgeSnapshot,
    records: Sequence[GroundTruthRecord],
    settings: Settings,
    baseline: bool = False,
    ) -> list[RunRecord]:
    """Interpret every corpus query (or apply the top-commonness baseline) into run records.

    The entity set of a run record is every candidate of the linking phase, or the
    baseline's linked entities.
    """
    runs = []
    for record in records:
        try:
            runs.append(_run_record(snapshot, record, settings, baseline))
        except Exception as e:
            raise RuntimeError(f"Failed to interpret {record.id}: {e}") from e
    return runs


def write_jsonl(records: Iterable[BaseModel], path: Path) -> int:
    """Write one JSON object per line. Returns the number of records."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [r.model_dump_json() for r in records]
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return len(lines)


def read_queries(path: Path) -> list[str]:
    """Non-blank lines of a query file."""
    queries = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not queries:
        raise ValueError(f"Query file {path} is empty")
    return queries


def run_bench(
    snapshot: KnowledgeSnapshot,
    settings: Settings,
    queries: Sequence[str],
    repetitions: int = 1,
    ) -> BenchReport:
    """Latency of interpret() per query after one untimed warm-up pass."""
    if not queries:
        raise ValueError("Benchmark needs at least one query")
    if repetitions < 1:
        raise ValueError(f"Repetitions must be >= 1, got {repetitions}")

    tops = {}
    for q in queries:
        result = interpret(snapshot, q, settings)
        tops[q] = str(result.interpretations[0]) if result.interpretations else ""

    samples: dict[str, list[float]] = {q: [] for q in queries}
    phases: dict[str, list[float]] = {"segmentation_ms": [], "linking_ms": [], "combination_ms": []}
    for _ in range(repetitions):
        for q in queries:
            t = interpret(snapshot, q, settings).timings
            samples[q].append(t.total_ms)
            phases["segmentation_ms"].append(t.segmentation_ms)
            phases["linking_ms"].append(t.linking_ms)
            phases["combination_ms"].append(t.combination_ms)

    latencies = np.array([v for vs in samples.values() for v in vs])
    p50, p95 = np.percentile(latencies, [50, 95])
    return BenchReport(
        queries=len(samples),
        repetitions=repetitions,
        mean_ms=float(latencies.mean()),
        p50_ms=float(p50),
        p95_ms=float(p95),
        phases={name: float(np.mean(vals)) for name, vals in phases.items()},
        per_query=[BenchQuery(query=q, mean_ms=float(np.mean(samples[q])), top=tops[q]) for q in samples],
    )


def tune_threshold(
    snapshot: KnowledgeSnapshot,
    records: Sequence[GroundTruthRecord],
    thresholds: Sequence[float],
    weighting: str = "wiki",
    ) -> list[tuple[float, SkeletonEvalResult]]:
    """Skeleton metrics at each threshold, ranking every query once."""
    ranked = {r.id: rank_segmentations(snapshot, tokenize(r.query), weighting) for r in records}
    results = []
    for threshold in thresholds:
        runs = [
            RunRecord(query_id=rid, skeletons=[str(s) for s in filter_skeletons(segs, threshold).retained])
            for rid, segs in ranked.items()
        ]
        results.append((threshold, skeleton_metrics(runs, records)))
        logger.info("threshold %.3f: complete F1 %.3f", threshold, results[-1][1].complete_f1)
    return results


def no_segmentation_baseline(records: Sequence[GroundTruthRecord]) -> SkeletonEvalResult:
    """Skeleton metrics when each query keeps only its one-term-per-segment segmentation."""
    runs = [RunRecord(query_id=r.id, skeletons=[str(no_segmentation(tokenize(r.query)))]) for r in records]
    return skeleton_metrics(runs, records)


def write_split(split: Split, out_dir: Path) -> tuple[Path, Path, Path]:
    """Write train.txt and test.txt (one id per line) plus manifest.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test, manifest = out_dir / "train.txt", out_dir / "test.txt", out_dir / "manifest.json"
    train.write_text("".join(f"{i}\n" for i in split.train), encoding="utf-8")
    test.write_text("".join(f"{i}\n" for i in split.test), encoding="utf-8")
    meta = split.model_dump(exclude={"train", "test"}) | {"train_size": len(split.train), "test_size": len(split.test)}
    manifest.write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return train, test, manifest
