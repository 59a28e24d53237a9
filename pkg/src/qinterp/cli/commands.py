"""CLI command implementations"""

import json
import logging
import sys
from pathlib import Path
from typing import Annotated, NoReturn, Optional

import typer
from sqlalchemy.exc import SQLAlchemyError

from qinterp.cli.server import serve
from qinterp.config import Settings, load_config
from qinterp.core.corpus import GroundTruthRecord, load_corpus, split_corpus
from qinterp.core.evaluation import (
    SkeletonEvalResult, baseline_top1, entity_evaluation, interpretation_metrics, load_run, skeleton_metrics,
)
from qinterp.core.export import (
    candidate_records, format_table, result_payload, segmentation_records,
)
from qinterp.core.interpreter import interpret
from qinterp.core.linker import candidate_entities, link_phase, skeletons
from qinterp.core.models import InterpretResult, QueryError, Timings
from qinterp.core.pipeline import (
    no_segmentation_baseline, read_queries, run_bench, run_corpus, tune_threshold, write_jsonl, write_split,
)
from qinterp.core.segmentation import tokenize
from qinterp.kb.ingest import SOURCE_FILES, ingest_snapshot, load_snapshot
from qinterp.kb.snapshot import KnowledgeSnapshot


KbOpt = Annotated[Optional[str], typer.Option("--kb", help="Snapshot or source directory [env QINTERP_KB]")]
ThresholdOpt = Annotated[Optional[float], typer.Option("--threshold", help="Skeleton score-ratio threshold")]
DepthOpt = Annotated[Optional[int], typer.Option("--depth", help="Fuzzy lookup depth; 0 disables")]
WeightingOpt = Annotated[Optional[str], typer.Option("--weighting", help="Segment weighting: wiki or frequency")]
AlphaOpt = Annotated[Optional[float], typer.Option("--alpha", help="Commonness weight")]
BetaOpt = Annotated[Optional[float], typer.Option("--beta", help="Relatedness weight")]
GammaOpt = Annotated[Optional[float], typer.Option("--gamma", help="Context weight")]
TopKOpt = Annotated[Optional[int], typer.Option("--top-k", help="Max interpretations; 0 = all")]
CombosOpt = Annotated[Optional[int], typer.Option("--max-combinations", help="Cartesian cap per skeleton")]
PrettyOpt = Annotated[bool, typer.Option("--pretty", help="Human-readable tables instead of JSON lines")]
CorpusOpt = Annotated[Path, typer.Option("--corpus", help="Line-delimited corpus file")]
IdsOpt = Annotated[Optional[Path], typer.Option("--ids", help="Restrict to record ids listed in this file")]

DEFAULT_THRESHOLDS = [round(0.40 + 0.02 * i, 2) for i in range(26)]


def _fail(msg: str, cause: Exception | None = None) -> NoReturn:
    """Print a user-friendly error to stderr and exit 1."""
    typer.echo(f"Error: {msg}", err=True)
    if cause:
        typer.echo(f"  {cause}", err=True)
    raise typer.Exit(1)


def _settings(overrides: dict | None = None) -> Settings:
    """Load config with standard CLI error handling and route logging to stderr."""
    try:
        settings = load_config(overrides=overrides)
        logging.basicConfig(
            level=settings.log_level.upper(), stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
    except ValueError as e:
        _fail(str(e))
    return settings


def _snapshot(settings: Settings) -> KnowledgeSnapshot:
    try:
        return load_snapshot(Path(settings.kb))
    except (OSError, ValueError, SQLAlchemyError) as e:
        _fail(f"Cannot load knowledge base {settings.kb}", e)


def _corpus(path: Path, ids: Path | None = None) -> list[GroundTruthRecord]:
    """Load the corpus, optionally keeping only the ids listed in a split file."""
    try:
        records = load_corpus(path)
        if ids:
            keep = set(read_queries(ids))
            records = [r for r in records if r.id in keep]
    except (OSError, ValueError) as e:
        _fail(f"Cannot load corpus {path}", e)
    if not records:
        _fail(f"No corpus records selected from {path}")
    return records


def _echo_records(records: list, pretty: bool, headers: list[str], row) -> None:
    if pretty:
        typer.echo(format_table(headers, [row(r) for r in records]))
    else:
        for r in records:
            typer.echo(r.model_dump_json())


def ingest_cmd(
    source: Annotated[Path, typer.Argument(help="Directory with aliases.tsv, anchors.tsv, ngrams.tsv, embeddings.txt")],
    out: Annotated[Path, typer.Option("--out", help="Snapshot output directory")],
    aliases: Annotated[Optional[Path], typer.Option("--aliases", help="Alias file override")] = None,
    anchors: Annotated[Optional[Path], typer.Option("--anchors", help="Anchor file override")] = None,
    ngrams: Annotated[Optional[Path], typer.Option("--ngrams", help="N-gram file override")] = None,
    embeddings: Annotated[Optional[Path], typer.Option("--embeddings", help="Embedding file override")] = None,
    ):
    """Parse the source files and persist an immutable snapshot."""
    _settings()
    given = {"aliases": aliases, "anchors": anchors, "ngrams": ngrams, "embeddings": embeddings}
    paths = {name: given[name] or source / filename for name, filename in SOURCE_FILES.items()}
    for name, p in paths.items():
        if not p.exists():
            _fail(f"Missing {name} file: {p}")
    try:
        snapshot = ingest_snapshot(paths["aliases"], paths["anchors"], paths["ngrams"], paths["embeddings"], out)
    except (OSError, ValueError) as e:
        _fail("Ingestion failed", e)
    counts = snapshot.counts()
    typer.echo(f"Ingested snapshot to {out}/ - " + ", ".join(f"{n} {k}" for k, n in counts.items()))


def segment_cmd(
    query: Annotated[str, typer.Argument(help="Keyword query")],
    kb: KbOpt = None,
    threshold: ThresholdOpt = None,
    weighting: WeightingOpt = None,
    pretty: PrettyOpt = False,
    ):
    """Rank all segmentations of a query and show which survive as skeletons."""
    settings = _settings(overrides={"kb": kb, "threshold": threshold, "weighting": weighting})
    snapshot = _snapshot(settings)
    try:
        result = skeletons(snapshot, tokenize(query), settings)
    except QueryError as e:
        _fail(str(e))
    _echo_records(
        segmentation_records(result), pretty,
        ["Rank", "Segmentation", "Score", "Ratio", "Decision"],
        lambda r: [r.rank, r.segmentation, r.score, r.ratio, r.decision],
    )


def link_cmd(
    query: Annotated[str, typer.Argument(help="Keyword query")],
    kb: KbOpt = None,
    depth: DepthOpt = None,
    pretty: PrettyOpt = False,
    ):
    """List candidate entities for every segment of a query."""
    settings = _settings(overrides={"kb": kb, "depth": depth})
    snapshot = _snapshot(settings)
    try:
        candidates = candidate_entities(snapshot, tokenize(query, settings.max_terms), settings.depth)
    except QueryError as e:
        _fail(str(e))
    _echo_records(
        candidate_records(candidates), pretty,
        ["Segment", "Entity", "Match", "Lexical"],
        lambda r: [r.segment, r.entity, r.match, r.lexical_score],
    )


def interpret_cmd(
    query: Annotated[str, typer.Argument(help="Keyword query")],
    kb: KbOpt = None,
    threshold: ThresholdOpt = None,
    depth: DepthOpt = None,
    weighting: WeightingOpt = None,
    alpha: AlphaOpt = None,
    beta: BetaOpt = None,
    gamma: GammaOpt = None,
    top_k: TopKOpt = None,
    combos: CombosOpt = None,
    baseline: Annotated[bool, typer.Option("--baseline", help="Single top-commonness interpretation")] = False,
    pretty: PrettyOpt = False,
    ):
    """Segment, link, and rank interpretations of a query."""
    settings = _settings(overrides={
        "kb": kb, "threshold": threshold, "depth": depth, "weighting": weighting,
        "alpha": alpha, "beta": beta, "gamma": gamma, "top_k": top_k, "max_combinations": combos,
    })
    snapshot = _snapshot(settings)
    try:
        if baseline:
            q = tokenize(query, settings.max_terms)
            found, candidates = link_phase(snapshot, q, settings)
            top = baseline_top1(candidates, snapshot, q, settings.weighting)
            result = InterpretResult(q, found, candidates, (top,), Timings())
        else:
            result = interpret(snapshot, query, settings)
    except QueryError as e:
        _fail(str(e))

    payload = result_payload(result)
    if not pretty:
        typer.echo(payload.model_dump_json())
        return
    typer.echo(format_table(
        ["Rank", "Interpretation", "Segmentation", "Score"],
        [[i, p.interpretation, p.segmentation, p.score] for i, p in enumerate(payload.interpretations, start=1)],
    ))
    t = payload.timings
    typer.echo(
        f"{len(payload.interpretations)} interpretation(s) in {t.total_ms:.2f} ms "
        f"(segmentation {t.segmentation_ms:.2f}, linking {t.linking_ms:.2f}, combination {t.combination_ms:.2f})"
    )
    if payload.truncated:
        typer.echo("Warning: combinations truncated at --max-combinations", err=True)


def run_cmd(
    corpus: CorpusOpt,
    out: Annotated[Path, typer.Option("--out", help="Run file to write")],
    ids: IdsOpt = None,
    kb: KbOpt = None,
    threshold: ThresholdOpt = None,
    depth: DepthOpt = None,
    alpha: AlphaOpt = None,
    beta: BetaOpt = None,
    gamma: GammaOpt = None,
    top_k: TopKOpt = None,
    baseline: Annotated[bool, typer.Option("--baseline", help="Single top-commonness interpretation")] = False,
    ):
    """Interpret every corpus query into a line-delimited run file."""
    settings = _settings(overrides={
        "kb": kb, "threshold": threshold, "depth": depth,
        "alpha": alpha, "beta": beta, "gamma": gamma, "top_k": top_k,
    })
    records = _corpus(corpus, ids)
    snapshot = _snapshot(settings)
    try:
        runs = run_corpus(snapshot, records, settings, baseline)
    except RuntimeError as e:
        _fail(str(e))
    n = write_jsonl(runs, out)
    typer.echo(f"Wrote {n} run record(s) to {out}")


def evaluate_cmd(
    corpus: CorpusOpt,
    run: Annotated[Path, typer.Option("--run", help="Run file produced by 'qinterp run'")],
    min_grade: Annotated[Optional[int], typer.Option("--min-grade", help="Min gold interpretation grade")] = None,
    top_k: Annotated[Optional[int], typer.Option("--top-k", help="Evaluate only the first k interpretations; 0 = all")] = None,
    all_kinds: Annotated[bool, typer.Option("--all-kinds", help="Include implicit gold entities")] = False,
    pretty: PrettyOpt = False,
    ):
    """Score a run file: entity, interpretation, and skeleton metrics."""
    settings = _settings(overrides={"min_grade": min_grade, "top_k": top_k})
    records = _corpus(corpus)
    try:
        runs = load_run(run)
        entities = entity_evaluation(runs, records, all_kinds)
        interps = interpretation_metrics(runs, records, settings.min_grade, settings.top_k)
        skel = skeleton_metrics(runs, records) if any(r.skeletons for r in runs) else None
    except (OSError, ValueError) as e:
        _fail("Evaluation failed", e)

    if not pretty:
        typer.echo(json.dumps({
            "entities": entities.model_dump(),
            "interpretations": interps.model_dump(),
            "skeletons": skel.model_dump() if skel else None,
        }))
        return
    e = entities
    typer.echo(format_table(
        ["MicR", "MicR*", "MacR", "MacR*", "MicP", "MacP"],
        [[e.micro_rec, e.micro_rec_star, e.macro_rec, e.macro_rec_star, e.micro_prec, e.macro_prec]],
    ))
    typer.echo("")
    latency = f"{interps.latency_ms:.2f}" if interps.latency_ms is not None else "-"
    typer.echo(format_table(
        ["Match", "R", "R*", "P", "F1", "Time (ms)"],
        [[name, s.recall, s.weighted_recall, s.precision, s.f1, latency]
         for name, s in (("partial", interps.partial), ("complete", interps.complete))],
    ))
    if skel:
        typer.echo("")
        typer.echo(format_table(
            ["CSA", "CSB", "PSA", "PSB", "P (complete)", "P (partial)"],
            [[skel.csa, skel.csb, skel.psa, skel.psb, skel.complete_precision, skel.partial_precision]],
        ))
    typer.echo(f"{interps.queries} quer(y/ies) evaluated, {interps.skipped} without gold at grade >= {settings.min_grade}")


def split_cmd(
    corpus: CorpusOpt,
    out: Annotated[Path, typer.Option("--out", help="Directory for train.txt, test.txt, manifest.json")],
    seed: Annotated[Optional[int], typer.Option("--seed", help="Random seed")] = None,
    ratio: Annotated[Optional[float], typer.Option("--ratio", help="Target train share")] = None,
    error_threshold: Annotated[Optional[float], typer.Option("--error-threshold", help="Distribution error to stop at")] = None,
    max_iters: Annotated[Optional[int], typer.Option("--max-iters", help="Hill-climbing iteration budget")] = None,
    ):
    """Split the corpus into train/test without splitting any cluster."""
    settings = _settings(overrides={
        "seed": seed, "ratio": ratio, "error_threshold": error_threshold, "max_iters": max_iters,
    })
    records = _corpus(corpus)
    try:
        split = split_corpus(records, settings.ratio, settings.error_threshold, settings.seed, settings.max_iters)
    except ValueError as e:
        _fail("Split failed", e)
    write_split(split, out)
    status = "converged" if split.converged else "not converged"
    typer.echo(
        f"Split {len(records)} record(s): {len(split.train)} train, {len(split.test)} test, "
        f"error {split.error:.4f} ({status} after {split.iterations} iteration(s)) -> {out}/"
    )


def tune_cmd(
    corpus: CorpusOpt,
    ids: IdsOpt = None,
    kb: KbOpt = None,
    weighting: WeightingOpt = None,
    thresholds: Annotated[Optional[str], typer.Option("--thresholds", help="Comma-separated thresholds to try")] = None,
    no_seg: Annotated[bool, typer.Option("--no-segmentation", help="Also report the one-term-per-segment baseline")] = False,
    pretty: PrettyOpt = False,
    ):
    """Sweep the skeleton threshold and report skeleton recall, precision, and F1."""
    settings = _settings(overrides={"kb": kb, "weighting": weighting})
    try:
        grid = [float(t) for t in thresholds.split(",")] if thresholds else DEFAULT_THRESHOLDS
    except ValueError as e:
        _fail(f"Invalid --thresholds {thresholds!r}", e)
    records = _corpus(corpus, ids)
    snapshot = _snapshot(settings)
    try:
        results = tune_threshold(snapshot, records, grid, settings.weighting)
        baseline = no_segmentation_baseline(records) if no_seg else None
    except ValueError as e:
        _fail("Threshold sweep failed", e)

    rows: list[tuple[float | None, SkeletonEvalResult]] = [*results, *([(None, baseline)] if baseline else [])]
    if pretty:
        typer.echo(format_table(
            ["Threshold", "CSA", "PSA", "P (complete)", "F1 (complete)", "F1 (partial)"],
            [[t if t is not None else "none", r.csa, r.psa, r.complete_precision, r.complete_f1, r.partial_f1]
             for t, r in rows],
        ))
    else:
        for t, r in rows:
            label = {"threshold": t} if t is not None else {"threshold": None, "baseline": "no-segmentation"}
            typer.echo(json.dumps({**label, **r.model_dump()}))
    best = max(results, key=lambda tr: (tr[1].complete_f1, -tr[0]))
    typer.echo(f"Best threshold {best[0]} (complete F1 {best[1].complete_f1:.3f})", err=True)


def serve_cmd(
    kb: KbOpt = None,
    address: Annotated[Optional[str], typer.Option("--address", help="host:port to bind")] = None,
    threshold: ThresholdOpt = None,
    depth: DepthOpt = None,
    alpha: AlphaOpt = None,
    beta: BetaOpt = None,
    gamma: GammaOpt = None,
    top_k: TopKOpt = None,
    ):
    """Serve GET /interpret?q=... and GET /health over one loaded snapshot."""
    settings = _settings(overrides={
        "kb": kb, "address": address, "threshold": threshold, "depth": depth,
        "alpha": alpha, "beta": beta, "gamma": gamma, "top_k": top_k,
    })
    snapshot = _snapshot(settings)
    try:
        serve(snapshot, settings)
    except OSError as e:
        _fail(f"Cannot bind {settings.address}", e)


def bench_cmd(
    query_file: Annotated[Path, typer.Argument(help="File with one query per line")],
    repetitions: Annotated[int, typer.Option("--repetitions", min=1, help="Timed passes over the queries")] = 1,
    kb: KbOpt = None,
    threshold: ThresholdOpt = None,
    depth: DepthOpt = None,
    alpha: AlphaOpt = None,
    beta: BetaOpt = None,
    gamma: GammaOpt = None,
    pretty: PrettyOpt = False,
    ):
    """Measure interpret() latency per query after a warm-up pass."""
    settings = _settings(overrides={
        "kb": kb, "threshold": threshold, "depth": depth, "alpha": alpha, "beta": beta, "gamma": gamma,
    })
    try:
        queries = read_queries(query_file)
    except (OSError, ValueError) as e:
        _fail(f"Cannot read queries from {query_file}", e)
    snapshot = _snapshot(settings)
    try:
        report = run_bench(snapshot, settings, queries, repetitions)
    except ValueError as e:
        _fail("Benchmark failed", e)

    if not pretty:
        typer.echo(report.model_dump_json())
        return
    typer.echo(format_table(
        ["Query", "Mean (ms)", "Top interpretation"],
        [[q.query, q.mean_ms, q.top] for q in report.per_query],
    ))
    phases = ", ".join(f"{k.removesuffix('_ms')} {v:.2f}" for k, v in report.phases.items())
    typer.echo(
        f"{report.queries} quer(y/ies) x {report.repetitions}: mean {report.mean_ms:.2f} ms, "
        f"p50 {report.p50_ms:.2f} ms, p95 {report.p95_ms:.2f} ms ({phases})"
    )
