"""Integration tests for the ingest -> run -> evaluate pipeline.

Each test runs the pipeline against the shipped fixtures and checks either stable
expected values or an independent recomputation from the raw source files.

Fixtures
--------
    fixtures/tiny_kb/   aliases.tsv, anchors.tsv, ngrams.tsv, embeddings.txt (4-dim vectors)
    fixtures/mini/     corpus.jsonl (25 graded queries in 10 clusters), queries.txt

Stable values for "new york times square dance" with default settings:
    Skeletons:        new york times | square dance      (rank 1)
                      new york | times square | dance    (rank 3, ratio 0.671)
    Interpretations:  8 + 12 = 20
    Top:              New_York_City | Times_Square | dance    score ~1.90911
    Baseline:         The_New_York_Times | Square_Dance       score 0.9
"""

import math
from collections import defaultdict

import pytest

from qinterp.core.evaluation import entity_evaluation, interpretation_metrics, load_run, skeleton_metrics
from qinterp.core.pipeline import run_bench, run_corpus, write_jsonl
from qinterp.kb.ingest import ingest_snapshot, load_snapshot
from tests.conftest import MINI_QUERIES, TINY_KB_DIR


def _raw_anchors():
    counts = defaultdict(dict)
    for line in (TINY_KB_DIR / "anchors.tsv").read_text().splitlines():
        if line.strip():
            anchor, entity, count = line.split("\t")
            counts[anchor.strip().lower()][entity.strip()] = int(count)
    return counts


def _raw_vectors():
    lines = (TINY_KB_DIR / "embeddings.txt").read_text().splitlines()[1:]
    table = {}
    for line in lines:
        if line.strip():
            key, values = line.split("\t")
            table[key] = [float(v) for v in values.split()]
    return table


def _cos(a, b):
    na, nb = math.sqrt(sum(x * x for x in a)), math.sqrt(sum(x * x for x in b))
    return 0.0 if na == 0 or nb == 0 else sum(x * y for x, y in zip(a, b)) / (na * nb)


def _score(parts, anchors, vectors):
    """Score recomputed from the raw files: mean over links of CMN + REL + CXT."""
    linked = [(p.text, p.entity) for p in parts if p.entity]
    if not linked:
        return 0.0
    context = []
    for p in parts:
        if p.entity is None:
            words = [vectors[w] for w in p.text.split() if w in vectors]
            context.append([sum(c) / len(words) for c in zip(*words)] if words else None)
    total = 0.0
    for i, (text, entity) in enumerate(linked):
        row = anchors.get(text, {})
        cmn = row.get(entity, 0) / sum(row.values()) if sum(row.values()) else 0.0
        vec = vectors.get(f"ENTITY/{entity}")
        others = [vectors.get(f"ENTITY/{e}") for j, (_, e) in enumerate(linked) if j != i]
        rel = sum(_cos(vec, o) for o in others if o) / len(others) if vec and others else 0.0
        cxt = sum(_cos(vec, c) for c in context if c) / len(context) if vec and context else 0.0
        total += cmn + rel + cxt
    return total / len(linked)


@pytest.fixture(name="snapshot", scope="module")
def snapshot_fixture(tmp_path_factory):
    """Snapshot persisted by ingestion and reopened from disk."""
    out = tmp_path_factory.mktemp("kb")
    ingest_snapshot(*(TINY_KB_DIR / n for n in ("aliases.tsv", "anchors.tsv", "ngrams.tsv", "embeddings.txt")), out)
    return load_snapshot(out)


def test_run_scores_match_raw_files(snapshot, settings, mini_corpus):
    """Every interpretation score of every mini query matches the raw-file recomputation."""
    anchors, vectors = _raw_anchors(), _raw_vectors()
    for run in run_corpus(snapshot, mini_corpus, settings):
        scores = [i.score for i in run.interpretations]
        assert scores == sorted(scores, reverse=True)
        for interp in run.interpretations:
            assert interp.score == pytest.approx(_score(interp.parts, anchors, vectors), rel=1e-9, abs=1e-12)


def test_run_q01_stable_values(snapshot, settings, mini_corpus):
    """The worked query keeps its skeletons, count, and top interpretation."""
    [run] = run_corpus(snapshot, mini_corpus[:1], settings)
    assert run.skeletons == ["new york times | square dance", "new york | times square | dance"]
    assert len(run.interpretations) == 20
    assert run.interpretations[0].score == pytest.approx(1.90911, abs=1e-4)


def test_persisted_and_in_memory_agree(snapshot, tiny_kb, settings, mini_corpus):
    """A reopened snapshot interprets exactly like one built from sources in memory."""
    from_disk = run_corpus(snapshot, mini_corpus, settings)
    in_memory = run_corpus(tiny_kb, mini_corpus, settings)
    for a, b in zip(from_disk, in_memory):
        assert a.model_dump(exclude={"latency_ms"}) == b.model_dump(exclude={"latency_ms"})


def test_full_run_dominates_baseline(tmp_path, snapshot, settings, mini_corpus):
    """The baseline's single interpretation is among the full run's, so recall never drops."""
    full_path, base_path = tmp_path / "full.jsonl", tmp_path / "base.jsonl"
    write_jsonl(run_corpus(snapshot, mini_corpus, settings), full_path)
    write_jsonl(run_corpus(snapshot, mini_corpus, settings, baseline=True), base_path)
    full, base = load_run(full_path), load_run(base_path)

    for f, b in zip(full, base):
        keys = [[(p.text, p.entity) for p in i.parts] for i in f.interpretations]
        assert [(p.text, p.entity) for p in b.interpretations[0].parts] in keys

    full_i = interpretation_metrics(full, mini_corpus)
    base_i = interpretation_metrics(base, mini_corpus)
    assert full_i.complete.recall >= base_i.complete.recall
    assert full_i.partial.recall >= base_i.partial.recall
    assert base_i.complete.precision <= 1.0
    assert entity_evaluation(full, mini_corpus).micro_rec >= entity_evaluation(base, mini_corpus).micro_rec


def test_skeleton_metrics_bounds(snapshot, settings, mini_corpus):
    """Complete skeleton recall never exceeds partial; everything lies in [0, 1]."""
    result = skeleton_metrics(run_corpus(snapshot, mini_corpus, settings), mini_corpus)
    assert result.queries == 25
    assert 0.0 <= result.csa <= result.psa <= 1.0
    assert 0.0 <= result.csb <= result.psb <= 1.0
    assert result.complete_precision <= result.partial_precision


def _brute_metrics(runs, corpus, complete, min_grade=2):
    """Macro R, R*, P and F1 recomputed with plain loops over the run and gold records."""
    gold = {r.id: r for r in corpus}
    rows = []
    for run in runs:
        classes = {}
        for g in gold[run.query_id].interpretations:
            if g.grade >= min_grade:
                classes.setdefault(g.equivalence_class, []).append(g)
        if not classes:
            continue

        def hits(pred, members):
            for g in members:
                if complete:
                    same = [(p.text.lower(), p.entity) for p in pred.parts] == [(q.text.lower(), q.entity) for q in g.parts]
                else:
                    same = sorted(p.entity for p in pred.parts if p.entity) == sorted(q.entity for q in g.parts if q.entity)
                if same:
                    return True
            return False

        found = [c for c, members in classes.items() if any(hits(p, members) for p in run.interpretations)]
        grades = {c: max(g.grade for g in members) for c, members in classes.items()}
        matched = [p for p in run.interpretations if any(hits(p, m) for m in classes.values())]
        rows.append((
            len(found) / len(classes),
            sum(grades[c] for c in found) / sum(grades.values()),
            len(matched) / len(run.interpretations) if run.interpretations else 0.0,
        ))
    r, w, p = (sum(row[i] for row in rows) / len(rows) for i in range(3))
    return r, w, p, (2 * p * r / (p + r) if p + r else 0.0)


@pytest.mark.parametrize("baseline", [False, True])
def test_interpretation_metrics_match_brute_force(snapshot, settings, mini_corpus, baseline):
    """Pipeline R, R*, P, F1 equal a loop-by-loop recomputation, for both match kinds."""
    runs = run_corpus(snapshot, mini_corpus, settings, baseline=baseline)
    result = interpretation_metrics(runs, mini_corpus)
    for scores, complete in ((result.complete, True), (result.partial, False)):
        expected = _brute_metrics(runs, mini_corpus, complete)
        got = (scores.recall, scores.weighted_recall, scores.precision, scores.f1)
        assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_latency_smoke(snapshot, settings):
    """At least 95% of 1,000 queries over the fixture finish under 100 ms, phases non-negative."""
    queries = [line for line in MINI_QUERIES.read_text().splitlines() if line.strip()] * 200
    report = run_bench(snapshot, settings.model_copy(update={"parallel": False}), queries)
    assert report.queries == len(set(queries))
    assert report.p95_ms < 100.0
    assert all(v >= 0.0 for v in report.phases.values())
