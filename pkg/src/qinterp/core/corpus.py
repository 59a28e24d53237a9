"""Query-interpretation corpus: record schema, loading, and cluster-respecting splits"""

import json
import logging
import random
from collections import Counter, defaultdict
from collections.abc import Sequence
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, ValidationError, model_validator

from qinterp.core.utils.normalize import normalize


LENGTH_CAP = 8   # lengths 8 and above share one bucket

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """A corpus record that violates the schema; message names line, record, and field."""


class CategoryEnum(str, Enum):
    categorical = "categorical"
    conceptual  = "conceptual"
    question    = "question"
    relational  = "relational"
    surface     = "surface"


class EntityKindEnum(str, Enum):
    explicit = "explicit"
    implicit = "implicit"


class Part(BaseModel):
    """One segment of an interpretation, optionally linked to an entity."""
    text: str = Field(..., min_length=1)
    entity: str | None = None


class GroundTruthEntity(BaseModel):
    span: tuple[int, int] | None = None   # inclusive term indices
    entity: str = Field(..., min_length=1)
    kind: EntityKindEnum = EntityKindEnum.explicit
    relevance: int = Field(..., ge=1, le=2)


class GroundTruthInterpretation(BaseModel):
    parts: list[Part] = Field(..., min_length=1)
    grade: int = Field(..., ge=1, le=3)
    equivalence_class: int


class GroundTruthRecord(BaseModel):
    """A corpus query with graded entities and graded interpretations."""
    id: str = Field(..., min_length=1)
    query: str = Field(..., min_length=1)
    category: CategoryEnum
    difficulty: int = Field(..., ge=1, le=5)
    cluster: str = Field(..., min_length=1)
    entities: list[GroundTruthEntity] = []
    interpretations: list[GroundTruthInterpretation] = Field(..., min_length=1)

    @property
    def terms(self) -> list[str]:
        return normalize(self.query).split()

    @model_validator(mode="after")
    def _check_segments(self) -> "GroundTruthRecord":
        """Interpretation parts must concatenate to the query; spans must lie inside it."""
        terms = self.terms
        for interp in self.interpretations:
            if [t for p in interp.parts for t in normalize(p.text).split()] != terms:
                raise ValueError("interpretation parts do not concatenate to the query")
        for ent in self.entities:
            if ent.span and not 0 <= ent.span[0] <= ent.span[1] < len(terms):
                raise ValueError(f"entity span {ent.span} outside the query")
        return self


class Split(BaseModel):
    train: list[str]
    test: list[str]
    error: float
    ratio: float
    seed: int
    iterations: int
    converged: bool
    accepted: list[float] = Field(default_factory=list, exclude=True)  # start error, then one per accepted swap


def load_corpus(path: Path) -> list[GroundTruthRecord]:
    """Read line-delimited JSON records, validating every record and id uniqueness."""
    records: list[GroundTruthRecord] = []
    ids: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = GroundTruthRecord.model_validate_json(line)
        except ValidationError as e:
            err = e.errors()[0]
            field = ".".join(str(p) for p in err["loc"]) or "record"
            try:
                rid = json.loads(line).get("id")
            except (ValueError, AttributeError):
                rid = None
            raise CorpusError(f"{path}:{lineno}: record {rid!r}: {field}: {err['msg']}") from e
        if record.id in ids:
            raise CorpusError(f"{path}:{lineno}: duplicate record id {record.id!r}")
        ids.add(record.id)
        records.append(record)
    return records


def _features(record: GroundTruthRecord) -> tuple[str, str]:
    """Distribution features: query category and bucketed query length."""
    n = len(record.terms)
    return record.category.value, f"{LENGTH_CAP}+" if n >= LENGTH_CAP else str(n)


def _tally(records: Sequence[GroundTruthRecord]) -> list[Counter[str]]:
    counts: list[Counter[str]] = [Counter(), Counter()]
    for r in records:
        for counter, value in zip(counts, _features(r)):
            counter[value] += 1
    return counts


def _error(side: list[Counter[str]], side_n: int, whole: list[Counter[str]], whole_n: int) -> float:
    """Sum over features and values of |side share - whole share| for one side."""
    total = 0.0
    for side_counts, whole_counts in zip(side, whole):
        for value in whole_counts.keys() | side_counts.keys():
            side_p = side_counts[value] / side_n if side_n else 0.0
            total += abs(side_p - whole_counts[value] / whole_n)
    return total


def split_error(
    train: Sequence[GroundTruthRecord],
    test: Sequence[GroundTruthRecord],
    whole: Sequence[GroundTruthRecord],
    ) -> float:
    """Distribution error of a split: both sides, both features, all feature values."""
    whole_counts = _tally(whole)
    return sum(_error(_tally(side), len(side), whole_counts, len(whole)) for side in (train, test))


def split_corpus(
    records: Sequence[GroundTruthRecord],
    ratio: float = 0.8,
    error_threshold: float = 0.05,
    seed: int = 42,
    max_iters: int = 100_000,
    band: float = 0.02,
    ) -> Split:
    """Hill-climb a cluster-respecting train/test split toward the corpus distributions.

    Starts from a seeded random assignment of whole clusters near ratio, then swaps one
    random train cluster with one random test cluster, accepting swaps that do not raise
    the error and do not push the train share further outside ratio +/- band.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"Split ratio must be in (0, 1), got {ratio}")
    if not records:
        raise ValueError("Cannot split an empty corpus")

    rng = random.Random(seed)
    clusters: dict[str, list[GroundTruthRecord]] = defaultdict(list)
    for r in records:
        clusters[r.cluster].append(r)
    names = sorted(clusters)
    rng.shuffle(names)
    tallies = {name: _tally(clusters[name]) for name in names}
    sizes = {name: len(clusters[name]) for name in names}

    n, target = len(records), ratio * len(records)
    train_names: list[str] = []
    test_names: list[str] = []
    size = 0
    for name in names:
        if abs(size + sizes[name] - target) < abs(size - target):
            train_names.append(name)
            size += sizes[name]
        else:
            test_names.append(name)

    whole = _tally(records)
    train = [sum((tallies[c][f] for c in train_names), Counter()) for f in range(2)]

    def error_of(counts: list[Counter[str]], train_n: int) -> float:
        test_counts = [w - c for w, c in zip(whole, counts)]
        return _error(counts, train_n, whole, n) + _error(test_counts, n - train_n, whole, n)

    current = error_of(train, size)
    accepted = [current]
    iterations = 0
    while current > error_threshold and iterations < max_iters and train_names and test_names:
        iterations += 1
        i, j = rng.randrange(len(train_names)), rng.randrange(len(test_names))
        a, b = train_names[i], test_names[j]
        new_size = size - sizes[a] + sizes[b]
        drift = abs(new_size / n - ratio)
        if drift > band and drift > abs(size / n - ratio):
            continue
        candidate = [train[f] - tallies[a][f] + tallies[b][f] for f in range(2)]
        err = error_of(candidate, new_size)
        if err <= current:
            train_names[i], test_names[j] = b, a
            train, size, current = candidate, new_size, err
            accepted.append(err)

    converged = current <= error_threshold
    if not converged:
        logger.warning("Split error %.4f above threshold %.4f after %d iterations", current, error_threshold, iterations)
    in_train = set(train_names)
    return Split(
        train=sorted(r.id for r in records if r.cluster in in_train),
        test=sorted(r.id for r in records if r.cluster not in in_train),
        error=current,
        ratio=ratio,
        seed=seed,
        iterations=iterations,
        converged=converged,
        accepted=accepted,
    )
