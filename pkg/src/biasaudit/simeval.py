"""Intrinsic embedding quality: word-pair similarity vs human judgments.

For each benchmark pair the model's cosine similarity is compared with the
human score; the rank correlation over all evaluable pairs is the result.
Pairs with out-of-vocabulary words are skipped but always counted, because
coverage differences silently break cross-model comparisons otherwise.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .corpus import Vocabulary
from .embeddings import EmbeddingSpace, cosine


class BenchmarkFormatError(ValueError):
    """Malformed benchmark file."""


@dataclass(frozen=True)
class SimilarityBenchmark:
    """Loaded benchmarks are never empty; derived subsets may be."""

    name: str
    pairs: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        seen = set()
        for w1, w2, score in self.pairs:
            if not np.isfinite(score):
                raise BenchmarkFormatError(f"{self.name}: non-finite score for ({w1}, {w2})")
            if (w1, w2) in seen:
                raise BenchmarkFormatError(f"{self.name}: duplicate pair ({w1}, {w2})")
            seen.add((w1, w2))


@dataclass(frozen=True)
class SimilarityResult:
    benchmark: str
    rho: float
    evaluated_pairs: int
    skipped_pairs: int

    def to_dict(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "rho": self.rho,
            "evaluated_pairs": self.evaluated_pairs,
            "skipped_pairs": self.skipped_pairs,
        }


def load_benchmark(path, format: str = "tab_separated", name: str | None = None) -> SimilarityBenchmark:
    """Parse a word1/word2/score file.

    ``tab_separated`` is the WordSim353-style layout; ``csv`` accepts
    comma-separated rows and falls back to whitespace-separated fields (the
    MEN distribution's layout). Lines starting with '#' are comments.
    """
    if format not in ("tab_separated", "csv"):
        raise ValueError(f"unknown benchmark format {format!r}")
    pairs: list[tuple[str, str, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if format == "tab_separated":
                fields = line.split("\t")
            else:
                fields = next(csv.reader(io.StringIO(line)))
                if len(fields) != 3:
                    fields = line.split()
            if len(fields) != 3:
                raise BenchmarkFormatError(f"{path}: line {lineno}: expected 3 fields, got {len(fields)}")
            w1, w2, raw = (f.strip() for f in fields)
            try:
                score = float(raw)
            except ValueError:
                raise BenchmarkFormatError(f"{path}: line {lineno}: non-numeric score {raw!r}")
            pairs.append((w1, w2, score))
    bench_name = name if name is not None else str(path)
    if not pairs:
        raise BenchmarkFormatError(f"{path}: benchmark file has no pairs")
    return SimilarityBenchmark(bench_name, tuple(pairs))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based); tied values share the mean of the ranks
    they occupy."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Rank correlation: Pearson correlation of average-ranked values.

    Errors on length mismatch, fewer than two points, or a constant input
    (the correlation is undefined there, and returning 0 or NaN silently
    would corrupt downstream tables).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d and of equal length")
    if x.shape[0] < 2:
        raise ValueError("need at least two points")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("rank correlation is undefined for constant input")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


def evaluate(space: EmbeddingSpace, benchmark: SimilarityBenchmark) -> SimilarityResult:
    """Spearman rho between model cosines and human scores over the pairs
    whose both words resolve in the space (exact or case-folded)."""
    model_scores, human_scores = [], []
    skipped = 0
    for w1, w2, human in benchmark.pairs:
        r1 = space.lookup(w1)
        r2 = space.lookup(w2)
        if r1.is_oov or r2.is_oov:
            skipped += 1
            continue
        model_scores.append(cosine(r1.vector, r2.vector))
        human_scores.append(human)
    if len(model_scores) < 2:
        raise ValueError(
            f"{benchmark.name}: only {len(model_scores)} evaluable pairs "
            f"({skipped} skipped as OOV); need at least 2"
        )
    rho = spearman(model_scores, human_scores)
    return SimilarityResult(benchmark.name, rho, len(model_scores), skipped)


def rare_token_subset(
    benchmark: SimilarityBenchmark, vocab: Vocabulary, k: int = 100
) -> SimilarityBenchmark:
    """Pairs in which at least one word is among the k least-used
    vocabulary tokens.

    The bottom-k set is ordered by (count ascending, token ascending) so
    boundary ties resolve deterministically. <unk> is an artificial
    aggregate and is never a candidate. Words are matched like lookups:
    exact, then case-folded. The subset may be empty; evaluation of an
    empty subset fails downstream with a clear message.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    candidates = sorted(
        ((c, t) for t, c in vocab.counts.items() if t != vocab.unk_token),
        key=lambda ct: (ct[0], ct[1]),
    )
    bottom = {t for _, t in candidates[:k]}
    folded = {t.casefold() for t in bottom}

    def is_rare(word: str) -> bool:
        return word in bottom or word.casefold() in folded

    kept = tuple(p for p in benchmark.pairs if is_rare(p[0]) or is_rare(p[1]))
    return SimilarityBenchmark(f"{benchmark.name}:rare{k}", kept)
