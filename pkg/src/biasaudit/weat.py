"""Word-association bias measures: effect sizes, permutation tests, deltas.

The core statistic compares two target groups (e.g. male/female terms)
against two attribute sets (e.g. career/family terms):

    delta(w) = mean_g cos(w, g) - mean_g~ cos(w, g~)
    effect   = (mean_{a in A} delta(a) - mean_{b in B} delta(b))
               / std_{w in A u B} delta(w)

with the sample standard deviation (n-1). Under that convention values
can marginally exceed the nominal [-2, 2] range; results are never
clamped, just flagged. Out-of-vocabulary words are removed and reported,
never imputed.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingSpace

DEFAULT_PERMUTATIONS = 10_000
EXACT_ENUMERATION_LIMIT = 10_000

LIST_FIELDS = ("targets_a", "targets_b", "attributes_a", "attributes_b")


class WeatSpecError(ValueError):
    """Invalid word-list specification."""


class WeatEvaluationError(ValueError):
    """Evaluation cannot proceed (emptied list, degenerate geometry)."""


@dataclass(frozen=True)
class WeatTestSpec:
    """Four word lists: two social-group target lists, two attribute lists."""

    name: str
    targets_a: tuple[str, ...]
    targets_b: tuple[str, ...]
    attributes_a: tuple[str, ...]
    attributes_b: tuple[str, ...]
    labels: dict = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self):
        for fname in LIST_FIELDS:
            words = getattr(self, fname)
            object.__setattr__(self, fname, tuple(words))
            words = getattr(self, fname)
            if not words:
                raise WeatSpecError(f"{self.name}: list {fname} is empty")
            if len(set(words)) != len(words):
                raise WeatSpecError(f"{self.name}: list {fname} contains duplicates")
        if set(self.targets_a) & set(self.targets_b):
            raise WeatSpecError(f"{self.name}: target lists overlap")
        if set(self.attributes_a) & set(self.attributes_b):
            raise WeatSpecError(f"{self.name}: attribute lists overlap")

    def swapped_attributes(self) -> "WeatTestSpec":
        return WeatTestSpec(
            self.name + ":attr-swap", self.targets_a, self.targets_b,
            self.attributes_b, self.attributes_a, self.labels, self.provenance,
        )

    def swapped_targets(self) -> "WeatTestSpec":
        return WeatTestSpec(
            self.name + ":target-swap", self.targets_b, self.targets_a,
            self.attributes_a, self.attributes_b, self.labels, self.provenance,
        )


def load_spec(path) -> WeatTestSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return spec_from_dict(data)


def spec_from_dict(data: dict) -> WeatTestSpec:
    missing = [f for f in ("name",) + LIST_FIELDS if f not in data]
    if missing:
        raise WeatSpecError(f"spec file missing fields: {', '.join(missing)}")
    return WeatTestSpec(
        name=data["name"],
        targets_a=tuple(data["targets_a"]),
        targets_b=tuple(data["targets_b"]),
        attributes_a=tuple(data["attributes_a"]),
        attributes_b=tuple(data["attributes_b"]),
        labels=data.get("labels", {}),
        provenance=data.get("provenance", ""),
    )


def save_spec(spec: WeatTestSpec, path) -> None:
    data = {
        "name": spec.name,
        "targets_a": list(spec.targets_a),
        "targets_b": list(spec.targets_b),
        "attributes_a": list(spec.attributes_a),
        "attributes_b": list(spec.attributes_b),
        "labels": spec.labels,
        "provenance": spec.provenance,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def builtin_spec_names() -> list[str]:
    files = resources.files("biasaudit.data")
    return sorted(p.name[len("weat_"):-len(".json")] for p in files.iterdir()
                  if p.name.startswith("weat_") and p.name.endswith(".json"))


def builtin_spec(name: str) -> WeatTestSpec:
    """Bundled test: 'gender', 'ethnicity', or 'religion'."""
    ref = resources.files("biasaudit.data") / f"weat_{name}.json"
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise WeatSpecError(f"no bundled test named {name!r}; have {builtin_spec_names()}")
    return spec_from_dict(json.loads(text))


def resolve_spec(name_or_path: str) -> WeatTestSpec:
    """Accept either a bundled test name or a path to a spec file."""
    if Path(name_or_path).exists():
        return load_spec(name_or_path)
    return builtin_spec(name_or_path)


@dataclass(frozen=True)
class ResolvedLists:
    """Word lists resolved against a space, with per-list OOV reports."""

    vectors: dict[str, np.ndarray]  # list field -> (n, d) matrix
    words: dict[str, tuple[str, ...]]
    oov: dict[str, tuple[str, ...]]

    @property
    def resolved_sizes(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.words.items()}


def resolve_lists(spec: WeatTestSpec, space: EmbeddingSpace) -> ResolvedLists:
    vectors: dict[str, np.ndarray] = {}
    words: dict[str, tuple[str, ...]] = {}
    oov: dict[str, tuple[str, ...]] = {}
    for fname in LIST_FIELDS:
        kept, missing, rows = [], [], []
        for word in getattr(spec, fname):
            hit = space.lookup(word)
            if hit.is_oov:
                missing.append(word)
            else:
                kept.append(word)
                rows.append(hit.vector)
        if not kept:
            raise WeatEvaluationError(
                f"{spec.name}: list {fname} is empty after OOV removal "
                f"(missing: {', '.join(missing)})"
            )
        vectors[fname] = np.vstack(rows)
        words[fname] = tuple(kept)
        oov[fname] = tuple(missing)
    return ResolvedLists(vectors, words, oov)


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise WeatEvaluationError("all-zero vector in word lists")
    return matrix / norms


def association_delta(w: np.ndarray, group_a: np.ndarray, group_b: np.ndarray) -> float:
    """Mean cosine of ``w`` to group A minus mean cosine to group B."""
    group_a = np.atleast_2d(np.asarray(group_a, dtype=np.float64))
    group_b = np.atleast_2d(np.asarray(group_b, dtype=np.float64))
    if group_a.shape[0] == 0 or group_b.shape[0] == 0:
        raise WeatEvaluationError("association delta needs non-empty groups")
    w = np.asarray(w, dtype=np.float64)
    nw = np.linalg.norm(w)
    if nw == 0.0:
        raise WeatEvaluationError("all-zero query vector")
    wu = w / nw
    return float(np.mean(_unit_rows(group_a) @ wu) - np.mean(_unit_rows(group_b) @ wu))


def _attribute_deltas(resolved: ResolvedLists) -> tuple[np.ndarray, int]:
    """Deltas for every attribute word (A first, then B); returns (deltas, |A|)."""
    ga = _unit_rows(resolved.vectors["targets_a"])
    gb = _unit_rows(resolved.vectors["targets_b"])
    attrs = np.vstack([resolved.vectors["attributes_a"], resolved.vectors["attributes_b"]])
    au = _unit_rows(attrs)
    deltas = au @ ga.T
    deltas = deltas.mean(axis=1) - (au @ gb.T).mean(axis=1)
    return deltas, resolved.vectors["attributes_a"].shape[0]


@dataclass(frozen=True)
class WeatResult:
    """Effect size plus the bookkeeping needed to audit comparability."""

    name: str
    effect_size: float
    p_value: float | None
    p_method: str | None
    n_permutations: int
    seed: int | None
    workers: int
    resolved_sizes: dict[str, int]
    oov: dict[str, tuple[str, ...]]
    exceeds_nominal_range: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "effect_size": self.effect_size,
            "p_value": self.p_value,
            "p_method": self.p_method,
            "n_permutations": self.n_permutations,
            "seed": self.seed,
            "workers": self.workers,
            "resolved_sizes": self.resolved_sizes,
            "oov": {k: list(v) for k, v in self.oov.items()},
            "exceeds_nominal_range": self.exceeds_nominal_range,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def weat_effect_size(spec: WeatTestSpec, space: EmbeddingSpace) -> WeatResult:
    """Effect size only; see :func:`evaluate_weat` for the permutation test."""
    return evaluate_weat(spec, space, n_permutations=0, seed=None)


def weat_p_value(
    spec: WeatTestSpec,
    space: EmbeddingSpace,
    n_permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Permutation p-value alone; shares all semantics with
    :func:`evaluate_weat`."""
    return evaluate_weat(spec, space, n_permutations, seed, workers).p_value


def _effect_from_deltas(deltas: np.ndarray, n_a: int, name: str) -> float:
    std = float(np.std(deltas, ddof=1))
    if std == 0.0 or not math.isfinite(std):
        raise WeatEvaluationError(f"{name}: association deltas are degenerate (zero spread)")
    return float((deltas[:n_a].mean() - deltas[n_a:].mean()) / std)


def evaluate_weat(
    spec: WeatTestSpec,
    space: EmbeddingSpace,
    n_permutations: int = DEFAULT_PERMUTATIONS,
    seed: int | None = 0,
    workers: int = 1,
) -> WeatResult:
    """Effect size and, when ``n_permutations`` > 0, a one-sided permutation
    p-value over equal-size re-partitions of the attribute union.

    When the number of distinct re-partitions is at most
    ``EXACT_ENUMERATION_LIMIT`` the test enumerates all of them and the
    p-value is an exact fraction (the observed partition counts itself, so
    p >= 1/M). Otherwise ``n_permutations`` partitions are sampled with the
    given seed and the +1/(n+1)-smoothed fraction is reported. Splitting
    the sampled count across ``workers`` derives one child seed per worker,
    so a fixed (seed, workers) pair is reproducible.
    """
    resolved = resolve_lists(spec, space)
    deltas, n_a = _attribute_deltas(resolved)
    if deltas.shape[0] < 2:
        raise WeatEvaluationError(f"{spec.name}: need at least two attribute words")
    effect = _effect_from_deltas(deltas, n_a, spec.name)

    p_value = None
    method = None
    actual_perms = 0
    if n_permutations:
        if n_permutations < 0:
            raise ValueError("n_permutations must be non-negative")
        if seed is None:
            raise ValueError("a seed is mandatory for the permutation test")
        p_value, method, actual_perms = _permutation_p(
            deltas, n_a, int(n_permutations), int(seed), workers
        )

    return WeatResult(
        name=spec.name,
        effect_size=effect,
        p_value=p_value,
        p_method=method,
        n_permutations=actual_perms,
        seed=seed if n_permutations else None,
        workers=workers,
        resolved_sizes=resolved.resolved_sizes,
        oov=resolved.oov,
        exceeds_nominal_range=abs(effect) > 2.0,
    )


def _partition_stat(deltas: np.ndarray, idx_a: np.ndarray) -> float:
    total = deltas.sum()
    sum_a = deltas[idx_a].sum()
    n = deltas.shape[0]
    n_a = idx_a.shape[0]
    return sum_a / n_a - (total - sum_a) / (n - n_a)


def _permutation_p(
    deltas: np.ndarray, n_a: int, n_permutations: int, seed: int, workers: int
) -> tuple[float, str, int]:
    n = deltas.shape[0]
    # observed goes through the same arithmetic as every permuted partition,
    # so the observed partition always counts itself (no one-ulp tie misses)
    observed = _partition_stat(deltas, np.arange(n_a))
    n_exact = math.comb(n, n_a)
    if n_exact <= EXACT_ENUMERATION_LIMIT:
        count = 0
        for combo in combinations(range(n), n_a):
            idx = np.fromiter(combo, dtype=np.int64, count=n_a)
            if _partition_stat(deltas, idx) >= observed:
                count += 1
        return count / n_exact, "exact", n_exact

    # Monte-Carlo: sample re-partitions, one derived seed per worker
    seeds = np.random.SeedSequence(seed).spawn(max(workers, 1))
    chunk_sizes = [n_permutations // workers] * workers
    for i in range(n_permutations % workers):
        chunk_sizes[i] += 1

    def run_chunk(args) -> int:
        child_seed, size = args
        if size == 0:
            return 0
        rng = np.random.default_rng(child_seed)
        count = 0
        block = 4096
        done = 0
        while done < size:
            m = min(block, size - done)
            order = np.argsort(rng.random((m, n)), axis=1)[:, :n_a]
            sums = deltas[order].sum(axis=1)
            stats = sums / n_a - (deltas.sum() - sums) / (n - n_a)
            count += int(np.sum(stats >= observed))
            done += m
        return count

    tasks = list(zip(seeds, chunk_sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run_chunk, tasks))
    else:
        counts = [run_chunk(t) for t in tasks]
    total_count = sum(counts)
    return (1 + total_count) / (1 + n_permutations), "monte_carlo", n_permutations


def delta_accuracy(score_conservative: float, score_liberal: float) -> float:
    """Conservative-model score minus liberal-model score."""
    if not (math.isfinite(score_conservative) and math.isfinite(score_liberal)):
        raise ValueError("scores must be finite")
    return score_conservative - score_liberal


def cross_algorithm_variance(scores) -> float:
    """Sample variance of the scores one data slice received across
    algorithms; a spread diagnostic for how much the algorithm choice
    moves the measure."""
    values = np.asarray(list(scores), dtype=np.float64)
    if values.shape[0] < 2:
        raise ValueError("variance needs at least two scores")
    if np.all(values == values[0]):
        return 0.0
    return float(np.var(values, ddof=1))
