"""Average per-occurrence context vectors into a static embedding space.

Stream file format (UTF-8, LF):

    DECTX <dim> <model-tag>
    <token>\\t<v1> <v2> ... <vd>

One record per token occurrence. Accumulation is streaming with
compensated (Kahan) summation, so a full-corpus stream never needs to fit
in memory and record order does not matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .embeddings import EmbeddingSpace


class StreamFormatError(ValueError):
    """Raised for malformed stream headers or records."""


@dataclass(frozen=True)
class StreamHeader:
    dim: int
    model_tag: str


@dataclass
class StreamReport:
    record_count: int = 0
    distinct_tokens: int = 0
    dimension: int = 0
    model_tag: str = ""
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors


def _parse_header(line: str, path) -> StreamHeader:
    parts = line.split()
    if len(parts) != 3 or parts[0] != "DECTX":
        raise StreamFormatError(f"{path}: line 1: bad header {line.strip()!r}")
    try:
        dim = int(parts[1])
    except ValueError:
        raise StreamFormatError(f"{path}: line 1: non-integer dimension {parts[1]!r}")
    if dim < 1:
        raise StreamFormatError(f"{path}: line 1: dimension must be positive")
    return StreamHeader(dim, parts[2])


def _parse_record(line: str, dim: int) -> tuple[str, np.ndarray]:
    if "\t" not in line:
        raise ValueError("missing tab separator")
    token, _, rest = line.partition("\t")
    if not token or any(c.isspace() for c in token):
        raise ValueError(f"invalid token {token!r}")
    values = rest.split()
    if len(values) != dim:
        raise ValueError(f"expected {dim} values, got {len(values)}")
    vec = np.array([float(v) for v in values], dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise ValueError("non-finite value")
    return token, vec


def read_stream(path) -> tuple[StreamHeader, Iterator[tuple[str, np.ndarray]]]:
    """Open a stream file; the iterator raises StreamFormatError (with the
    line number) on the first malformed record."""
    fh = open(path, "r", encoding="utf-8")
    try:
        header = _parse_header(fh.readline(), path)
    except StreamFormatError:
        fh.close()
        raise

    def records() -> Iterator[tuple[str, np.ndarray]]:
        with fh:
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    yield _parse_record(line, header.dim)
                except ValueError as exc:
                    raise StreamFormatError(f"{path}: line {lineno}: {exc}") from exc

    return header, records()


def validate_stream(path) -> StreamReport:
    """Full-file check that enumerates every malformed record instead of
    stopping at the first; a stream is valid iff the error list is empty."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = _parse_header(first, path)
        except StreamFormatError as exc:
            raise StreamFormatError(str(exc))
        report = StreamReport(dimension=header.dim, model_tag=header.model_tag)
        tokens: set[str] = set()
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                token, _ = _parse_record(line, header.dim)
            except ValueError as exc:
                report.errors.append((lineno, str(exc)))
                continue
            report.record_count += 1
            tokens.add(token)
        report.distinct_tokens = len(tokens)
    return report


class PoolAccumulator:
    """Per-token running sums with Kahan compensation.

    Merging accumulators is associative and commutative, so shards of a
    stream can be pooled independently and combined.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self._sums: dict[str, np.ndarray] = {}
        self._comps: dict[str, np.ndarray] = {}
        self._counts: dict[str, int] = {}

    def add(self, token: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise StreamFormatError(
                f"record for {token!r} has dimension {vector.shape}, expected ({self.dim},)"
            )
        if token not in self._sums:
            self._sums[token] = vector.copy()
            self._comps[token] = np.zeros(self.dim)
            self._counts[token] = 1
            return
        s, c = self._sums[token], self._comps[token]
        y = vector - c
        t = s + y
        c[:] = (t - s) - y
        s[:] = t
        self._counts[token] += 1

    def merge(self, other: "PoolAccumulator") -> None:
        if other.dim != self.dim:
            raise StreamFormatError("cannot merge accumulators of different dimension")
        for token, vec in other._sums.items():
            n = other._counts[token]
            if token not in self._sums:
                self._sums[token] = vec.copy()
                self._comps[token] = other._comps[token].copy()
                self._counts[token] = n
            else:
                self.add(token, vec)  # treat the shard sum as one addend
                self._counts[token] += n - 1

    def __len__(self) -> int:
        return len(self._sums)

    def counts(self) -> dict[str, int]:
        return dict(self._counts)

    def to_space(self, metadata: dict | None = None) -> EmbeddingSpace:
        if not self._sums:
            raise ValueError("no records accumulated")
        tokens = sorted(self._sums)
        matrix = np.empty((len(tokens), self.dim), dtype=np.float64)
        for i, tok in enumerate(tokens):
            matrix[i] = self._sums[tok] / self._counts[tok]
        return EmbeddingSpace(tokens, matrix, metadata)


def pool_records(
    records: Iterable[tuple[str, np.ndarray]], dim: int, model_tag: str = ""
) -> EmbeddingSpace:
    """Pool an in-memory record sequence; errors on an empty stream."""
    acc = PoolAccumulator(dim)
    for token, vec in records:
        acc.add(token, vec)
    if len(acc) == 0:
        raise ValueError("empty stream: nothing to pool")
    return acc.to_space({"algorithm": "decontext-pool", "model_tag": model_tag})


def pool_file(path) -> EmbeddingSpace:
    """Pool a stream file into an embedding space (single pass)."""
    header, records = read_stream(path)
    space = pool_records(records, header.dim, header.model_tag)
    space.metadata["source"] = str(path)
    return space


def write_stream(path, dim: int, model_tag: str, records: Iterable[tuple[str, np.ndarray]]) -> int:
    """Emit a stream file in the exchange format; returns the record count."""
    if any(c.isspace() for c in model_tag) or not model_tag:
        raise ValueError("model tag must be non-empty and whitespace-free")
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"DECTX {dim} {model_tag}\n")
        for token, vec in records:
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (dim,):
                raise ValueError(f"record for {token!r} has wrong dimension")
            fh.write(token + "\t" + " ".join(f"{x:.17g}" for x in vec) + "\n")
            n += 1
    return n
