"""Uniform embedding-space container, lookups, and the text persistence format.

Every producing algorithm (trained, pooled, imported) funnels into
:class:`EmbeddingSpace`, so the measurement code never cares where vectors
came from. The text format is the common static-embedding convention:
a ``"<vocab_size> <dim>"`` header line, then one ``"token v1 ... vd"`` line
per token, which lets externally trained models plug straight in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


class EmbeddingFormatError(ValueError):
    """Raised for malformed embedding files or inconsistent constructions."""


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two same-dimension vectors.

    Raises ``ValueError`` for an all-zero vector rather than silently
    returning 0: a zero vector has no direction and a silent 0 would read as
    "measured orthogonality" downstream.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for an all-zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class LookupResult:
    """Outcome of a token lookup: a vector, or an OOV marker.

    ``via`` records the fallback that produced the hit ("exact" or
    "casefold"); for OOV it is "oov" and ``vector`` is None.
    """

    token: str
    vector: np.ndarray | None
    matched: str | None
    via: str

    @property
    def is_oov(self) -> bool:
        return self.vector is None


class EmbeddingSpace:
    """Immutable token -> vector mapping with |V| x d float64 storage.

    Vectors are stored unnormalized (norms stay available as a quality
    diagnostic); cosine normalizes on the fly.
    """

    def __init__(
        self,
        tokens: Iterable[str],
        matrix: np.ndarray,
        metadata: Mapping[str, object] | None = None,
    ):
        tokens = list(tokens)
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise EmbeddingFormatError("matrix must be 2-dimensional")
        if matrix.shape[0] != len(tokens):
            raise EmbeddingFormatError(
                f"{len(tokens)} tokens but {matrix.shape[0]} matrix rows"
            )
        if matrix.shape[1] < 1:
            raise EmbeddingFormatError("dimension must be positive")
        if not np.all(np.isfinite(matrix)):
            raise EmbeddingFormatError("matrix contains non-finite values")
        index: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if not tok or any(c.isspace() for c in tok):
                raise EmbeddingFormatError(f"invalid token {tok!r} at row {i}")
            if tok in index:
                raise EmbeddingFormatError(f"duplicate token {tok!r}")
            index[tok] = i
        self._tokens = tokens
        self._index = index
        self._matrix = matrix
        self._matrix.setflags(write=False)
        self.metadata: dict[str, object] = dict(metadata or {})
        # case-fold map built once; first-seen wins so it stays deterministic
        folded: dict[str, str] = {}
        for tok in tokens:
            folded.setdefault(tok.casefold(), tok)
        self._folded = folded

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def vector(self, token: str) -> np.ndarray:
        """Exact-match vector; KeyError if absent (see :meth:`lookup`)."""
        return self._matrix[self._index[token]]

    def lookup(self, token: str) -> LookupResult:
        """Fixed fallback chain: exact match, then case-fold, then OOV.

        Training data is lowercased but test word lists carry capitalized
        names, so the case-fold step keeps those comparable.
        """
        row = self._index.get(token)
        if row is not None:
            return LookupResult(token, self._matrix[row], token, "exact")
        match = self._folded.get(token.casefold())
        if match is not None:
            return LookupResult(token, self._matrix[self._index[match]], match, "casefold")
        return LookupResult(token, None, None, "oov")


def save_text(space: EmbeddingSpace, path) -> None:
    """Write the text format; floats use 17 significant digits so a
    load round-trips the float64 values exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(space)} {space.dim}\n")
        mat = space.matrix
        for i, tok in enumerate(space.tokens):
            vals = " ".join(f"{x:.17g}" for x in mat[i])
            fh.write(f"{tok} {vals}\n")


def load_text(path, metadata: Mapping[str, object] | None = None) -> EmbeddingSpace:
    """Parse the text format, rejecting header/row inconsistencies,
    duplicate tokens, and non-finite values (each error names its line)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(f"{path}: line 1: malformed header {header!r}")
        try:
            n_rows, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}: line 1: non-integer header {header!r}")
        if n_rows < 0 or dim < 1:
            raise EmbeddingFormatError(f"{path}: line 1: invalid sizes {n_rows} {dim}")
        tokens: list[str] = []
        matrix = np.empty((n_rows, dim), dtype=np.float64)
        row = 0
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(" ")
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}: line {lineno}: expected {dim} values, got {len(fields) - 1}"
                )
            if row >= n_rows:
                raise EmbeddingFormatError(f"{path}: line {lineno}: more rows than header declares")
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}: line {lineno}: unparseable value")
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"{path}: line {lineno}: non-finite value")
            tokens.append(fields[0])
            matrix[row] = vec
            row += 1
        if row != n_rows:
            raise EmbeddingFormatError(f"{path}: header declares {n_rows} rows, found {row}")
    try:
        return EmbeddingSpace(tokens, matrix, metadata)
    except EmbeddingFormatError as exc:
        raise EmbeddingFormatError(f"{path}: {exc}") from exc
