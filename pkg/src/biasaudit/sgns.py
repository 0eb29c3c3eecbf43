"""Skip-gram negative-sampling trainer for static embedding spaces.

The objective per (center, context) pair with negatives n_1..n_k is

    -log sigmoid(u_ctx . v_cen) - sum_i log sigmoid(-u_ni . v_cen)

optimized by SGD with a linearly decaying learning rate. Input vectors
(v) are the emitted embeddings; output vectors (u) are discarded. The
inner loop lives in :mod:`biasaudit.kernels` and runs compiled under numba
by default.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .corpus import CorpusView, TokenizeConfig, Vocabulary, encode_view
from .embeddings import EmbeddingSpace


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 300
    window: int = 5
    epochs: int = 5
    negatives: int = 5
    subsample: float | None = 1e-5  # None disables frequency subsampling
    learning_rate: float = 0.025
    learning_rate_floor: float = 1e-4
    seed: int = 1
    workers: int = 1
    deterministic: bool = True
    dynamic_window: bool = True
    train_unk: bool = True  # unk occurrences stay in the stream; see train()
    tokenize: TokenizeConfig = field(default_factory=TokenizeConfig)

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.subsample is not None and not 0.0 < self.subsample < 1.0:
            raise ValueError("subsample threshold must be in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def subsample_keep_prob(freq: float, threshold: float) -> float:
    """Keep probability for a token of relative frequency ``freq``.

    keep = min(1, sqrt(t/f) + t/f), the conventional discounting form:
    tokens at or below the threshold frequency are always kept, and the
    probability decays monotonically above it.
    """
    if freq <= 0.0:
        raise ValueError("frequency must be positive")
    if freq > 1.0:
        raise ValueError("frequency cannot exceed 1")
    ratio = threshold / freq
    return min(1.0, math.sqrt(ratio) + ratio)


class NegativeTable:
    """Alias-method sampler realizing P(token) proportional to count^0.75.

    The unk id is assigned zero weight: it is an artificial aggregate and
    must never be drawn as a negative. Alias sampling is exact, so the
    empirical distribution deviates from the target only by sampling noise.
    """

    def __init__(self, vocab: Vocabulary, power: float = 0.75, include_unk: bool = False):
        if len(vocab) == 0:
            raise ValueError("empty vocabulary")
        weights = np.zeros(len(vocab), dtype=np.float64)
        for tok, count in vocab.counts.items():
            weights[vocab.id_of(tok)] = float(count) ** power if count > 0 else 0.0
        if not include_unk:
            weights[vocab.unk_id] = 0.0
        total = weights.sum()
        if total <= 0:
            raise ValueError("no token is eligible for negative sampling")
        self.probabilities = weights / total
        self.prob, self.alias = _build_alias(self.probabilities)

    def sample_counts(self, n_draws: int, seed: int) -> np.ndarray:
        """Draw ``n_draws`` negatives through the kernel path and return the
        per-id histogram."""
        counts, _ = kernels.alias_sample_counts(
            self.prob, self.alias, int(n_draws), kernels.new_state(seed)
        )
        return np.asarray(counts)


def _build_alias(probabilities: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standard two-stack alias-table construction."""
    n = probabilities.shape[0]
    prob = np.zeros(n, dtype=np.float64)
    alias = np.zeros(n, dtype=np.int64)
    scaled = probabilities * n
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    for i in large:
        prob[i] = 1.0
    for i in small:
        prob[i] = 1.0  # numerical leftovers
    return prob, alias


def pair_loss_and_grads(
    center: np.ndarray, context: np.ndarray, negatives: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss and analytic gradients for one training example.

    Returns (loss, d/d_center, d/d_context, d/d_negatives). This is the
    reference form of the objective the kernel optimizes; the finite
    difference tests pin the two together.
    """
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    s_pos = float(np.dot(center, context))
    s_neg = negatives @ center
    loss = float(np.logaddexp(0.0, -s_pos) + np.sum(np.logaddexp(0.0, s_neg)))
    sig_pos = 1.0 / (1.0 + math.exp(-s_pos)) if s_pos >= 0 else math.exp(s_pos) / (1 + math.exp(s_pos))
    sig_neg = np.empty(len(s_neg))
    for i, s in enumerate(s_neg):
        sig_neg[i] = 1.0 / (1.0 + math.exp(-s)) if s >= 0 else math.exp(s) / (1 + math.exp(s))
    g_center = (sig_pos - 1.0) * context + sig_neg @ negatives
    g_context = (sig_pos - 1.0) * center
    g_negatives = np.outer(sig_neg, center)
    return loss, g_center, g_context, g_negatives


@dataclass(frozen=True)
class TrainReport:
    epoch_losses: tuple[float, ...]
    pairs_per_epoch: tuple[int, ...]
    total_tokens: int
    mode: str


def train(
    view: CorpusView,
    vocab: Vocabulary,
    config: TrainConfig = TrainConfig(),
    emit_unk: bool = False,
) -> EmbeddingSpace:
    """Train an embedding space over ``vocab`` from the view's sentences.

    Deterministic contract: with ``deterministic=True`` (which forces a
    single worker) and a fixed seed, repeated runs produce bit-identical
    matrices within the active kernel mode. Fast mode (workers > 1 under
    numba) shards sentences across threads that update the shared
    parameter matrices without locks, so results vary run to run.

    Unk occurrences remain in the token stream as contexts/centers, but
    unk is never sampled as a negative and its row is dropped from the
    returned space unless ``emit_unk`` is set.
    """
    cfg = config
    if cfg.deterministic and cfg.workers != 1:
        cfg = replace(cfg, workers=1)

    sentences = encode_view(view, vocab, cfg.tokenize)
    ids_list: list[int] = []
    starts, ends = [], []
    for sent in sentences:
        starts.append(len(ids_list))
        ids_list.extend(sent)
        ends.append(len(ids_list))
    if not ids_list:
        raise ValueError("view produced no tokens to train on")
    ids = np.asarray(ids_list, dtype=np.int64)
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    lengths = ends - starts
    if int(lengths.max()) < 2:
        raise ValueError("no sentence long enough to fill a single context window")

    n_vocab = len(vocab)
    total_tokens = int(ids.shape[0])

    # keep probabilities from relative frequencies; <unk> follows its own count
    keep = np.ones(n_vocab, dtype=np.float64)
    if cfg.subsample is not None:
        for tok, count in vocab.counts.items():
            if count > 0:
                keep[vocab.id_of(tok)] = subsample_keep_prob(
                    count / vocab.total_tokens, cfg.subsample
                )
    table = NegativeTable(vocab)

    rng = np.random.default_rng(cfg.seed)
    syn0 = (rng.random((n_vocab, cfg.dim), dtype=np.float64) - 0.5) / cfg.dim
    syn1 = np.zeros((n_vocab, cfg.dim), dtype=np.float64)

    budget_total = float(total_tokens) * cfg.epochs
    state = kernels.new_state(cfg.seed)
    epoch_losses: list[float] = []
    pairs_per_epoch: list[int] = []
    max_len = int(lengths.max())

    n_workers = cfg.workers if kernels.USING_NUMBA else 1
    shards = _shard_sentences(starts, ends, n_workers)

    budget_done = 0.0
    for epoch in range(cfg.epochs):
        if len(shards) == 1:
            state, loss, pairs, words = kernels.sgns_epoch(
                ids, starts, ends, syn0, syn1, keep, table.prob, table.alias,
                cfg.window, cfg.dynamic_window, cfg.negatives,
                cfg.learning_rate, cfg.learning_rate_floor,
                budget_total, budget_done, max_len, state,
            )
            state = kernels.new_state(state)  # re-wrap for the next epoch's call
            loss_sum, pair_count = float(loss), int(pairs)
        else:
            # lock-free asynchronous updates: each shard races on syn0/syn1
            loss_sum, pair_count = 0.0, 0
            offsets = np.cumsum([0] + [int((e - s).sum()) for s, e in shards])[:-1]
            seeds = [kernels.new_state(cfg.seed + 7919 * (epoch * len(shards) + i + 1))
                     for i in range(len(shards))]
            with ThreadPoolExecutor(max_workers=len(shards)) as pool:
                futures = [
                    pool.submit(
                        kernels.sgns_epoch,
                        ids, s, e, syn0, syn1, keep, table.prob, table.alias,
                        cfg.window, cfg.dynamic_window, cfg.negatives,
                        cfg.learning_rate, cfg.learning_rate_floor,
                        budget_total, budget_done + float(off), max_len, seeds[i],
                    )
                    for i, ((s, e), off) in enumerate(zip(shards, offsets))
                ]
                for fut in futures:
                    _, loss, pairs, _ = fut.result()
                    loss_sum += float(loss)
                    pair_count += int(pairs)
        budget_done += total_tokens
        epoch_losses.append(loss_sum / max(pair_count, 1))
        pairs_per_epoch.append(pair_count)

    if not np.all(np.isfinite(syn0)):
        raise RuntimeError("training produced non-finite values; lower the learning rate")

    tokens = vocab.tokens
    if emit_unk:
        emit_tokens = tokens
        matrix = syn0
    else:
        emit_tokens = [t for t in tokens if t != vocab.unk_token]
        rows = [vocab.id_of(t) for t in emit_tokens]
        matrix = syn0[rows]
    report = TrainReport(tuple(epoch_losses), tuple(pairs_per_epoch), total_tokens, kernels.kernel_mode())
    metadata = {
        "algorithm": "sgns",
        "source": view.descriptor(),
        "dim": cfg.dim,
        "window": cfg.window,
        "epochs": cfg.epochs,
        "negatives": cfg.negatives,
        "subsample": cfg.subsample,
        "seed": cfg.seed,
        "deterministic": cfg.deterministic,
        "kernel_mode": report.mode,
        "epoch_losses": list(report.epoch_losses),
    }
    return EmbeddingSpace(emit_tokens, matrix, metadata)


def _shard_sentences(starts: np.ndarray, ends: np.ndarray, n_workers: int):
    """Contiguous sentence shards, one per worker."""
    n = starts.shape[0]
    if n_workers <= 1 or n < 2 * n_workers:
        return [(starts, ends)]
    bounds = np.linspace(0, n, n_workers + 1, dtype=np.int64)
    return [
        (starts[bounds[i]:bounds[i + 1]], ends[bounds[i]:bounds[i + 1]])
        for i in range(n_workers)
        if bounds[i + 1] > bounds[i]
    ]
