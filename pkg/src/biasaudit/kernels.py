"""Hot numeric inner loops for embedding training.

Every kernel here is written so the exact same source runs in two modes:
compiled with numba's ``@njit`` (the default) or interpreted on top of plain
numpy. Set the environment variable ``BIASAUDIT_DISABLE_NUMBA=1`` to force
the interpreted path (or it engages automatically when numba is missing).
``benchmarks/bench_sgns.py`` compares the two.

The kernels carry their own splitmix64 RNG so that a fixed seed yields a
bit-identical parameter matrix on repeated runs within either mode.
"""

import math
import os

import numpy as np

_DISABLE_ENV = "BIASAUDIT_DISABLE_NUMBA"


def _passthrough(*args, **kwargs):
    if args and callable(args[0]):
        return args[0]

    def wrap(func):
        return func

    return wrap


USING_NUMBA = False
if os.environ.get(_DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes"):
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:
        njit = _passthrough
else:
    njit = _passthrough


def kernel_mode() -> str:
    """Active backend for the hot loops: ``"numba"`` or ``"numpy"``."""
    return "numba" if USING_NUMBA else "numpy"


def new_state(seed: int):
    """Initial RNG state for the kernels; type depends on the active mode."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(seed) if USING_NUMBA else seed


_MASK64 = 0xFFFFFFFFFFFFFFFF
_U53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(nogil=True, cache=True)
def _mix64(state):
    # splitmix64; masks are no-ops under uint64 but keep the python path 64-bit
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z = z ^ (z >> 31)
    return state, z


@njit(nogil=True, cache=True)
def _uniform(state):
    state, z = _mix64(state)
    return state, (z >> 11) * _U53


@njit(nogil=True, cache=True)
def _alias_draw(state, prob, alias):
    # Walker alias method: one cell pick, one accept test
    n = prob.shape[0]
    state, u1 = _uniform(state)
    state, u2 = _uniform(state)
    j = int(u1 * n)
    if u2 < prob[j]:
        return state, j
    return state, int(alias[j])


@njit(nogil=True, cache=True)
def alias_sample_counts(prob, alias, n_draws, state):
    """Histogram of ``n_draws`` alias-table draws; used to audit the sampler."""
    counts = np.zeros(prob.shape[0], dtype=np.int64)
    for _ in range(n_draws):
        state, j = _alias_draw(state, prob, alias)
        counts[j] += 1
    return counts, state


@njit(nogil=True, cache=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(nogil=True, cache=True)
def _softplus(x):
    # log(1 + e^x) without overflow; -log(sigmoid(s)) == softplus(-s)
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(nogil=True, cache=True)
def sgns_epoch(
    ids,
    starts,
    ends,
    syn0,
    syn1,
    keep_prob,
    alias_prob,
    alias_index,
    window,
    dynamic_window,
    n_negative,
    lr_start,
    lr_floor,
    budget_total,
    budget_done,
    max_sentence_len,
    state,
):
    """One pass over the encoded sentences with in-place SGD updates.

    ``ids`` is the flat token-id stream, ``starts``/``ends`` delimit
    sentences. ``syn0`` (input vectors, the emitted ones) and ``syn1``
    (output vectors) are mutated in place. ``budget_total`` is the token
    count over all epochs and drives the linear learning-rate decay;
    ``budget_done`` is the count consumed before this call.

    Returns ``(state, loss_sum, pair_count, words_seen)`` where the loss is
    the running negative-sampling objective summed over positive pairs.
    """
    dim = syn0.shape[1]
    buf = np.empty(max_sentence_len, dtype=np.int64)
    neu = np.empty(dim, dtype=np.float64)
    loss_sum = 0.0
    pair_count = 0
    words_seen = 0
    alpha = lr_start

    for s_i in range(starts.shape[0]):
        lo = starts[s_i]
        hi = ends[s_i]
        words_seen += hi - lo

        frac = (budget_done + words_seen) / (budget_total + 1.0)
        alpha = lr_start * (1.0 - frac)
        if alpha < lr_floor:
            alpha = lr_floor

        # frequency subsampling, applied per occurrence per epoch
        m = 0
        for t in range(lo, hi):
            tok = ids[t]
            kp = keep_prob[tok]
            if kp >= 1.0:
                buf[m] = tok
                m += 1
            else:
                state, u = _uniform(state)
                if u < kp:
                    buf[m] = tok
                    m += 1
        if m < 2:
            continue

        for pos in range(m):
            center = buf[pos]
            if dynamic_window:
                state, u = _uniform(state)
                eff = 1 + int(u * window)
            else:
                eff = window
            j_lo = pos - eff
            j_hi = pos + eff
            if j_lo < 0:
                j_lo = 0
            if j_hi > m - 1:
                j_hi = m - 1
            for j in range(j_lo, j_hi + 1):
                if j == pos:
                    continue
                context = buf[j]

                for d in range(dim):
                    neu[d] = 0.0
                pair_loss = 0.0

                # positive example plus n_negative sampled contrasts
                for k in range(n_negative + 1):
                    if k == 0:
                        target = context
                        label = 1.0
                    else:
                        state, target = _alias_draw(state, alias_prob, alias_index)
                        if target == context:
                            continue
                        label = 0.0
                    score = 0.0
                    for d in range(dim):
                        score += syn0[center, d] * syn1[target, d]
                    if label > 0.5:
                        pair_loss += _softplus(-score)
                    else:
                        pair_loss += _softplus(score)
                    g = (label - _sigmoid(score)) * alpha
                    for d in range(dim):
                        neu[d] += g * syn1[target, d]
                        syn1[target, d] += g * syn0[center, d]

                for d in range(dim):
                    syn0[center, d] += neu[d]
                loss_sum += pair_loss
                pair_count += 1

    return state, loss_sum, pair_count, words_seen
