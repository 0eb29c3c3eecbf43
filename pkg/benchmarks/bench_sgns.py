#!/usr/bin/env python3
"""Benchmark the skip-gram training kernel: numba-compiled vs pure numpy.

Run without arguments to time both backends in fresh subprocesses and print
a comparison (the backend is chosen at import time via the
BIASAUDIT_DISABLE_NUMBA environment variable, so each run needs its own
process). `--mode` runs a single measurement in-process.
"""

import argparse
import json
import os
import random
import subprocess
import sys
import time


def build_corpus(n_sentences: int, seed: int = 7):
    from biasaudit.corpus import Article, Corpus

    rng = random.Random(seed)
    vocab = [f"tok{i}" for i in range(200)]
    articles = []
    for i in range(n_sentences):
        words = rng.sample(vocab, rng.randint(5, 12))
        articles.append(
            Article(id=f"s{i}", text=" ".join(words) + ".", outlet="bench",
                    orientation="neutral")
        )
    return Corpus(articles)


def measure(n_sentences: int, dim: int, epochs: int, window: int) -> dict:
    from biasaudit import kernel_mode
    from biasaudit.corpus import build_vocab
    from biasaudit.sgns import TrainConfig, train

    corpus = build_corpus(n_sentences)
    view = corpus.all()
    vocab = build_vocab(view, min_count=1)
    config = TrainConfig(dim=dim, window=window, epochs=epochs, subsample=None,
                         seed=42, deterministic=True)

    # warm-up pass so JIT compilation stays out of the measurement
    warm = build_corpus(50, seed=8)
    train(warm.all(), build_vocab(warm.all(), min_count=1), config)

    start = time.perf_counter()
    space = train(view, vocab, config)
    elapsed = time.perf_counter() - start
    tokens = vocab.total_tokens * epochs
    return {
        "mode": kernel_mode(),
        "seconds": elapsed,
        "tokens": tokens,
        "tokens_per_second": tokens / elapsed,
        "final_loss": space.metadata["epoch_losses"][-1],
    }


def run_subprocess(disable_numba: bool, args) -> dict:
    env = dict(os.environ)
    env["BIASAUDIT_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    cmd = [
        sys.executable, os.path.abspath(__file__), "--mode", "single",
        "--sentences", str(args.sentences), "--dim", str(args.dim),
        "--epochs", str(args.epochs), "--window", str(args.window),
    ]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mode", choices=["compare", "single"], default="compare")
    parser.add_argument("--sentences", type=int, default=2000)
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--window", type=int, default=5)
    args = parser.parse_args()

    if args.mode == "single":
        print(json.dumps(measure(args.sentences, args.dim, args.epochs, args.window)))
        return 0

    print(f"sentences={args.sentences} dim={args.dim} epochs={args.epochs} "
          f"window={args.window}")
    results = []
    for disable in (False, True):
        res = run_subprocess(disable, args)
        results.append(res)
        print(f"  {res['mode']:>6}: {res['seconds']:8.2f}s "
              f"{res['tokens_per_second']:12.0f} tokens/s "
              f"(final epoch loss {res['final_loss']:.4f})")
    if results[0]["mode"] == results[1]["mode"]:
        print("warning: both runs used the same backend (is numba installed?)")
    else:
        speedup = results[1]["seconds"] / results[0]["seconds"]
        print(f"  speedup: {speedup:.1f}x ({results[0]['mode']} over {results[1]['mode']})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
