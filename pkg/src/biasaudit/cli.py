"""Command-line entry points (`biasaudit <subcommand>`)."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import harness, pooling, weat
from .embeddings import load_text, save_text
from .sgns import TrainConfig, train


def _add_filter_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="corpus directory or articles.jsonl")
    parser.add_argument("--orientation", nargs="*", default=None,
                        help="liberal / neutral / conservative (any subset)")
    parser.add_argument("--year", nargs="*", type=int, default=None)


def _load_view(args) -> corpus_mod.CorpusView:
    corp = harness._load_any_corpus(args.corpus)
    return corpus_mod.slice_corpus(corp, args.orientation, args.year)


def cmd_ingest(args) -> int:
    corp = corpus_mod.ingest(args.input, fail_fast=args.fail_fast)
    corpus_mod.save_corpus(corp, args.out)
    s = corp.stats
    print(f"loaded {s.loaded} articles ({s.rejected} rejected, "
          f"{s.no_date} without dates, {s.duplicate_texts} duplicate texts)")
    for lineno, message in s.errors[:20]:
        print(f"  line {lineno}: {message}", file=sys.stderr)
    if len(s.errors) > 20:
        print(f"  ... {len(s.errors) - 20} more", file=sys.stderr)
    return 0


def cmd_slice(args) -> int:
    view = _load_view(args)
    print(f"{len(view)} articles match")
    if args.out:
        payload = {"ids": list(view.ids), "provenance": view.provenance}
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def cmd_train(args) -> int:
    view = _load_view(args)
    config = TrainConfig(
        dim=args.dim,
        window=args.window,
        epochs=args.epochs,
        negatives=args.negatives,
        subsample=args.subsample if args.subsample > 0 else None,
        seed=args.seed,
        workers=args.workers,
        deterministic=args.deterministic,
    )
    vocab = corpus_mod.build_vocab(view, min_count=args.min_count)
    space = train(view, vocab, config)
    save_text(space, args.out)
    losses = ", ".join(f"{x:.4f}" for x in space.metadata["epoch_losses"])
    print(f"trained {len(space)} x {space.dim} [{space.metadata['kernel_mode']}] "
          f"epoch losses: {losses}")
    print(f"wrote {args.out}")
    return 0


def cmd_pool(args) -> int:
    space = pooling.pool_file(args.stream)
    save_text(space, args.out)
    print(f"pooled {len(space)} tokens at dimension {space.dim}")
    print(f"wrote {args.out}")
    return 0


def cmd_validate_stream(args) -> int:
    report = pooling.validate_stream(args.stream)
    payload = {
        "record_count": report.record_count,
        "distinct_tokens": report.distinct_tokens,
        "dimension": report.dimension,
        "model_tag": report.model_tag,
        "errors": [{"line": l, "message": m} for l, m in report.errors],
        "valid": report.valid,
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"records: {report.record_count}, distinct tokens: {report.distinct_tokens}, "
              f"dim: {report.dimension}, errors: {len(report.errors)}")
        for lineno, message in report.errors:
            print(f"  line {lineno}: {message}", file=sys.stderr)
    return 0 if report.valid else 1


def cmd_export(args) -> int:
    view = _load_view(args)
    n = corpus_mod.export_sentences(view, args.sentences)
    print(f"wrote {n} sentences to {args.sentences}")
    if args.tokens:
        words: set[str] = set()
        for name in args.measure or []:
            spec = weat.resolve_spec(name)
            for fname in weat.LIST_FIELDS:
                words.update(w.lower() for w in getattr(spec, fname))
        for path in args.benchmark or []:
            from .simeval import load_benchmark

            bench = load_benchmark(path, args.benchmark_format)
            for w1, w2, _ in bench.pairs:
                words.add(w1.lower())
                words.add(w2.lower())
        with open(args.tokens, "w", encoding="utf-8", newline="\n") as fh:
            for w in sorted(words):
                fh.write(w + "\n")
        print(f"wrote {len(words)} target tokens to {args.tokens}")
    return 0


def cmd_weat(args) -> int:
    space = load_text(args.embeddings)
    spec = weat.resolve_spec(args.spec)
    result = weat.evaluate_weat(
        spec, space, n_permutations=args.permutations, seed=args.seed, workers=args.workers
    )
    text = result.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_run(args) -> int:
    plan = harness.load_plan(args.plan)
    table = harness.run(plan)
    outdir = harness.resolve_output_dir(args.out)
    paths = harness.emit(table, "json", outdir)
    errors = sum(1 for c in table.cells if c.error)
    print(f"{len(table.cells)} cells ({errors} with errors)")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_temporal(args) -> int:
    corp = harness._load_any_corpus(args.corpus)
    config = TrainConfig(
        dim=args.dim,
        window=args.window,
        epochs=args.epochs,
        subsample=args.subsample if args.subsample > 0 else None,
        seed=args.seed,
        deterministic=True,
    )
    algo = harness.AlgorithmSpec(
        label="sgns", kind="sgns", train_config=config, vocab_min_count=args.min_count
    )
    result = harness.temporal_run(
        corp,
        args.orientation,
        getattr(args, "from"),
        args.to,
        args.measure,
        algorithm=algo,
        base_seed=args.seed,
    )
    outdir = harness.resolve_output_dir(args.out)
    paths = harness.emit(result, "json", outdir)
    print(f"{len(result.points)} points over {len(result.years)} years; "
          f"{result.articles_used}/{result.dated_articles_total} dated articles used")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_emit(args) -> int:
    result = harness.load_result(args.input)
    outdir = harness.resolve_output_dir(args.out)
    paths = harness.emit(result, args.format, outdir)
    for p in paths:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biasaudit",
                                     description="social-bias measurement for labeled corpora")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a jsonl article file into a corpus directory")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fail-fast", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("slice", help="count/extract articles matching filters")
    _add_filter_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("train", help="train a skip-gram space on a corpus slice")
    _add_filter_args(p)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-5,
                   help="frequency subsampling threshold; <= 0 disables")
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pool", help="average a context-vector stream into a space")
    p.add_argument("--stream", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("validate-stream", help="check a context-vector stream file")
    p.add_argument("--stream", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate_stream)

    p = sub.add_parser("export", help="write tokenized sentences (and target tokens)")
    _add_filter_args(p)
    p.add_argument("--sentences", required=True)
    p.add_argument("--tokens")
    p.add_argument("--measure", nargs="*", help="bundled test names or spec paths")
    p.add_argument("--benchmark", nargs="*", help="benchmark files for target tokens")
    p.add_argument("--benchmark-format", default="tab_separated")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("weat", help="evaluate one association test on a space")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--spec", required=True, help="bundled name or spec file")
    p.add_argument("--permutations", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_weat)

    p = sub.add_parser("run", help="execute an experiment plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("temporal", help="per-year training and trend fits")
    p.add_argument("--corpus", required=True)
    p.add_argument("--orientation", nargs="+", required=True)
    p.add_argument("--from", type=int, required=True)
    p.add_argument("--to", type=int, required=True)
    p.add_argument("--measure", nargs="+", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-5)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_temporal)

    p = sub.add_parser("emit", help="render a results artifact to csv/json/plotdata")
    p.add_argument("--input", required=True, help="results.json or temporal.json")
    p.add_argument("--format", required=True, choices=["csv", "json", "plotdata"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_emit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
