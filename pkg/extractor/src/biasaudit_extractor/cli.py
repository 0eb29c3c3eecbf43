"""Command-line entry point (`biasaudit-extract`)."""

from __future__ import annotations

import argparse
import json
import sys

from .extract import ExtractorConfig, ExtractorError, extract, read_targets


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biasaudit-extract",
        description="emit per-occurrence contextual token vectors as a DECTX stream",
    )
    parser.add_argument("--sentences", required=True,
                        help="corpus export: one pre-tokenized sentence per line")
    parser.add_argument("--tokens", help="target token list; omit to extract every word")
    parser.add_argument("--model", required=True, help="model directory or identifier")
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden-state index (-1 = final layer)")
    parser.add_argument("--mean-last-n", type=int, default=None,
                        help="average the last N hidden states instead of one layer")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-seq-len", type=int, default=128)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--out", required=True, help="stream file to write")
    parser.add_argument("--report", help="write the extraction report as JSON here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExtractorConfig(
        model=args.model,
        layer=args.layer,
        mean_last_n=args.mean_last_n,
        batch_size=args.batch_size,
        max_seq_len=args.max_seq_len,
        device=args.device,
    )
    targets = read_targets(args.tokens) if args.tokens else None
    try:
        report = extract(args.sentences, args.out, config, targets)
    except (ExtractorError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{report.records} records over {report.sentences} sentences "
          f"(dim {report.dimension}, {report.truncated_sentences} truncated)")
    if report.skipped_targets:
        print(f"targets with no occurrences: {', '.join(report.skipped_targets)}",
              file=sys.stderr)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
