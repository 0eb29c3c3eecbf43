"""Emit per-occurrence contextual token vectors as a DECTX stream.

Input is the toolkit's corpus export: one pre-tokenized sentence per line,
words space-separated, plus an optional target-token list. Each occurrence
of a target word contributes one stream record; a word split into several
sub-word pieces contributes the mean of its piece vectors, so the stream
stays word-level and the pooling side needs no tokenizer knowledge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


class ExtractorError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtractorConfig:
    model: str
    layer: int = -1  # index into the hidden-state stack; -1 = final layer
    mean_last_n: int | None = None  # overrides `layer` when set
    batch_size: int = 8
    max_seq_len: int = 128
    device: str = "cpu"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_seq_len < 4:
            raise ValueError("max_seq_len must leave room for special tokens")
        if self.mean_last_n is not None and self.mean_last_n < 1:
            raise ValueError("mean_last_n must be >= 1")


@dataclass
class ExtractReport:
    sentences: int = 0
    records: int = 0
    truncated_sentences: int = 0
    dimension: int = 0
    model_tag: str = ""
    record_counts: dict = field(default_factory=dict)
    lost_to_truncation: dict = field(default_factory=dict)
    skipped_targets: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sentences": self.sentences,
            "records": self.records,
            "truncated_sentences": self.truncated_sentences,
            "dimension": self.dimension,
            "model_tag": self.model_tag,
            "record_counts": dict(sorted(self.record_counts.items())),
            "lost_to_truncation": dict(sorted(self.lost_to_truncation.items())),
            "skipped_targets": list(self.skipped_targets),
        }


def _load_model(config: ExtractorConfig):
    try:
        tokenizer = AutoTokenizer.from_pretrained(config.model)
        model = AutoModel.from_pretrained(config.model)
    except Exception as exc:
        raise ExtractorError(f"cannot load model {config.model!r}: {exc}") from exc
    if not tokenizer.is_fast:
        raise ExtractorError("a fast tokenizer is required for word alignment")
    model.eval()
    model.to(config.device)
    return tokenizer, model


def _select_layer(hidden_states, config: ExtractorConfig) -> torch.Tensor:
    n_states = len(hidden_states)
    if config.mean_last_n is not None:
        if config.mean_last_n > n_states:
            raise ExtractorError(
                f"mean_last_n={config.mean_last_n} but the model exposes {n_states} states"
            )
        return torch.stack(hidden_states[-config.mean_last_n:]).mean(dim=0)
    if not -n_states <= config.layer < n_states:
        raise ExtractorError(f"layer {config.layer} out of range for {n_states} hidden states")
    return hidden_states[config.layer]


def _model_tag(config: ExtractorConfig) -> str:
    base = Path(config.model).name or "model"
    if config.mean_last_n is not None:
        suffix = f"Lmean{config.mean_last_n}"
    else:
        suffix = f"L{config.layer}"
    tag = f"{base}-{suffix}"
    return "".join(ch if not ch.isspace() else "_" for ch in tag)


def read_sentences(path) -> list[list[str]]:
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            words = line.split()
            if words:
                sentences.append(words)
    return sentences


def read_targets(path) -> set[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


def extract(
    sentences_path,
    out_path,
    config: ExtractorConfig,
    targets: set[str] | None = None,
) -> ExtractReport:
    """Run the model over every sentence and write one stream record per
    occurrence of each target word (every word when ``targets`` is None).

    Sentences longer than the model budget are truncated; the report counts
    affected sentences and, per token, the occurrences lost that way.
    Matching is case-sensitive: the corpus export is already lowercased.
    """
    tokenizer, model = _load_model(config)
    sentences = read_sentences(sentences_path)
    report = ExtractReport(model_tag=_model_tag(config))
    if targets is not None:
        report.record_counts = {t: 0 for t in targets}
        report.lost_to_truncation = {}

    dim: int | None = None
    with open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for lo in range(0, len(sentences), config.batch_size):
            batch = sentences[lo:lo + config.batch_size]
            enc = tokenizer(
                batch,
                is_split_into_words=True,
                padding=True,
                truncation=True,
                max_length=config.max_seq_len,
                return_tensors="pt",
            )
            inputs = {k: v.to(config.device) for k, v in enc.items()}
            with torch.no_grad():
                output = model(**inputs, output_hidden_states=True)
            mat = _select_layer(output.hidden_states, config)
            if dim is None:
                dim = int(mat.shape[-1])
                report.dimension = dim
                out.write(f"DECTX {dim} {report.model_tag}\n")
            for i, words in enumerate(batch):
                report.sentences += 1
                word_ids = enc.word_ids(i)
                if word_ids is None:
                    raise ExtractorError("tokenizer did not produce word alignments")
                pieces: dict[int, list[int]] = {}
                for pos, wid in enumerate(word_ids):
                    if wid is not None:
                        pieces.setdefault(wid, []).append(pos)
                covered = max(pieces) + 1 if pieces else 0
                if covered < len(words):
                    report.truncated_sentences += 1
                    for word in words[covered:]:
                        if targets is None or word in targets:
                            report.lost_to_truncation[word] = (
                                report.lost_to_truncation.get(word, 0) + 1
                            )
                for wid in sorted(pieces):
                    word = words[wid]
                    if targets is not None and word not in targets:
                        continue
                    vec = mat[i, pieces[wid]].mean(dim=0)
                    values = np.asarray(vec.cpu().numpy(), dtype=np.float64)
                    out.write(word + "\t" + " ".join(f"{x:.17g}" for x in values) + "\n")
                    report.records += 1
                    report.record_counts[word] = report.record_counts.get(word, 0) + 1
        if dim is None:
            # no sentences at all: still emit a valid (empty) stream header
            probe = model.config.hidden_size
            report.dimension = int(probe)
            out.write(f"DECTX {report.dimension} {report.model_tag}\n")

    if targets is not None:
        report.skipped_targets = sorted(t for t in targets if report.record_counts.get(t, 0) == 0)
        if report.records == 0:
            raise ExtractorError("no target token occurs in the corpus export")
    return report
