"""Fixtures: a tiny randomly initialized local model the tests can load
without any network access, plus a 10-article corpus export."""

import os

import pytest
import torch

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

WORDS = [
    "the", "cat", "sat", "mat", "dog", "ran", "park", "big", "slept",
    "un", "##happiness", "house", "bird", "flew",
]
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
HIDDEN_SIZE = 32

# ten articles, one sentence each, pre-tokenized and lowercased the way the
# toolkit's corpus export emits them; "unhappiness" forces a sub-word split
SENTENCES = [
    "the cat sat",
    "the dog ran",
    "the cat slept",
    "unhappiness ran deep",
    "the bird flew",
    "a big house",
    "the dog sat",
    "cat and dog",
    "the mat sat",
    "big unhappiness came",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    from transformers import BertConfig, BertModel, BertTokenizerFast

    outdir = tmp_path_factory.mktemp("model") / "tiny-bert"
    vocab_path = tmp_path_factory.mktemp("vocab") / "vocab.txt"
    vocab_path.write_text("\n".join(SPECIALS + WORDS) + "\n", encoding="utf-8")
    try:
        tokenizer = BertTokenizerFast(vocab=str(vocab_path), do_lower_case=True)
    except TypeError:  # older transformers used vocab_file=
        tokenizer = BertTokenizerFast(vocab_file=str(vocab_path), do_lower_case=True)
    assert tokenizer.vocab_size == len(SPECIALS) + len(WORDS)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    model = BertModel(config)
    model.eval()
    tokenizer.save_pretrained(outdir)
    model.save_pretrained(outdir)
    return outdir


@pytest.fixture(scope="session")
def sentences_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "sentences.txt"
    path.write_text("\n".join(SENTENCES) + "\n", encoding="utf-8")
    return path


def occurrences(token: str) -> int:
    return sum(sent.split().count(token) for sent in SENTENCES)
