import json
import subprocess

import numpy as np
import pytest
import torch

from biasaudit_extractor import ExtractorConfig, ExtractorError, extract
from biasaudit_extractor.cli import main
from conftest import HIDDEN_SIZE, SENTENCES, occurrences


def run_extract(tiny_model_dir, sentences_file, out, targets=None, **kwargs):
    config = ExtractorConfig(model=str(tiny_model_dir), **kwargs)
    return extract(sentences_file, out, config, targets)


def test_occurrence_counting(tiny_model_dir, sentences_file, tmp_path):
    out = tmp_path / "cat.dectx"
    report = run_extract(tiny_model_dir, sentences_file, out, targets={"cat"})
    assert report.records == occurrences("cat")
    assert report.record_counts["cat"] == occurrences("cat")
    lines = out.read_text().splitlines()
    assert lines[0] == f"DECTX {HIDDEN_SIZE} {report.model_tag}"
    assert len(lines) == 1 + occurrences("cat")


def test_absent_word_zero_records_in_skip_report(tiny_model_dir, sentences_file, tmp_path):
    out = tmp_path / "mixed.dectx"
    report = run_extract(tiny_model_dir, sentences_file, out, targets={"cat", "zebra"})
    assert report.record_counts.get("zebra", 0) == 0
    assert report.skipped_targets == ["zebra"]
    assert report.records == occurrences("cat")


def test_stream_passes_primary_validator(tiny_model_dir, sentences_file, tmp_path):
    """Cross-component contract: the emitted bytes must satisfy the
    toolkit's own stream checker, invoked through its CLI."""
    out = tmp_path / "all.dectx"
    report = run_extract(tiny_model_dir, sentences_file, out)  # every word
    proc = subprocess.run(
        ["biasaudit", "validate-stream", "--stream", str(out), "--json"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["valid"] is True
    assert payload["errors"] == []
    assert payload["record_count"] == report.records
    assert payload["dimension"] == HIDDEN_SIZE
    # one record per word occurrence in the export
    total_words = sum(len(s.split()) for s in SENTENCES)
    assert report.records == total_words


def test_per_token_counts_equal_occurrences(tiny_model_dir, sentences_file, tmp_path):
    out = tmp_path / "all.dectx"
    report = run_extract(tiny_model_dir, sentences_file, out)
    assert report.truncated_sentences == 0
    for token, count in report.record_counts.items():
        assert count == occurrences(token), token


def test_pooled_space_dimension_equals_hidden_size(tiny_model_dir, sentences_file, tmp_path):
    out = tmp_path / "all.dectx"
    run_extract(tiny_model_dir, sentences_file, out)
    pooled = tmp_path / "pooled.txt"
    proc = subprocess.run(
        ["biasaudit", "pool", "--stream", str(out), "--out", str(pooled)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    header = pooled.read_text().splitlines()[0].split()
    assert int(header[1]) == HIDDEN_SIZE


def test_subword_pieces_average_into_one_record(tiny_model_dir, tmp_path):
    sentence = tmp_path / "one.txt"
    sentence.write_text("unhappiness ran\n", encoding="utf-8")
    out = tmp_path / "sub.dectx"
    report = run_extract(tiny_model_dir, sentence, out, targets={"unhappiness"})
    assert report.records == 1

    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(str(tiny_model_dir))
    model = AutoModel.from_pretrained(str(tiny_model_dir))
    model.eval()
    enc = tokenizer([["unhappiness", "ran"]], is_split_into_words=True, return_tensors="pt")
    assert len([w for w in enc.word_ids(0) if w == 0]) == 2  # two pieces
    with torch.no_grad():
        hidden = model(**enc, output_hidden_states=True).hidden_states[-1]
    positions = [i for i, w in enumerate(enc.word_ids(0)) if w == 0]
    expected = hidden[0, positions].mean(dim=0).numpy()

    line = out.read_text().splitlines()[1]
    token, _, values = line.partition("\t")
    assert token == "unhappiness"
    got = np.array([float(v) for v in values.split()])
    assert np.allclose(got, expected, atol=1e-6)


def test_truncation_is_counted_exactly(tiny_model_dir, tmp_path):
    sentence = tmp_path / "long.txt"
    sentence.write_text("the cat sat mat dog ran park\nthe cat sat\n", encoding="utf-8")
    out = tmp_path / "trunc.dectx"
    # room for [CLS] + 4 pieces + [SEP]
    report = run_extract(tiny_model_dir, sentence, out, max_seq_len=6)
    assert report.truncated_sentences == 1
    emitted = report.records
    lost = sum(report.lost_to_truncation.values())
    assert emitted + lost == 10  # every word occurrence accounted for
    assert report.lost_to_truncation == {"dog": 1, "ran": 1, "park": 1}


def test_empty_target_intersection_errors(tiny_model_dir, sentences_file, tmp_path):
    with pytest.raises(ExtractorError, match="no target token"):
        run_extract(tiny_model_dir, sentences_file, tmp_path / "x.dectx",
                    targets={"zebra", "quokka"})


def test_layer_selection(tiny_model_dir, sentences_file, tmp_path):
    out_last = tmp_path / "last.dectx"
    out_mean = tmp_path / "mean.dectx"
    run_extract(tiny_model_dir, sentences_file, out_last, targets={"cat"}, layer=-1)
    run_extract(tiny_model_dir, sentences_file, out_mean, targets={"cat"}, mean_last_n=3)
    assert out_last.read_text() != out_mean.read_text()
    assert "Lmean3" in out_mean.read_text().splitlines()[0]
    with pytest.raises(ExtractorError, match="layer"):
        run_extract(tiny_model_dir, sentences_file, tmp_path / "bad.dectx",
                    targets={"cat"}, layer=7)
    with pytest.raises(ExtractorError, match="mean_last_n"):
        run_extract(tiny_model_dir, sentences_file, tmp_path / "bad2.dectx",
                    targets={"cat"}, mean_last_n=9)


def test_unknown_model_errors(sentences_file, tmp_path):
    with pytest.raises(ExtractorError, match="cannot load model"):
        run_extract("/nonexistent/model-dir", sentences_file, tmp_path / "x.dectx")


def test_cli_round_trip(tiny_model_dir, sentences_file, tmp_path, capsys):
    tokens = tmp_path / "tokens.txt"
    tokens.write_text("cat\ndog\n", encoding="utf-8")
    out = tmp_path / "cli.dectx"
    report_path = tmp_path / "report.json"
    rc = main([
        "--sentences", str(sentences_file), "--tokens", str(tokens),
        "--model", str(tiny_model_dir), "--out", str(out),
        "--report", str(report_path), "--batch-size", "4",
    ])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "records" in printed
    payload = json.loads(report_path.read_text())
    assert payload["record_counts"]["cat"] == occurrences("cat")
    assert payload["record_counts"]["dog"] == occurrences("dog")
    assert payload["dimension"] == HIDDEN_SIZE
