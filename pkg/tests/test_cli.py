import json

import numpy as np
import pytest

from biasaudit.cli import main
from biasaudit.corpus import Corpus, Orientation, save_corpus
from biasaudit.embeddings import load_text, save_text
from biasaudit.pooling import write_stream
from conftest import planted_gender_articles
from test_harness import gender_space_with_effect


@pytest.fixture(scope="module")
def corpus_jsonl(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "articles.jsonl"
    records = []
    for i, art in enumerate(planted_gender_articles(250, align=1.0, seed=4)):
        records.append(
            {
                "id": art.id,
                "text": art.text,
                "outlet": art.outlet,
                "orientation": "left",
                "date": f"20{10 + i % 3}-01-01",
                "language": "en",
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def test_ingest_and_slice(tmp_path, corpus_jsonl, capsys):
    store = tmp_path / "store"
    assert main(["ingest", "--input", str(corpus_jsonl), "--out", str(store)]) == 0
    out = capsys.readouterr().out
    assert "loaded 250 articles" in out
    assert (store / "articles.jsonl").exists()
    assert (store / "manifest.json").exists()

    assert main(["slice", "--corpus", str(store), "--orientation", "liberal",
                 "--year", "2010"]) == 0
    out = capsys.readouterr().out
    assert "articles match" in out


def test_train_and_weat(tmp_path, corpus_jsonl, capsys):
    store = tmp_path / "store"
    main(["ingest", "--input", str(corpus_jsonl), "--out", str(store)])
    capsys.readouterr()
    emb = tmp_path / "emb.txt"
    rc = main([
        "train", "--corpus", str(store), "--orientation", "liberal",
        "--dim", "16", "--window", "3", "--epochs", "2", "--subsample", "0",
        "--min-count", "1", "--seed", "42", "--deterministic", "--out", str(emb),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "epoch losses" in out
    space = load_text(emb)
    assert space.dim == 16

    result_path = tmp_path / "weat.json"
    rc = main(["weat", "--embeddings", str(emb), "--spec", "gender",
               "--permutations", "300", "--seed", "7", "--out", str(result_path)])
    assert rc == 0
    payload = json.loads(result_path.read_text())
    assert "effect_size" in payload and payload["seed"] == 7


def test_pool_and_validate_stream(tmp_path, capsys):
    stream = tmp_path / "ctx.dectx"
    rng = np.random.default_rng(0)
    write_stream(stream, 3, "toy", [("cat", rng.normal(size=3)) for _ in range(4)])
    emb = tmp_path / "pooled.txt"
    assert main(["pool", "--stream", str(stream), "--out", str(emb)]) == 0
    capsys.readouterr()
    assert load_text(emb).dim == 3

    assert main(["validate-stream", "--stream", str(stream), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["valid"] is True and payload["record_count"] == 4

    bad = tmp_path / "bad.dectx"
    bad.write_text("DECTX 2 toy\nx\t1\n", encoding="utf-8")
    assert main(["validate-stream", "--stream", str(bad)]) == 1


def test_export_sentences_and_tokens(tmp_path, corpus_jsonl, capsys):
    store = tmp_path / "store"
    main(["ingest", "--input", str(corpus_jsonl), "--out", str(store)])
    sentences = tmp_path / "sentences.txt"
    tokens = tmp_path / "tokens.txt"
    rc = main(["export", "--corpus", str(store), "--sentences", str(sentences),
               "--tokens", str(tokens), "--measure", "gender"])
    assert rc == 0
    capsys.readouterr()
    lines = sentences.read_text().splitlines()
    assert lines and all(line == line.lower() for line in lines)
    token_list = tokens.read_text().split()
    assert "career" in token_list and "woman" in token_list


def test_run_and_emit(tmp_path, corpus_jsonl, capsys):
    store = tmp_path / "store"
    main(["ingest", "--input", str(corpus_jsonl), "--out", str(store)])
    lib = tmp_path / "lib.txt"
    save_text(gender_space_with_effect(0.3), lib)
    plan = {
        "corpus": str(store),
        "slices": [{"name": "liberal", "orientations": ["liberal"]}],
        "algorithms": [{"kind": "import", "label": "ext", "paths": {"liberal": str(lib)}}],
        "measures": {"weat": ["gender"]},
        "permutations": 100,
        "seed": 2,
    }
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(plan), encoding="utf-8")
    outdir = tmp_path / "results"
    assert main(["run", "--plan", str(plan_path), "--out", str(outdir)]) == 0
    capsys.readouterr()
    assert (outdir / "results.json").exists()

    assert main(["emit", "--input", str(outdir / "results.json"),
                 "--format", "csv", "--out", str(outdir)]) == 0
    capsys.readouterr()
    assert (outdir / "cells.csv").exists()


def test_temporal_cli(tmp_path, capsys):
    articles = []
    for year in (2010, 2011, 2012):
        articles.extend(
            planted_gender_articles(
                200, align=1.0, seed=year, orientation=Orientation.LIBERAL,
                year=year, id_prefix=f"y{year}-",
            )
        )
    store = tmp_path / "store"
    save_corpus(Corpus(articles), store)
    outdir = tmp_path / "out"
    rc = main([
        "temporal", "--corpus", str(store), "--orientation", "liberal",
        "--from", "2010", "--to", "2012", "--measure", "gender",
        "--dim", "16", "--epochs", "2", "--subsample", "0", "--min-count", "1",
        "--seed", "5", "--out", str(outdir),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "600/600 dated articles used" in out
    assert (outdir / "temporal.json").exists()
    assert main(["emit", "--input", str(outdir / "temporal.json"),
                 "--format", "plotdata", "--out", str(outdir)]) == 0


def test_cli_error_paths(tmp_path, capsys):
    assert main(["ingest", "--input", str(tmp_path / "missing.jsonl"),
                 "--out", str(tmp_path / "s")]) == 2
    err = capsys.readouterr().err
    assert "error:" in err
