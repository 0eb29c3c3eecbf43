import numpy as np
import pytest

from biasaudit.pooling import (
    PoolAccumulator,
    StreamFormatError,
    pool_file,
    pool_records,
    read_stream,
    validate_stream,
    write_stream,
)


def _records(*items):
    return [(tok, np.asarray(vec, dtype=np.float64)) for tok, vec in items]


def test_single_record_mean_is_identity():
    space = pool_records(_records(("x", [1.0, 2.0])), dim=2)
    assert np.array_equal(space.vector("x"), [1.0, 2.0])


def test_two_record_average():
    space = pool_records(_records(("x", [1.0, 0.0]), ("x", [0.0, 1.0])), dim=2)
    assert np.array_equal(space.vector("x"), [0.5, 0.5])


def test_absent_token_is_oov():
    space = pool_records(_records(("x", [1.0]), ("y", [2.0])), dim=1)
    assert space.lookup("z").is_oov


def test_empty_stream_errors():
    with pytest.raises(ValueError, match="empty stream"):
        pool_records([], dim=3)


def test_dimension_conflict_errors():
    with pytest.raises(StreamFormatError):
        pool_records(_records(("x", [1.0, 2.0]), ("x", [1.0])), dim=2)


def test_constant_context_identity_is_exact():
    vec = np.array([0.123456789, -7.25, 3.5])
    space = pool_records(_records(*[("t", vec)] * 97), dim=3)
    assert np.array_equal(space.vector("t"), vec)


def test_permutation_invariance():
    rng = np.random.default_rng(8)
    records = []
    for i in range(400):
        tok = f"w{int(rng.integers(0, 12))}"
        records.append((tok, rng.normal(size=5) * 10.0 ** rng.integers(-3, 4)))
    base = pool_records(list(records), dim=5)
    for seed in range(3):
        shuffled = list(records)
        np.random.default_rng(seed).shuffle(shuffled)
        other = pool_records(shuffled, dim=5)
        assert other.tokens == base.tokens
        assert np.max(np.abs(other.matrix - base.matrix)) <= 1e-12


def test_mean_stays_in_componentwise_hull():
    rng = np.random.default_rng(9)
    vecs = [rng.normal(size=4) for _ in range(25)]
    space = pool_records([("t", v) for v in vecs], dim=4)
    stack = np.vstack(vecs)
    assert np.all(space.vector("t") >= stack.min(axis=0) - 1e-15)
    assert np.all(space.vector("t") <= stack.max(axis=0) + 1e-15)


def test_single_pass_matches_two_pass():
    rng = np.random.default_rng(10)
    records = [(f"w{i % 7}", rng.normal(size=3)) for i in range(300)]
    streaming = pool_records(list(records), dim=3)
    grouped: dict[str, list[np.ndarray]] = {}
    for tok, vec in records:
        grouped.setdefault(tok, []).append(vec)
    for tok, vecs in grouped.items():
        two_pass = np.vstack(vecs).mean(axis=0)
        assert np.max(np.abs(streaming.vector(tok) - two_pass)) <= 1e-10


def test_accumulator_merge_is_order_free():
    rng = np.random.default_rng(12)
    records = [(f"w{i % 5}", rng.normal(size=3)) for i in range(100)]
    whole = PoolAccumulator(3)
    for tok, vec in records:
        whole.add(tok, vec)
    left, right = PoolAccumulator(3), PoolAccumulator(3)
    for i, (tok, vec) in enumerate(records):
        (left if i % 2 == 0 else right).add(tok, vec)
    left.merge(right)
    a = whole.to_space()
    b = left.to_space()
    assert a.tokens == b.tokens
    assert np.max(np.abs(a.matrix - b.matrix)) <= 1e-10
    assert left.counts() == whole.counts()


def test_stream_file_round_trip(tmp_path):
    path = tmp_path / "ctx.dectx"
    rng = np.random.default_rng(2)
    records = [("alpha", rng.normal(size=4)), ("beta", rng.normal(size=4)),
               ("alpha", rng.normal(size=4))]
    assert write_stream(path, 4, "toy-model-L-1", records) == 3
    header, rows = read_stream(path)
    assert header.dim == 4 and header.model_tag == "toy-model-L-1"
    loaded = list(rows)
    assert [t for t, _ in loaded] == ["alpha", "beta", "alpha"]
    for (_, got), (_, want) in zip(loaded, records):
        assert np.array_equal(got, want)
    space = pool_file(path)
    assert space.metadata["model_tag"] == "toy-model-L-1"
    assert np.allclose(space.vector("alpha"), (records[0][1] + records[2][1]) / 2)


def test_validate_stream_well_formed(tmp_path):
    path = tmp_path / "ok.dectx"
    write_stream(path, 2, "m", _records(("a", [1, 2]), ("b", [3, 4]), ("a", [5, 6])))
    report = validate_stream(path)
    assert report.valid
    assert report.record_count == 3
    assert report.distinct_tokens == 2
    assert report.dimension == 2


def test_validate_stream_flags_bad_record(tmp_path):
    path = tmp_path / "bad.dectx"
    path.write_text(
        "DECTX 4 m\n"
        "good\t1 2 3 4\n"
        "wide\t1 2 3 4 5\n"
        "short\t1 2\n"
        "nan\t1 2 nan 4\n"
        "notab 1 2 3 4\n",
        encoding="utf-8",
    )
    report = validate_stream(path)
    assert not report.valid
    assert report.record_count == 1
    assert [line for line, _ in report.errors] == [3, 4, 5, 6]


def test_validate_stream_empty_body_is_valid(tmp_path):
    path = tmp_path / "empty.dectx"
    path.write_text("DECTX 3 m\n", encoding="utf-8")
    report = validate_stream(path)
    assert report.valid and report.record_count == 0


def test_validate_stream_bad_header(tmp_path):
    path = tmp_path / "hdr.dectx"
    path.write_text("WRONG 3\n", encoding="utf-8")
    with pytest.raises(StreamFormatError):
        validate_stream(path)


def test_read_stream_raises_with_line_number(tmp_path):
    path = tmp_path / "mid.dectx"
    path.write_text("DECTX 2 m\na\t1 2\nb\t1\n", encoding="utf-8")
    _, rows = read_stream(path)
    with pytest.raises(StreamFormatError, match="line 3"):
        list(rows)
