"""Experiment orchestration over the (algorithm x slice x measure) matrix.

A plan names corpus slices, embedding producers (trained, pooled from a
context-vector stream, or imported from any text-format file), and the
measures to run. Cells fail independently: one broken cell carries an
error marker and every other cell still computes. The temporal runner
trains one model per (orientation, year) and fits an ordinary
least-squares trend per series.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, CorpusView, Orientation, build_vocab, load_corpus, slice_corpus
from .embeddings import EmbeddingSpace, load_text, save_text
from .pooling import pool_file
from .sgns import TrainConfig, train
from .simeval import SimilarityBenchmark, evaluate, load_benchmark, rare_token_subset
from .weat import cross_algorithm_variance, delta_accuracy, evaluate_weat, resolve_spec

OUTPUT_DIR_ENV = "BIASAUDIT_OUT"


def resolve_output_dir(explicit=None) -> Path:
    """CLI output directory, overridable by the environment."""
    env = os.environ.get(OUTPUT_DIR_ENV, "").strip()
    if explicit is not None:
        return Path(explicit)
    if env:
        return Path(env)
    return Path(".")


@dataclass(frozen=True)
class SliceSpec:
    name: str
    orientations: tuple[str, ...] | None = None
    years: tuple[int, ...] | None = None

    def materialize(self, corpus: Corpus) -> CorpusView:
        return slice_corpus(corpus, self.orientations, self.years)


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    path: str
    format: str = "tab_separated"
    rare_k: int | None = None

    def load(self) -> SimilarityBenchmark:
        return load_benchmark(self.path, self.format, name=self.name)


@dataclass(frozen=True)
class AlgorithmSpec:
    """One embedding producer. ``kind`` selects the route:

    - "sgns": train on the slice with ``train_config`` and the vocab policy
    - "import": read a ready-made text-format file per slice (``paths``)
    - "pooled": average a context-vector stream per slice (``streams``)
    """

    label: str
    kind: str
    train_config: TrainConfig | None = None
    vocab_min_count: int | None = 5
    vocab_max_size: int | None = None
    paths: dict = field(default_factory=dict)
    streams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("sgns", "import", "pooled"):
            raise ValueError(f"unknown algorithm kind {self.kind!r}")
        if self.kind == "sgns" and self.train_config is None:
            object.__setattr__(self, "train_config", TrainConfig())


@dataclass(frozen=True)
class ExperimentPlan:
    corpus_path: str
    slices: tuple[SliceSpec, ...]
    algorithms: tuple[AlgorithmSpec, ...]
    weat_tests: tuple[str, ...] = ()
    benchmarks: tuple[BenchmarkSpec, ...] = ()
    permutations: int = 10_000
    seed: int = 0
    cache_dir: str | None = None

    def __post_init__(self):
        if not self.slices:
            raise ValueError("plan has no slices")
        if not self.algorithms:
            raise ValueError("plan has no algorithms")
        if not self.weat_tests and not self.benchmarks:
            raise ValueError("plan has no measures")
        for algo in self.algorithms:
            for path in list(algo.paths.values()) + list(algo.streams.values()):
                if not Path(path).exists():
                    raise FileNotFoundError(f"{algo.label}: missing input {path}")


def load_plan(path) -> ExperimentPlan:
    """Parse a JSON plan file (fields mirror ExperimentPlan)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    slices = tuple(
        SliceSpec(
            name=s["name"],
            orientations=tuple(s["orientations"]) if s.get("orientations") else None,
            years=tuple(int(y) for y in s["years"]) if s.get("years") else None,
        )
        for s in data.get("slices", [])
    )
    algorithms = []
    for a in data.get("algorithms", []):
        cfg = None
        if a.get("config"):
            cfg = TrainConfig(**a["config"])
        vocab_cfg = a.get("vocab", {})
        min_count = vocab_cfg.get("min_count")
        max_size = vocab_cfg.get("max_size")
        if min_count is None and max_size is None:
            min_count = 5
        algorithms.append(
            AlgorithmSpec(
                label=a.get("label", a["kind"]),
                kind=a["kind"],
                train_config=cfg,
                vocab_min_count=min_count,
                vocab_max_size=max_size,
                paths=dict(a.get("paths", {})),
                streams=dict(a.get("streams", {})),
            )
        )
    measures = data.get("measures", {})
    benchmarks = tuple(
        BenchmarkSpec(
            name=b.get("name", Path(b["path"]).stem),
            path=b["path"],
            format=b.get("format", "tab_separated"),
            rare_k=b.get("rare_k"),
        )
        for b in measures.get("benchmarks", [])
    )
    return ExperimentPlan(
        corpus_path=data["corpus"],
        slices=slices,
        algorithms=tuple(algorithms),
        weat_tests=tuple(measures.get("weat", [])),
        benchmarks=benchmarks,
        permutations=int(data.get("permutations", 10_000)),
        seed=int(data.get("seed", 0)),
        cache_dir=data.get("cache_dir"),
    )


@dataclass(frozen=True)
class Cell:
    algorithm: str
    slice: str
    measure: str
    kind: str  # "weat" | "similarity"
    value: float | None = None
    p_value: float | None = None
    detail: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "slice": self.slice,
            "measure": self.measure,
            "kind": self.kind,
            "value": self.value,
            "p_value": self.p_value,
            "detail": self.detail,
            "error": self.error,
        }


@dataclass
class ResultTable:
    cells: list[Cell]
    provenance: dict

    def cell(self, algorithm: str, slice_name: str, measure: str) -> Cell:
        for c in self.cells:
            if (c.algorithm, c.slice, c.measure) == (algorithm, slice_name, measure):
                return c
        raise KeyError((algorithm, slice_name, measure))

    def deltas(self) -> list[dict]:
        """Conservative-minus-liberal differences per (algorithm, measure),
        computed from the pure single-orientation slices when the plan has
        exactly one of each."""
        lib = [c for c in self.cells if c.detail.get("orientations") == ["liberal"]]
        con = [c for c in self.cells if c.detail.get("orientations") == ["conservative"]]
        out = []
        for c_cell in con:
            if c_cell.kind != "weat" or c_cell.error or c_cell.value is None:
                continue
            for l_cell in lib:
                if (
                    l_cell.algorithm == c_cell.algorithm
                    and l_cell.measure == c_cell.measure
                    and not l_cell.error
                    and l_cell.value is not None
                    and l_cell.detail.get("years") == c_cell.detail.get("years")
                ):
                    out.append(
                        {
                            "algorithm": c_cell.algorithm,
                            "measure": c_cell.measure,
                            "conservative": c_cell.value,
                            "liberal": l_cell.value,
                            "delta": delta_accuracy(c_cell.value, l_cell.value),
                        }
                    )
        return out

    def variances(self) -> list[dict]:
        """Sample variance of each (slice, measure) across algorithms."""
        groups: dict[tuple[str, str], dict[str, float]] = {}
        for c in self.cells:
            if c.kind != "weat" or c.error or c.value is None:
                continue
            groups.setdefault((c.slice, c.measure), {})[c.algorithm] = c.value
        out = []
        for (slice_name, measure), values in sorted(groups.items()):
            if len(values) < 2:
                continue
            out.append(
                {
                    "slice": slice_name,
                    "measure": measure,
                    "values": dict(sorted(values.items())),
                    "variance": cross_algorithm_variance(values.values()),
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "result_table",
            "cells": [c.to_dict() for c in self.cells],
            "deltas": self.deltas(),
            "variances": self.variances(),
            "provenance": self.provenance,
        }

    @staticmethod
    def from_dict(data: dict) -> "ResultTable":
        cells = [
            Cell(
                algorithm=c["algorithm"],
                slice=c["slice"],
                measure=c["measure"],
                kind=c["kind"],
                value=c.get("value"),
                p_value=c.get("p_value"),
                detail=c.get("detail", {}),
                error=c.get("error"),
            )
            for c in data["cells"]
        ]
        table = ResultTable(cells, data.get("provenance", {}))
        # emitted deltas/variances must be recomputable from the raw cells
        for stored, fresh in (("deltas", table.deltas()), ("variances", table.variances())):
            if data.get(stored) is not None and not _close_records(data[stored], fresh):
                raise ValueError(f"result table {stored} are inconsistent with its cells")
        return table


def _close_records(a, b, tol: float = 1e-9) -> bool:
    def normalize(obj):
        if isinstance(obj, float):
            return round(obj, 12)
        if isinstance(obj, dict):
            return {k: normalize(v) for k, v in sorted(obj.items())}
        if isinstance(obj, list):
            return [normalize(v) for v in obj]
        return obj

    return normalize(a) == normalize(b)


def _slice_fingerprint(view: CorpusView) -> str:
    h = hashlib.sha256()
    h.update(view.descriptor().encode())
    for aid in view.ids:
        h.update(aid.encode())
        h.update(b"\x00")
    return h.hexdigest()[:16]


def _config_fingerprint(algo: AlgorithmSpec) -> str:
    payload = {
        "kind": algo.kind,
        "min_count": algo.vocab_min_count,
        "max_size": algo.vocab_max_size,
        "train": None,
    }
    if algo.train_config is not None:
        payload["train"] = asdict(algo.train_config)
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _produce_space(
    algo: AlgorithmSpec, slice_spec: SliceSpec, view: CorpusView, cache_dir: str | None
) -> tuple[EmbeddingSpace, dict]:
    """Build or load the embedding space for one (algorithm, slice) cell."""
    prov: dict = {"kind": algo.kind}
    if algo.kind == "import":
        path = algo.paths.get(slice_spec.name)
        if path is None:
            raise ValueError(f"no import path configured for slice {slice_spec.name!r}")
        prov["path"] = str(path)
        return load_text(path, {"algorithm": "import", "source": str(path)}), prov
    if algo.kind == "pooled":
        path = algo.streams.get(slice_spec.name)
        if path is None:
            raise ValueError(f"no stream configured for slice {slice_spec.name!r}")
        prov["path"] = str(path)
        return pool_file(path), prov

    slice_hash = _slice_fingerprint(view)
    config_hash = _config_fingerprint(algo)
    prov.update({"slice_hash": slice_hash, "config_hash": config_hash, "cached": False})
    cache_path = None
    if cache_dir:
        cache_path = Path(cache_dir) / f"sgns-{slice_hash}-{config_hash}.txt"
        if cache_path.exists():
            prov["cached"] = True
            return load_text(cache_path, {"algorithm": "sgns", "source": "cache"}), prov
    vocab = build_vocab(
        view,
        min_count=algo.vocab_min_count if algo.vocab_max_size is None else None,
        max_size=algo.vocab_max_size,
        config=algo.train_config.tokenize,
    )
    space = train(view, vocab, algo.train_config)
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        save_text(space, cache_path)
    return space, prov


def run(plan: ExperimentPlan, corpus: Corpus | None = None) -> ResultTable:
    """Execute every (algorithm, slice, measure) cell of the plan.

    Per-cell failures (training errors, fully-OOV word lists, unreadable
    imports) become error markers on the affected cells only.
    """
    if corpus is None:
        corpus = _load_any_corpus(plan.corpus_path)
    weat_specs = [resolve_spec(name) for name in plan.weat_tests]
    benchmarks = [(b, b.load()) for b in plan.benchmarks]

    cells: list[Cell] = []
    slice_vocabs: dict[str, object] = {}
    for algo in plan.algorithms:
        for slice_spec in plan.slices:
            view = slice_spec.materialize(corpus)
            slice_detail = {
                "orientations": list(slice_spec.orientations) if slice_spec.orientations else None,
                "years": list(slice_spec.years) if slice_spec.years else None,
                "articles": len(view),
            }
            try:
                space, prov = _produce_space(algo, slice_spec, view, plan.cache_dir)
            except Exception as exc:  # cell isolation: record, move on
                for m_name, m_kind in _measure_names(weat_specs, benchmarks):
                    cells.append(
                        Cell(algo.label, slice_spec.name, m_name, m_kind,
                             detail=dict(slice_detail), error=f"space: {exc}")
                    )
                continue
            for spec in weat_specs:
                cells.append(
                    _weat_cell(algo.label, slice_spec.name, spec, space, plan, slice_detail, prov)
                )
            for bench_spec, bench in benchmarks:
                cells.append(
                    _similarity_cell(algo.label, slice_spec.name, bench.name, bench, space,
                                     slice_detail, prov)
                )
                if bench_spec.rare_k:
                    cells.append(
                        _rare_cell(algo.label, slice_spec, bench_spec, bench, space, view,
                                   slice_vocabs, slice_detail, prov)
                    )
    provenance = {
        "seed": plan.seed,
        "permutations": plan.permutations,
        "corpus": str(plan.corpus_path),
        "slices": [s.name for s in plan.slices],
        "algorithms": [a.label for a in plan.algorithms],
    }
    return ResultTable(cells, provenance)


def _measure_names(weat_specs, benchmarks) -> list[tuple[str, str]]:
    names = [(s.name, "weat") for s in weat_specs]
    for bench_spec, bench in benchmarks:
        names.append((bench.name, "similarity"))
        if bench_spec.rare_k:
            names.append((f"{bench.name}:rare{bench_spec.rare_k}", "similarity"))
    return names


def _weat_cell(algo, slice_name, spec, space, plan, slice_detail, prov) -> Cell:
    try:
        res = evaluate_weat(spec, space, n_permutations=plan.permutations, seed=plan.seed)
        detail = dict(slice_detail)
        detail.update(prov)
        detail.update(
            {
                "resolved_sizes": res.resolved_sizes,
                "oov": {k: list(v) for k, v in res.oov.items()},
                "p_method": res.p_method,
                "n_permutations": res.n_permutations,
                "exceeds_nominal_range": res.exceeds_nominal_range,
            }
        )
        return Cell(algo, slice_name, spec.name, "weat", res.effect_size, res.p_value, detail)
    except Exception as exc:
        return Cell(algo, slice_name, spec.name, "weat", detail=dict(slice_detail), error=str(exc))


def _similarity_cell(algo, slice_name, measure_name, bench, space, slice_detail, prov) -> Cell:
    try:
        res = evaluate(space, bench)
        detail = dict(slice_detail)
        detail.update(prov)
        detail.update({"evaluated_pairs": res.evaluated_pairs, "skipped_pairs": res.skipped_pairs})
        return Cell(algo, slice_name, measure_name, "similarity", res.rho, None, detail)
    except Exception as exc:
        return Cell(algo, slice_name, measure_name, "similarity",
                     detail=dict(slice_detail), error=str(exc))


def _rare_cell(algo, slice_spec, bench_spec, bench, space, view, slice_vocabs, slice_detail, prov) -> Cell:
    """Rare-token variant: restrict the benchmark to pairs touching the
    slice's least-used vocabulary tokens, then evaluate as usual."""
    measure_name = f"{bench.name}:rare{bench_spec.rare_k}"
    try:
        vocab = slice_vocabs.get(slice_spec.name)
        if vocab is None:
            vocab = build_vocab(view, min_count=1)
            slice_vocabs[slice_spec.name] = vocab
        subset = rare_token_subset(bench, vocab, bench_spec.rare_k)
        res = evaluate(space, subset)
        detail = dict(slice_detail)
        detail.update(prov)
        detail.update(
            {
                "evaluated_pairs": res.evaluated_pairs,
                "skipped_pairs": res.skipped_pairs,
                "subset_pairs": len(subset.pairs),
            }
        )
        return Cell(algo, slice_spec.name, measure_name, "similarity", res.rho, None, detail)
    except Exception as exc:
        return Cell(algo, slice_spec.name, measure_name, "similarity",
                     detail=dict(slice_detail), error=str(exc))


def _load_any_corpus(path) -> Corpus:
    """Accept either an ingested corpus directory or a raw jsonl file."""
    p = Path(path)
    if p.is_dir():
        return load_corpus(p)
    from .corpus import ingest

    return ingest(p)


# ---------------------------------------------------------------------------
# temporal analysis


@dataclass(frozen=True)
class TemporalPoint:
    orientation: str
    measure: str
    year: int
    value: float | None
    n_articles: int
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "orientation": self.orientation,
            "measure": self.measure,
            "year": self.year,
            "value": self.value,
            "n_articles": self.n_articles,
            "error": self.error,
        }


@dataclass(frozen=True)
class SeriesFit:
    orientation: str
    measure: str
    slope: float
    intercept: float
    stderr: float | None
    n_points: int

    def to_dict(self) -> dict:
        return {
            "orientation": self.orientation,
            "measure": self.measure,
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "n_points": self.n_points,
        }


@dataclass
class TemporalResult:
    points: list[TemporalPoint]
    fits: list[SeriesFit]
    years: tuple[int, ...]
    dated_articles_total: int
    articles_used: int
    provenance: dict

    def series(self, orientation: str, measure: str) -> list[tuple[int, float]]:
        return [
            (p.year, p.value)
            for p in self.points
            if p.orientation == orientation and p.measure == measure
            and p.value is not None and p.error is None
        ]

    def fit(self, orientation: str, measure: str) -> SeriesFit | None:
        for f in self.fits:
            if (f.orientation, f.measure) == (orientation, measure):
                return f
        return None

    def to_dict(self) -> dict:
        return {
            "kind": "temporal_result",
            "points": [p.to_dict() for p in self.points],
            "fits": [f.to_dict() for f in self.fits],
            "years": list(self.years),
            "dated_articles_total": self.dated_articles_total,
            "articles_used": self.articles_used,
            "provenance": self.provenance,
        }

    @staticmethod
    def from_dict(data: dict) -> "TemporalResult":
        points = [TemporalPoint(**p) for p in data["points"]]
        fits = [SeriesFit(**f) for f in data["fits"]]
        return TemporalResult(
            points,
            fits,
            tuple(data["years"]),
            data["dated_articles_total"],
            data["articles_used"],
            data.get("provenance", {}),
        )


def ols_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float | None]:
    """Least-squares line: (slope, intercept, slope standard error).

    The standard error needs at least three points (the residual variance
    divides by n - 2); with exactly two it is None.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("regression needs at least two points")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("regression x-values are constant")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    n = x.shape[0]
    if n < 3:
        return slope, intercept, None
    residuals = y - (slope * x + intercept)
    sigma2 = float(np.sum(residuals**2)) / (n - 2)
    return slope, intercept, math.sqrt(sigma2 / sxx)


def temporal_run(
    corpus: Corpus,
    orientations: Iterable[str],
    year_from: int,
    year_to: int,
    measures: Iterable[str],
    algorithm: AlgorithmSpec | None = None,
    base_seed: int = 0,
) -> TemporalResult:
    """One model per (orientation, year over the range), measured per test.

    Undated articles never enter a cell (the year filter excludes them);
    the result records both the total dated-article count in the filtered
    corpus and the number actually used so the accounting is checkable.
    Years without articles become missing points. A regression line is
    fitted to every series with at least two populated points.
    """
    if year_to < year_from:
        raise ValueError("empty year range")
    orientations = [Orientation(o).value for o in orientations]
    years = tuple(range(int(year_from), int(year_to) + 1))
    if algorithm is None:
        algorithm = AlgorithmSpec(label="sgns", kind="sgns", train_config=TrainConfig())
    if algorithm.kind != "sgns":
        raise ValueError("temporal runs train per year; only the sgns route applies")
    weat_specs = [resolve_spec(name) for name in measures]

    dated_total = sum(
        1
        for art in corpus
        if art.orientation.value in orientations and art.year is not None and art.year in years
    )

    points: list[TemporalPoint] = []
    articles_used = 0
    for orientation in orientations:
        for year in years:
            view = slice_corpus(corpus, [orientation], [year])
            n = len(view)
            if n == 0:
                for spec in weat_specs:
                    points.append(TemporalPoint(orientation, spec.name, year, None, 0))
                continue
            articles_used += n
            try:
                cfg = algorithm.train_config
                cfg = replace(cfg, seed=base_seed + cfg.seed + year)
                vocab = build_vocab(
                    view,
                    min_count=algorithm.vocab_min_count if algorithm.vocab_max_size is None else None,
                    max_size=algorithm.vocab_max_size,
                    config=cfg.tokenize,
                )
                space = train(view, vocab, cfg)
            except Exception as exc:
                for spec in weat_specs:
                    points.append(TemporalPoint(orientation, spec.name, year, None, n, str(exc)))
                continue
            for spec in weat_specs:
                try:
                    res = evaluate_weat(spec, space, n_permutations=0, seed=None)
                    points.append(TemporalPoint(orientation, spec.name, year, res.effect_size, n))
                except Exception as exc:
                    points.append(TemporalPoint(orientation, spec.name, year, None, n, str(exc)))

    fits: list[SeriesFit] = []
    for orientation in orientations:
        for spec in weat_specs:
            series = [
                (p.year, p.value)
                for p in points
                if p.orientation == orientation and p.measure == spec.name
                and p.value is not None and p.error is None
            ]
            if len(series) < 2:
                continue
            xs, ys = zip(*series)
            slope, intercept, stderr = ols_fit(xs, ys)
            fits.append(SeriesFit(orientation, spec.name, slope, intercept, stderr, len(series)))

    provenance = {
        "orientations": list(orientations),
        "measures": [s.name for s in weat_specs],
        "base_seed": base_seed,
        "algorithm": algorithm.label,
        "config_hash": _config_fingerprint(algorithm),
    }
    return TemporalResult(points, fits, years, dated_total, articles_used, provenance)


# ---------------------------------------------------------------------------
# emission


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def emit(result, format: str, outdir) -> list[Path]:
    """Render a ResultTable or TemporalResult to files.

    Output is byte-deterministic for a fixed input: rows are emitted in
    plan order for cells and sorted order for derived blocks, floats use a
    fixed 12-significant-digit format, and lines end with LF.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if format not in ("csv", "json", "plotdata"):
        raise ValueError(f"unknown emit format {format!r}")
    if isinstance(result, ResultTable):
        return _emit_table(result, format, outdir)
    if isinstance(result, TemporalResult):
        return _emit_temporal(result, format, outdir)
    raise TypeError(f"cannot emit {type(result).__name__}")


def _emit_table(table: ResultTable, format: str, outdir: Path) -> list[Path]:
    deltas = table.deltas()
    variances = table.variances()
    if format == "json":
        path = outdir / "results.json"
        _write_text(path, json.dumps(table.to_dict(), indent=2, sort_keys=True) + "\n")
        return [path]
    if format == "csv":
        written = []
        lines = ["algorithm,slice,measure,kind,value,p_value,error"]
        for c in table.cells:
            lines.append(
                ",".join(
                    [c.algorithm, c.slice, c.measure, c.kind,
                     _fmt(c.value), _fmt(c.p_value), _csv_quote(c.error or "")]
                )
            )
        written.append(_write_text(outdir / "cells.csv", "\n".join(lines) + "\n"))
        if deltas:
            lines = ["algorithm,measure,conservative,liberal,delta"]
            for d in sorted(deltas, key=lambda d: (d["algorithm"], d["measure"])):
                lines.append(
                    ",".join([d["algorithm"], d["measure"], _fmt(d["conservative"]),
                              _fmt(d["liberal"]), _fmt(d["delta"])])
                )
            written.append(_write_text(outdir / "deltas.csv", "\n".join(lines) + "\n"))
        if variances:
            lines = ["slice,measure,n_algorithms,variance"]
            for v in variances:
                lines.append(
                    ",".join([v["slice"], v["measure"], str(len(v["values"])), _fmt(v["variance"])])
                )
            written.append(_write_text(outdir / "variances.csv", "\n".join(lines) + "\n"))
        return written
    # plotdata: per measure, one (algorithm, slice, value) block
    written = []
    measures = sorted({c.measure for c in table.cells})
    for measure in measures:
        lines = [f"# measure {measure}", "# algorithm slice value"]
        for c in table.cells:
            if c.measure == measure and c.error is None and c.value is not None:
                lines.append(f"{c.algorithm} {c.slice} {_fmt(c.value)}")
        written.append(
            _write_text(outdir / f"plot_{_safe_name(measure)}.txt", "\n".join(lines) + "\n")
        )
    return written


def _emit_temporal(result: TemporalResult, format: str, outdir: Path) -> list[Path]:
    if format == "json":
        path = outdir / "temporal.json"
        _write_text(path, json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
        return [path]
    if format == "csv":
        written = []
        lines = ["orientation,measure,year,value,n_articles,error"]
        for p in result.points:
            lines.append(
                ",".join([p.orientation, p.measure, str(p.year), _fmt(p.value),
                          str(p.n_articles), _csv_quote(p.error or "")])
            )
        written.append(_write_text(outdir / "temporal_points.csv", "\n".join(lines) + "\n"))
        lines = ["orientation,measure,slope,intercept,stderr,n_points"]
        for f in result.fits:
            lines.append(
                ",".join([f.orientation, f.measure, _fmt(f.slope), _fmt(f.intercept),
                          _fmt(f.stderr), str(f.n_points)])
            )
        written.append(_write_text(outdir / "temporal_fits.csv", "\n".join(lines) + "\n"))
        return written
    # plotdata: one file per series, (x, y) rows plus one regression row
    written = []
    seen = []
    for p in result.points:
        key = (p.orientation, p.measure)
        if key not in seen:
            seen.append(key)
    for orientation, measure in seen:
        series = [
            p for p in result.points
            if p.orientation == orientation and p.measure == measure
            and p.value is not None and p.error is None
        ]
        lines = [f"# series {orientation} {measure}", "# year value"]
        for p in series:
            lines.append(f"{p.year} {_fmt(p.value)}")
        fit = result.fit(orientation, measure)
        if fit is not None:
            lines.append(f"# fit slope intercept stderr")
            lines.append(f"fit {_fmt(fit.slope)} {_fmt(fit.intercept)} {_fmt(fit.stderr)}")
        written.append(
            _write_text(
                outdir / f"plot_{_safe_name(orientation)}_{_safe_name(measure)}.txt",
                "\n".join(lines) + "\n",
            )
        )
    return written


def _write_text(path: Path, content: str) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
    return path


def _csv_quote(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def load_result(path):
    """Load a results artifact (table or temporal) written by the json emit."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("kind") == "temporal_result":
        return TemporalResult.from_dict(data)
    return ResultTable.from_dict(data)
