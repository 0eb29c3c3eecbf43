"""Labeled-article ingestion, tokenization, vocabularies, and slicing.

Articles arrive as line-delimited JSON records (crawling, boilerplate
removal, and language detection all happen upstream). Every structure here
is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence


class Orientation(str, Enum):
    LIBERAL = "liberal"
    NEUTRAL = "neutral"
    CONSERVATIVE = "conservative"


class SubLabel(str, Enum):
    LEFT = "left"
    LEAN_LEFT = "lean-left"
    CENTER = "center"
    LEAN_RIGHT = "lean-right"
    RIGHT = "right"


# five-level ratings aggregate to the three coarse groups
SUB_TO_COARSE = {
    SubLabel.LEFT: Orientation.LIBERAL,
    SubLabel.LEAN_LEFT: Orientation.LIBERAL,
    SubLabel.CENTER: Orientation.NEUTRAL,
    SubLabel.LEAN_RIGHT: Orientation.CONSERVATIVE,
    SubLabel.RIGHT: Orientation.CONSERVATIVE,
}

UNK_TOKEN = "<unk>"


class RecordError(ValueError):
    """A single article record failed to parse or validate."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


@dataclass(frozen=True, slots=True)
class Article:
    id: str
    text: str
    outlet: str
    orientation: Orientation
    sub_label: SubLabel | None = None
    year: int | None = None
    language: str = "und"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("article text is empty")
        if self.sub_label is not None and SUB_TO_COARSE[self.sub_label] != self.orientation:
            raise ValueError(
                f"sub-label {self.sub_label.value} inconsistent with {self.orientation.value}"
            )


@dataclass(frozen=True)
class IngestStats:
    loaded: int
    rejected: int
    no_date: int
    duplicate_texts: int
    errors: tuple[tuple[int, str], ...] = ()


_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?(?:[T ].*)?$")


def parse_year(value) -> int | None:
    """Year from an ISO-8601-ish date string; None when unparseable.

    All analyses are yearly, so month and day are validated then discarded.
    """
    if value is None:
        return None
    if isinstance(value, int):
        return value if 1 <= value <= 9999 else None
    m = _DATE_RE.match(str(value).strip())
    if not m:
        return None
    year = int(m.group(1))
    month, day = m.group(2), m.group(3)
    if month is not None and not 1 <= int(month) <= 12:
        return None
    if day is not None and not 1 <= int(day) <= 31:
        return None
    return year


def _parse_orientation(raw_orientation, raw_sub) -> tuple[Orientation, SubLabel | None]:
    """Accept either a coarse group or a five-level label in the
    orientation field; an explicit sub_label must agree with it."""
    if raw_orientation is None:
        raise ValueError("missing orientation")
    text = str(raw_orientation).strip().lower()
    sub: SubLabel | None = None
    try:
        coarse = Orientation(text)
    except ValueError:
        try:
            sub = SubLabel(text)
        except ValueError:
            raise ValueError(f"unknown orientation {raw_orientation!r}")
        coarse = SUB_TO_COARSE[sub]
    if raw_sub is not None:
        try:
            explicit = SubLabel(str(raw_sub).strip().lower())
        except ValueError:
            raise ValueError(f"unknown sub_label {raw_sub!r}")
        if sub is not None and explicit != sub:
            raise ValueError(f"sub_label {raw_sub!r} contradicts orientation {raw_orientation!r}")
        if SUB_TO_COARSE[explicit] != coarse:
            raise ValueError(f"sub_label {raw_sub!r} inconsistent with {coarse.value}")
        sub = explicit
    return coarse, sub


def _article_from_record(record: dict, lineno: int) -> tuple[Article, bool]:
    """Build an Article; returns (article, had_parseable_date)."""
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    text = record.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("missing or empty text")
    outlet = str(record.get("outlet", ""))
    orientation, sub = _parse_orientation(record.get("orientation"), record.get("sub_label"))
    year = parse_year(record.get("date"))
    art_id = record.get("id")
    if art_id is None:
        art_id = f"line-{lineno}"
    language = str(record.get("language", "und"))
    return (
        Article(
            id=str(art_id),
            text=text,
            outlet=outlet,
            orientation=orientation,
            sub_label=sub,
            year=year,
            language=language,
        ),
        year is not None,
    )


class Corpus:
    """Immutable ordered collection of articles with an id index."""

    def __init__(self, articles: Iterable[Article], stats: IngestStats | None = None):
        self._articles = tuple(articles)
        index: dict[str, int] = {}
        for i, art in enumerate(self._articles):
            if art.id in index:
                raise ValueError(f"duplicate article id {art.id!r}")
            index[art.id] = i
        self._index = index
        if stats is None:
            no_date = sum(1 for a in self._articles if a.year is None)
            dupes = len(self._articles) - len({a.text for a in self._articles})
            stats = IngestStats(len(self._articles), 0, no_date, dupes)
        self.stats = stats

    def __len__(self) -> int:
        return len(self._articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self._articles)

    @property
    def articles(self) -> tuple[Article, ...]:
        return self._articles

    def get(self, article_id: str) -> Article:
        return self._articles[self._index[article_id]]

    def view(self, ids: Sequence[str], provenance: dict | None = None) -> "CorpusView":
        return CorpusView(self, ids, provenance or {"filter": "explicit"})

    def all(self) -> "CorpusView":
        return CorpusView(self, [a.id for a in self._articles], {"filter": "all"})


@dataclass(frozen=True)
class CorpusView:
    """Ordered reference set of article ids plus the filter that made it."""

    corpus: Corpus
    ids: tuple[str, ...]
    provenance: dict

    def __init__(self, corpus: Corpus, ids: Sequence[str], provenance: dict):
        seen = set()
        for aid in ids:
            if aid in seen:
                raise ValueError(f"duplicate id {aid!r} in view")
            seen.add(aid)
            corpus.get(aid)  # KeyError for dangling references
        object.__setattr__(self, "corpus", corpus)
        object.__setattr__(self, "ids", tuple(ids))
        object.__setattr__(self, "provenance", dict(provenance))

    def __len__(self) -> int:
        return len(self.ids)

    def articles(self) -> Iterator[Article]:
        for aid in self.ids:
            yield self.corpus.get(aid)

    def descriptor(self) -> str:
        """Stable one-line description, used in metadata and cache keys."""
        prov = json.dumps(self.provenance, sort_keys=True)
        return f"n={len(self.ids)} {prov}"


def ingest(path, format: str = "jsonl", fail_fast: bool = False) -> Corpus:
    """Load a line-delimited article file into a Corpus.

    Malformed lines are reported with their line number and either skipped
    (default) or raised immediately (``fail_fast``). Date-less and
    date-unparseable records are kept and counted in the no-date bucket;
    exact-text duplicates are counted, never removed.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    path = Path(path)
    articles: list[Article] = []
    errors: list[tuple[int, str]] = []
    no_date = 0
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                article, dated = _article_from_record(record, lineno)
                if article.id in seen_ids:
                    raise ValueError(f"duplicate article id {article.id!r}")
            except (ValueError, KeyError) as exc:
                if fail_fast:
                    raise RecordError(lineno, str(exc)) from exc
                errors.append((lineno, str(exc)))
                continue
            seen_ids.add(article.id)
            articles.append(article)
            if not dated:
                no_date += 1
    dupes = len(articles) - len({a.text for a in articles})
    stats = IngestStats(
        loaded=len(articles),
        rejected=len(errors),
        no_date=no_date,
        duplicate_texts=dupes,
        errors=tuple(errors),
    )
    return Corpus(articles, stats)


def slice_corpus(
    corpus: Corpus,
    orientations: Iterable[Orientation | str] | None = None,
    years: Iterable[int] | None = None,
) -> CorpusView:
    """View of the articles matching all given filters.

    A year filter always drops undated articles, mirroring how the temporal
    analyses exclude the no-date bucket. An empty result is valid.
    """
    wanted_orient = None
    if orientations is not None:
        wanted_orient = {Orientation(o) for o in orientations}
    wanted_years = set(int(y) for y in years) if years is not None else None
    ids = []
    for art in corpus:
        if wanted_orient is not None and art.orientation not in wanted_orient:
            continue
        if wanted_years is not None:
            if art.year is None or art.year not in wanted_years:
                continue
        ids.append(art.id)
    provenance = {
        "orientations": sorted(o.value for o in wanted_orient) if wanted_orient else None,
        "years": sorted(wanted_years) if wanted_years is not None else None,
    }
    return CorpusView(corpus, ids, provenance)


@dataclass(frozen=True)
class TokenizeConfig:
    lowercase: bool = True
    keep_punctuation: bool = False


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_WORD_RE = re.compile(r"\w+", re.UNICODE)
_WORD_OR_PUNCT_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str, config: TokenizeConfig = TokenizeConfig()) -> list[list[str]]:
    """Sentences of lowercased tokens at Unicode word boundaries.

    Sentence boundaries are terminal punctuation ([.!?]) followed by
    whitespace; no abbreviation handling, so "Mr. Smith" over-splits. That
    is accepted: downstream statistics are window co-occurrences, where
    occasional over-splitting is benign. Punctuation-only tokens are
    dropped unless ``keep_punctuation`` is set. Sentences that end up
    empty are removed.
    """
    pattern = _WORD_OR_PUNCT_RE if config.keep_punctuation else _WORD_RE
    sentences = []
    for chunk in _SENTENCE_SPLIT.split(text):
        if config.lowercase:
            chunk = chunk.lower()
        tokens = pattern.findall(chunk)
        if tokens:
            sentences.append(tokens)
    return sentences


class Vocabulary:
    """Dense token -> id map with counts; rare tokens collapse into <unk>.

    Ids: <unk> is always id 0; surviving tokens follow ordered by count
    descending then lexicographic, so construction is deterministic.
    """

    def __init__(self, counts: dict[str, int], unk_count: int, total_tokens: int):
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        self._tokens = [UNK_TOKEN] + [tok for tok, _ in ordered]
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}
        self._counts = {UNK_TOKEN: unk_count}
        self._counts.update(counts)
        self.total_tokens = total_tokens
        if sum(self._counts.values()) != total_tokens:
            raise ValueError("vocabulary counts do not sum to the token total")

    @property
    def unk_id(self) -> int:
        return 0

    @property
    def unk_token(self) -> str:
        return UNK_TOKEN

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def counts(self) -> dict[str, int]:
        return dict(self._counts)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, 0)

    def token_of(self, token_id: int) -> str:
        return self._tokens[token_id]

    def count_of(self, token: str) -> int:
        return self._counts.get(token, 0)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        ids = self._ids
        return [ids.get(tok, 0) for tok in tokens]


def build_vocab(
    view: CorpusView,
    min_count: int | None = None,
    max_size: int | None = None,
    config: TokenizeConfig = TokenizeConfig(),
) -> Vocabulary:
    """Count tokens over the view and apply exactly one retention policy.

    ``min_count`` keeps tokens occurring at least that often; ``max_size``
    keeps the N most frequent (boundary ties resolved lexicographically).
    Everything else is replaced by <unk>, whose count equals the sum of
    replaced occurrences.
    """
    if (min_count is None) == (max_size is None):
        raise ValueError("specify exactly one of min_count or max_size")
    if len(view) == 0:
        raise ValueError("cannot build a vocabulary from an empty view")
    counter: Counter[str] = Counter()
    total = 0
    for art in view.articles():
        for sent in tokenize(art.text, config):
            counter.update(sent)
            total += len(sent)
    if total == 0:
        raise ValueError("view produced no tokens")
    if min_count is not None:
        kept = {tok: c for tok, c in counter.items() if c >= min_count}
    else:
        if max_size <= 0:
            raise ValueError("max_size must be positive")
        ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
        kept = dict(ranked[:max_size])
    unk_count = total - sum(kept.values())
    return Vocabulary(kept, unk_count, total)


def encode_view(
    view: CorpusView, vocab: Vocabulary, config: TokenizeConfig = TokenizeConfig()
) -> list[list[int]]:
    """Tokenize and id-encode every sentence of the view, in order."""
    encoded = []
    for art in view.articles():
        for sent in tokenize(art.text, config):
            encoded.append(vocab.encode(sent))
    return encoded


def export_sentences(view: CorpusView, path, config: TokenizeConfig = TokenizeConfig()) -> int:
    """Write one pre-tokenized sentence per line (the extractor input
    format); returns the number of sentences written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for art in view.articles():
            for sent in tokenize(art.text, config):
                fh.write(" ".join(sent) + "\n")
                n += 1
    return n


def save_corpus(corpus: Corpus, outdir) -> None:
    """Persist a corpus directory: articles.jsonl plus a stats manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "articles.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for art in corpus:
            record = {
                "id": art.id,
                "text": art.text,
                "outlet": art.outlet,
                "orientation": art.orientation.value,
                "sub_label": art.sub_label.value if art.sub_label else None,
                "year": art.year,
                "language": art.language,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    manifest = {
        "articles": len(corpus),
        "loaded": corpus.stats.loaded,
        "rejected": corpus.stats.rejected,
        "no_date": corpus.stats.no_date,
        "duplicate_texts": corpus.stats.duplicate_texts,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_corpus(indir) -> Corpus:
    """Load a corpus directory written by :func:`save_corpus`; the manifest
    restores the original ingestion statistics (e.g. the rejected count)."""
    indir = Path(indir)
    articles = []
    with open(indir / "articles.jsonl", "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            articles.append(
                Article(
                    id=rec["id"],
                    text=rec["text"],
                    outlet=rec.get("outlet", ""),
                    orientation=Orientation(rec["orientation"]),
                    sub_label=SubLabel(rec["sub_label"]) if rec.get("sub_label") else None,
                    year=rec.get("year"),
                    language=rec.get("language", "und"),
                )
            )
    stats = None
    manifest_path = indir / "manifest.json"
    if manifest_path.exists():
        with open(manifest_path, "r", encoding="utf-8") as fh:
            m = json.load(fh)
        stats = IngestStats(
            loaded=m.get("loaded", len(articles)),
            rejected=m.get("rejected", 0),
            no_date=m.get("no_date", sum(1 for a in articles if a.year is None)),
            duplicate_texts=m.get("duplicate_texts", 0),
        )
    return Corpus(articles, stats)
