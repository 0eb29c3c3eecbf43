"""Shared fixtures: synthetic corpora, random spaces, stream builders."""

import random

import numpy as np
import pytest

from biasaudit.corpus import Article, Corpus, Orientation
from biasaudit.embeddings import EmbeddingSpace
from biasaudit.weat import WeatTestSpec, builtin_spec

MALE = ["male", "man", "boy", "brother", "he", "him", "his", "son"]
FEMALE = ["female", "woman", "girl", "sister", "she", "her", "hers", "daughter"]
CAREER = ["executive", "management", "professional", "corporation",
          "salary", "office", "business", "career"]
FAMILY = ["home", "parents", "children", "family", "cousins",
          "marriage", "wedding", "relatives"]
FILLER = ["news", "report", "city", "state", "world", "week",
          "group", "people", "story", "year"]


def planted_gender_articles(
    n_sentences: int,
    align: float = 1.0,
    seed: int = 0,
    orientation: Orientation = Orientation.NEUTRAL,
    year: int | None = None,
    id_prefix: str = "a",
):
    """Synthetic sentences that tie male terms to career words and female
    terms to family words with probability ``align`` (cross-wired
    otherwise), so the planted association direction and strength are
    fully controlled by construction."""
    rng = random.Random(seed)
    articles = []
    for i in range(n_sentences):
        male_side = i % 2 == 0
        aligned = rng.random() < align
        if male_side:
            groups = [(MALE, 2), (CAREER if aligned else FAMILY, 2), (FILLER, 2)]
        else:
            groups = [(FEMALE, 2), (FAMILY if aligned else CAREER, 2), (FILLER, 2)]
        tokens = []
        for group, k in groups:
            tokens.extend(rng.sample(group, k))
        rng.shuffle(tokens)
        articles.append(
            Article(
                id=f"{id_prefix}{i}",
                text=" ".join(tokens) + ".",
                outlet="synthetic",
                orientation=orientation,
                year=year,
            )
        )
    return articles


@pytest.fixture(scope="session")
def planted_corpus():
    return Corpus(planted_gender_articles(5000, align=1.0, seed=11))


@pytest.fixture(scope="session")
def reversed_corpus():
    return Corpus(planted_gender_articles(5000, align=0.0, seed=11))


def random_space(words, dim, seed) -> EmbeddingSpace:
    rng = np.random.default_rng(seed)
    return EmbeddingSpace(words, rng.normal(size=(len(words), dim)))


def random_weat_instance(rng, max_list=6, max_dim=10):
    """A seeded random test instance: spec plus a space covering its words."""
    dim = int(rng.integers(2, max_dim + 1))
    sizes = [int(rng.integers(1, max_list + 1)) for _ in range(2)]
    sizes += [int(rng.integers(2, max_list + 1)) for _ in range(2)]
    labels = ["g", "h", "a", "b"]
    lists = [tuple(f"{label}{i}" for i in range(size)) for label, size in zip(labels, sizes)]
    spec = WeatTestSpec("random", lists[0], lists[1], lists[2], lists[3])
    words = [w for lst in lists for w in lst]
    space = EmbeddingSpace(words, rng.normal(size=(len(words), dim)))
    return spec, space


@pytest.fixture
def gender_spec():
    return builtin_spec("gender")
