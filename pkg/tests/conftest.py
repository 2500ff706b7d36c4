import random

import numpy as np
import pytest

from kgsumm.corpus import Corpus, Document, Token
from kgsumm.dkb import DKB
from kgsumm.rstree import RELATIONS, Internal, Leaf, Nuclearity, RSTree, is_multinuclear
from kgsumm.segmenter import EDU


def words(text: str) -> tuple:
    return tuple(Token(w, w) for w in text.split())


def doc_from_text(doc_id: str, paragraphs, title: str = "", domain: str = "d") -> Document:
    """``paragraphs`` is a list of lists of space-separated sentences."""
    body = tuple(tuple(words(s) for s in para) for para in paragraphs)
    return Document(doc_id, body, words(title), None, domain)


def random_tree(rng: random.Random, n: int, start: int = 0):
    """Random binary tree over leaves start..start+n-1 with consistent labels."""
    if n == 1:
        return Leaf(start)
    k = rng.randint(1, n - 1)
    left = random_tree(rng, k, start)
    right = random_tree(rng, n - k, start + k)
    rel = rng.choice(RELATIONS)
    if is_multinuclear(rel):
        nuc = Nuclearity.NN
    else:
        nuc = rng.choice([Nuclearity.NS, Nuclearity.SN])
    return Internal(rel, nuc, left, right)


def fixture_edus(lengths) -> tuple:
    return tuple(EDU(i, words(" ".join(f"w{i}_{k}" for k in range(n))), 0, i, (0, 1)) for i, n in enumerate(lengths))


def tree_with_lengths(root, lengths) -> RSTree:
    return RSTree(root, fixture_edus(lengths))


@pytest.fixture
def small_dkb() -> DKB:
    return DKB(
        "finance",
        {"china": 1.0, "bank": 0.9},
        {"risk": 1.0, "price": 0.8, "rate": 0.7},
        {"increase": 1.0, "fall": 0.9, "stable": 0.5},
    )


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)
