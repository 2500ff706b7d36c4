"""Deterministic synthetic corpora for tests, demos and smoke runs."""

from __future__ import annotations

import json
import os
import random

import numpy as np

from .corpus import POS, Corpus, Document, Token, write_jsonl
from .embeddings import EmbeddingTable, save_embeddings
from .relation_model.data import PairLabel, TextPair
from .rstree import Nuclearity


def pair_corpus(n: int = 100, seed: int = 0, vocab_size: int = 12, labelled_fraction: float = 0.6) -> list:
    """Text pairs over two small disjoint vocabularies.

    L1 pairs are labelled: they merge when the spans share a word; merged pairs
    are Joint/NN when both spans start with the same word, otherwise
    Elaboration/NS. L2 pairs carry no label.
    """
    rng = random.Random(seed)
    words = {"L1": [f"w{i}" for i in range(vocab_size)], "L2": [f"z{i}" for i in range(vocab_size)]}
    pairs = []
    for k in range(n):
        lang = "L1" if k < int(n * labelled_fraction) else "L2"
        vocab = words[lang]
        s1 = tuple(rng.choice(vocab) for _ in range(rng.randint(2, 5)))
        s2 = tuple(rng.choice(vocab) for _ in range(rng.randint(2, 5)))
        label = None
        if lang == "L1":
            if set(s1) & set(s2):
                if s1[0] == s2[0]:
                    label = PairLabel(True, "Joint", Nuclearity.NN)
                else:
                    label = PairLabel(True, "Elaboration", Nuclearity.NS)
            else:
                label = PairLabel(False)
        pairs.append(TextPair(lang, s1, s2, s1[:1], s2[:1], label))
    return pairs


# -- planted knowledge corpora -------------------------------------------------

PLANTED_AGENTS = ("acme", "globex", "initech")
PLANTED_FACTORS = ("rate", "price", "stock")
PLANTED_DYNAMICS = ("rise", "fall", "sharp")
DISTRACTORS = ("weather", "picnic", "umbrella", "sing", "lazy")

_POS_OF = {
    **{w: POS.PROPER_NOUN for w in PLANTED_AGENTS},
    **{w: POS.NOUN for w in PLANTED_FACTORS},
    "rise": POS.VERB,
    "fall": POS.VERB,
    "sharp": POS.ADJ,
    "weather": POS.NOUN,
    "picnic": POS.NOUN,
    "umbrella": POS.NOUN,
    "sing": POS.VERB,
    "lazy": POS.ADJ,
}
_FILLER = ("the", "of", "and", "today", "in", "a", "to", "on", "with", "for", "as", "by")


def tok(word: str) -> Token:
    """Token for a synthetic word; tags come from the planted lexicon, everything else is OTHER."""
    pos = _POS_OF.get(word, POS.OTHER)
    return Token(word, word, pos, word in PLANTED_AGENTS)


def _sent(words) -> tuple:
    return tuple(tok(w) for w in words)


def toy_corpus(domain: str = "finance") -> Corpus:
    """Five short documents with planted agents, factors and dynamics.

    Every planted keyword occurs in at least three documents; each distractor
    occurs in exactly one.
    """
    bodies = [
        [["acme", "rate", "rise", "today", "."], ["the", "price", "of", "stock", "sharp", "."], ["weather", "is", "fine", "."]],
        [["globex", "price", "fall", "."], ["the", "rate", "and", "stock", "rise", "sharp", "."], ["a", "picnic", "in", "the", "park", "."]],
        [["initech", "stock", "rise", "."], ["acme", "rate", "fall", "sharp", "today", "."], ["an", "umbrella", "for", "rain", "."]],
        [["acme", "price", "rise", "."], ["globex", "stock", "fall", "."], ["they", "sing", "on", "stage", "."]],
        [["initech", "rate", "fall", "."], ["globex", "price", "rise", "sharp", "."], ["a", "lazy", "afternoon", "."]],
    ]
    titles = [["acme", "rate"], ["globex", "price"], ["initech", "stock"], ["acme", "price"], ["initech", "rate"]]
    docs = [
        Document(f"toy{i}", (tuple(_sent(s) for s in body),), _sent(titles[i]), None, domain)
        for i, body in enumerate(bodies)
    ]
    return Corpus(docs)


def clustered_embeddings(words, groups: dict, dim: int = 8, seed: int = 0, noise: float = 0.05) -> EmbeddingTable:
    """Vectors where words sharing a group lie close to a common direction.

    Words outside ``groups`` get independent random directions.
    """
    rng = np.random.default_rng(seed)
    centres: dict = {}
    vectors = {}
    for w in sorted(set(words)):
        g = groups.get(w)
        if g is None:
            v = rng.standard_normal(dim)
        else:
            if g not in centres:
                centres[g] = rng.standard_normal(dim)
            v = centres[g] + noise * rng.standard_normal(dim)
        vectors[w] = v
    return EmbeddingTable(dim, vectors)


def toy_embeddings(corpus: Corpus, dim: int = 8, seed: int = 0) -> EmbeddingTable:
    words = {t.lemma for d in corpus.documents for t in list(d.title) + d.tokens()}
    groups = {w: "finance" for w in PLANTED_AGENTS + PLANTED_FACTORS + PLANTED_DYNAMICS}
    return clustered_embeddings(words, groups, dim, seed)


# -- end-to-end corpus -----------------------------------------------------------

E2E_AGENTS = ("acme", "globex", "initech")
E2E_FACTORS = ("rate", "price", "stock")
E2E_DYNAMICS = ("rise", "fall")


def e2e_corpus(
    n_docs: int = 10,
    n_preamble: int = 4,
    n_paragraphs: int = 4,
    keys_per_paragraph: int = 3,
    filler_len: int = 15,
    seed: int = 0,
    domain: str = "finance",
) -> Corpus:
    """Documents that open with a filler preamble and carry knowledge afterwards.

    The first paragraph holds ``n_preamble`` sentences of OTHER tokens. Each
    later paragraph holds ``keys_per_paragraph`` keyword sentences
    ``agent factor dynamic , x y .`` followed by one short filler sentence.
    Titles repeat the document's main agent and factor, so the keyword
    sentences carry the title and knowledge overlap while a positional
    baseline reads the preamble first.
    """
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        agent = E2E_AGENTS[i % len(E2E_AGENTS)]
        factor = E2E_FACTORS[(i // len(E2E_AGENTS)) % len(E2E_FACTORS)]
        preamble = tuple(_sent([rng.choice(_FILLER) for _ in range(filler_len)] + ["."]) for _ in range(n_preamble))
        paragraphs = [preamble]
        for k in range(n_paragraphs):
            sents = []
            for m in range(keys_per_paragraph):
                a = agent if m == 0 else rng.choice(E2E_AGENTS)
                f = factor if (k + m) % 2 == 0 else rng.choice(E2E_FACTORS)
                sents.append(_sent([a, f, rng.choice(E2E_DYNAMICS), ",", rng.choice(_FILLER), rng.choice(_FILLER), "."]))
            sents.append(_sent([rng.choice(_FILLER) for _ in range(5)] + ["."]))
            paragraphs.append(tuple(sents))
        title = _sent([agent, factor, "report"])
        docs.append(Document(f"e2e{i}", tuple(paragraphs), title, None, domain))
    return Corpus(docs)


def e2e_embeddings(corpus: Corpus, dim: int = 8, seed: int = 0) -> EmbeddingTable:
    words = {t.lemma for d in corpus.documents for t in list(d.title) + d.tokens()}
    groups = {w: "finance" for w in E2E_AGENTS + E2E_FACTORS + E2E_DYNAMICS}
    return clustered_embeddings(words, groups, dim, seed)


def write_workspace(path, corpus: Corpus, table: EmbeddingTable, domain: str, **config) -> str:
    """Write corpus, embeddings and a config under ``path``; return the config path."""
    os.makedirs(path, exist_ok=True)
    write_jsonl(corpus, os.path.join(path, "corpus.jsonl"))
    save_embeddings(table, os.path.join(path, "embeddings.txt"))
    cfg = {
        "corpus": os.path.join(path, "corpus.jsonl"),
        "embeddings": os.path.join(path, "embeddings.txt"),
        "dkb_dir": os.path.join(path, "dkb"),
        "output_dir": os.path.join(path, "out"),
        "domain": domain,
        **config,
    }
    cfg_path = os.path.join(path, "config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=1, sort_keys=True)
    return cfg_path
