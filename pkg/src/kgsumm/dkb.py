"""Domain knowledge base construction.

Three keyword rankers (embedding-similarity rank, TF-IDF and TextRank) each
nominate their top-k candidates; nominations are combined with indicator
weights, filtered by document frequency ratio and split into agents (A),
influence factors (P) and dynamics (T).
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .corpus import CONTENT_POS, POS, Corpus, CorpusError, Document
from .embeddings import EmbeddingTable, cosine_sim
from .ranking import rank_graph

logger = logging.getLogger(__name__)

# tie-break order when a lemma is seen under several tags
_POS_ORDER = [POS.PROPER_NOUN, POS.NOUN, POS.VERB, POS.ADJ, POS.ADV, POS.OTHER]


class DKBError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateWord:
    lemma: str
    pos: POS
    is_entity: bool
    tf_by_doc: dict
    df: int


@dataclass(frozen=True)
class DKB:
    domain: str
    agents: dict = field(default_factory=dict)  # lemma -> score
    factors: dict = field(default_factory=dict)
    dynamics: dict = field(default_factory=dict)

    def __post_init__(self):
        shared = set(self.agents) & set(self.factors)
        if shared:
            raise DKBError(f"agents and factors overlap: {sorted(shared)}")

    def __len__(self) -> int:
        return len(self.agents) + len(self.factors) + len(self.dynamics)

    @property
    def lemmas(self) -> set:
        return set(self.agents) | set(self.factors) | set(self.dynamics)

    def category(self, lemma: str) -> Optional[str]:
        if lemma in self.agents:
            return "A"
        if lemma in self.factors:
            return "P"
        if lemma in self.dynamics:
            return "T"
        return None

    def to_json(self) -> str:
        def ranked(group):
            return [[lemma, score] for lemma, score in _sorted_scores(group)]

        data = {
            "domain": self.domain,
            "agents": ranked(self.agents),
            "factors": ranked(self.factors),
            "dynamics": ranked(self.dynamics),
        }
        return json.dumps(data, ensure_ascii=False, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DKB":
        data = json.loads(text)
        return cls(
            data["domain"],
            {k: float(v) for k, v in data.get("agents", [])},
            {k: float(v) for k, v in data.get("factors", [])},
            {k: float(v) for k, v in data.get("dynamics", [])},
        )


def save_dkb(dkb: DKB, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dkb.to_json())


def load_dkb(path) -> DKB:
    with open(path, encoding="utf-8") as fh:
        return DKB.from_json(fh.read())


def load_stoplist(path) -> set:
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


@dataclass
class DKBConfig:
    k: int = 500
    d: float = 0.85
    sim_threshold: float = 0.4
    window: int = 5
    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3
    ptt_threshold: float = 0.01
    tol: float = 1e-6
    max_iter: int = 100
    min_df: int = 1
    stoplist: frozenset = frozenset()


def _sorted_scores(scores: dict) -> list:
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def top_k(scores: dict, k: int) -> list:
    """Lemmas of the k best scores; ties broken lexicographically."""
    return [lemma for lemma, _ in _sorted_scores(scores)[:k]]


def _doc_tokens(doc: Document):
    return list(doc.title) + doc.tokens()


def extract_candidates(corpus: Corpus, domain: str, min_df: int = 1, stoplist: Iterable[str] = ()) -> list:
    docs = corpus.domain_documents(domain)
    stop = set(stoplist)
    tf: dict = {}
    pos_counts: dict = {}
    entity: dict = {}
    for doc in docs:
        for tok in _doc_tokens(doc):
            if tok.pos not in CONTENT_POS or tok.lemma in stop:
                continue
            tf.setdefault(tok.lemma, Counter())[doc.id] += 1
            pos_counts.setdefault(tok.lemma, Counter())[tok.pos] += 1
            entity[tok.lemma] = entity.get(tok.lemma, False) or tok.is_entity
    out = []
    for lemma in sorted(tf):
        df = len(tf[lemma])
        if df < min_df:
            continue
        counts = pos_counts[lemma]
        pos = max(counts, key=lambda p: (counts[p], -_POS_ORDER.index(p)))
        out.append(CandidateWord(lemma, pos, entity[lemma], dict(tf[lemma]), df))
    return out


def similarity_matrix(vectors: list, sim_threshold: float) -> np.ndarray:
    """Symmetric edge weights: cosine similarity where it passes the threshold and is positive."""
    n = len(vectors)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = cosine_sim(vectors[i], vectors[j])
            if s >= sim_threshold and s > 0.0:
                w[i, j] = w[j, i] = s
    return w


def vwrank(
    candidates: list,
    table: EmbeddingTable,
    d: float = 0.85,
    sim_threshold: float = 0.4,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> dict:
    lemmas = [c.lemma for c in candidates if c.lemma in table]
    if not lemmas:
        raise DKBError("no candidate word has an embedding; the similarity graph is empty")
    missing = len(candidates) - len(lemmas)
    if missing:
        logger.debug("vwrank: %d candidates without embeddings excluded", missing)
    w = similarity_matrix([table[l] for l in lemmas], sim_threshold)
    res = rank_graph(w, d=d, tol=tol, max_iter=max_iter)
    if not res.converged:
        logger.warning("vwrank stopped after %d iterations without converging", res.iterations)
    return dict(zip(lemmas, res.scores.tolist()))


def tfidf_scores(candidates: list, corpus: Corpus, domain: str) -> dict:
    docs = corpus.domain_documents(domain)
    if not docs:
        raise DKBError(f"domain {domain!r} is empty")
    n = len(docs)
    lengths = {doc.id: len(_doc_tokens(doc)) for doc in docs}
    scores = {}
    for c in candidates:
        counts = {doc_id: cnt for doc_id, cnt in c.tf_by_doc.items() if doc_id in lengths}
        if not counts:
            scores[c.lemma] = 0.0
            continue
        idf = math.log(n / len(counts))
        tf = max(cnt / lengths[doc_id] for doc_id, cnt in counts.items())
        scores[c.lemma] = tf * idf
    return scores


def cooccurrence_matrix(sentences: Iterable[list], lemmas: list, window: int) -> np.ndarray:
    """Unweighted co-occurrence: lemmas within ``window`` consecutive tokens of one sentence."""
    if window < 2:
        raise ValueError("window must be at least 2")
    index = {l: i for i, l in enumerate(lemmas)}
    w = np.zeros((len(lemmas), len(lemmas)))
    for sent in sentences:
        for a, la in enumerate(sent):
            ia = index.get(la)
            if ia is None:
                continue
            for lb in sent[a + 1 : a + window]:
                ib = index.get(lb)
                if ib is not None and ib != ia:
                    w[ia, ib] = w[ib, ia] = 1.0
    return w


def textrank_scores(
    candidates: list,
    corpus: Corpus,
    domain: str,
    window: int = 5,
    d: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> dict:
    if window < 2:
        raise ValueError("window must be at least 2")
    lemmas = [c.lemma for c in candidates]
    if not lemmas:
        raise DKBError("no candidates; the co-occurrence graph is empty")
    sentences = []
    for doc in corpus.domain_documents(domain):
        if doc.title:
            sentences.append([t.lemma for t in doc.title])
        sentences.extend([t.lemma for t in sent] for _, _, sent in doc.sentences())
    w = cooccurrence_matrix(sentences, lemmas, window)
    res = rank_graph(w, d=d, tol=tol, max_iter=max_iter)
    return dict(zip(lemmas, res.scores.tolist()))


def integrate(c_vw: Iterable[str], c_ti: Iterable[str], c_tr: Iterable[str], alpha=1 / 3, beta=1 / 3, gamma=1 / 3) -> dict:
    if min(alpha, beta, gamma) < 0 or alpha + beta + gamma == 0:
        raise ValueError("coefficients must be non-negative and not all zero")
    c_vw, c_ti, c_tr = set(c_vw), set(c_ti), set(c_tr)
    return {
        cw: alpha * (cw in c_vw) + beta * (cw in c_ti) + gamma * (cw in c_tr)
        for cw in sorted(c_vw | c_ti | c_tr)
    }


def df_filter(scores: dict, candidates: list, domain_doc_count: int, threshold: float) -> dict:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    if domain_doc_count <= 0:
        raise DKBError("domain_doc_count must be positive")
    df = {c.lemma: c.df for c in candidates}
    return {w: s for w, s in scores.items() if df.get(w, 0) / domain_doc_count >= threshold}


def assign_categories(scores: dict, candidates: list, domain: str = "") -> DKB:
    by_lemma = {c.lemma: c for c in candidates}
    agents, factors, dynamics = {}, {}, {}
    for lemma, score in scores.items():
        c = by_lemma.get(lemma)
        if c is None:
            raise DKBError(f"scored lemma {lemma!r} has no candidate record")
        if c.is_entity or c.pos == POS.PROPER_NOUN:
            agents[lemma] = score
        elif c.pos == POS.NOUN:
            factors[lemma] = score
        elif c.pos in (POS.VERB, POS.ADJ, POS.ADV):
            dynamics[lemma] = score
        else:
            logger.warning("lemma %r has tag %s; left out of the knowledge base", lemma, c.pos.value)
    return DKB(domain, agents, factors, dynamics)


def build_dkb(corpus: Corpus, domain: str, table: EmbeddingTable, config: Optional[DKBConfig] = None) -> DKB:
    cfg = config or DKBConfig()
    docs = corpus.domain_documents(domain)
    if not docs:
        raise DKBError(f"domain {domain!r} is empty")
    candidates = extract_candidates(corpus, domain, cfg.min_df, cfg.stoplist)
    if not candidates:
        raise DKBError(f"domain {domain!r} yields no candidate words")
    vw = vwrank(candidates, table, cfg.d, cfg.sim_threshold, cfg.max_iter, cfg.tol)
    ti = tfidf_scores(candidates, corpus, domain)
    tr = textrank_scores(candidates, corpus, domain, cfg.window, cfg.d, cfg.tol, cfg.max_iter)
    scores = integrate(
        top_k(vw, cfg.k), top_k(ti, cfg.k), top_k(tr, cfg.k), cfg.alpha, cfg.beta, cfg.gamma
    )
    scores = df_filter(scores, candidates, len(docs), cfg.ptt_threshold)
    return assign_categories(scores, candidates, domain)


def domain_vocabulary(corpus: Corpus, domain: str) -> set:
    return {t.lemma for doc in corpus.domain_documents(domain) for t in _doc_tokens(doc)}
