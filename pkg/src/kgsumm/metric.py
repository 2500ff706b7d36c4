"""Reference-free faithfulness scoring of summaries, plus Lead and TextRank baselines."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .corpus import Document, Token
from .dkb import DKB
from .ranking import rank_graph
from .summarizer import Budget, SummaryResult, result_from_units

logger = logging.getLogger(__name__)

N_FEATURES = 6
PLACEHOLDER_W = (30.0, 15.0, 10.0, -10.0, 25.0, 20.0)
PLACEHOLDER_B = 0.0


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _lemmas(tokens) -> list:
    return [t.lemma if isinstance(t, Token) else t for t in tokens]


def _ngrams(seq: list, n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def rouge_n(candidate, reference, n: int = 1) -> RougeScore:
    if n < 1:
        raise MetricError("n must be at least 1")
    cand = _ngrams(_lemmas(candidate), n)
    ref = _ngrams(_lemmas(reference), n)
    c_total, r_total = sum(cand.values()), sum(ref.values())
    if c_total == 0 or r_total == 0:
        return RougeScore(0.0, 0.0, 0.0)
    overlap = sum((cand & ref).values())
    p, r = overlap / c_total, overlap / r_total
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return RougeScore(p, r, f1)


@dataclass
class MetricParams:
    w: tuple = PLACEHOLDER_W
    b: float = PLACEHOLDER_B
    fitted: bool = False
    rouge_n: int = 1

    def __post_init__(self):
        self.w = tuple(float(x) for x in self.w)
        if len(self.w) != N_FEATURES:
            raise MetricError(f"w must have {N_FEATURES} entries")
        if not all(np.isfinite(self.w)) or not np.isfinite(self.b):
            raise MetricError("metric parameters must be finite")

    def to_json(self) -> str:
        data = {"w": list(self.w), "b": float(self.b), "fitted": self.fitted, "rouge_n": self.rouge_n}
        if not self.fitted:
            data["note"] = "unfitted placeholder"
        return json.dumps(data, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricParams":
        data = json.loads(text)
        return cls(tuple(data["w"]), float(data["b"]), bool(data.get("fitted", False)), int(data.get("rouge_n", 1)))


def load_params(path) -> MetricParams:
    with open(path, encoding="utf-8") as fh:
        return MetricParams.from_json(fh.read())


def save_params(params: MetricParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(params.to_json())


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def features(units: Sequence, document: Document, title, dkb: DKB, n: int = 1) -> np.ndarray:
    """Six-entry feature vector for a summary made of ``units`` (EDUs or sentences).

    ``[title overlap, title-DKB overlap, title-entity overlap,
    pairwise redundancy, DKB coverage, entity coverage]``.
    """
    units = [list(u.tokens) if hasattr(u, "tokens") else list(u) for u in units]
    summary = [t for u in units for t in u]
    title = list(title)
    keys = dkb.lemmas

    def dkb_set(tokens):
        return {t.lemma for t in tokens if t.lemma in keys}

    def ent_set(tokens):
        return {t.lemma for t in tokens if t.is_entity}

    doc_tokens = document.tokens()
    s_dkb, t_dkb, d_dkb = dkb_set(summary), dkb_set(title), dkb_set(doc_tokens)
    s_ent, t_ent, d_ent = ent_set(summary), ent_set(title), ent_set(doc_tokens)
    redundancy = sum(rouge_n(a, b, n).f1 for a, b in combinations(units, 2))
    return np.array(
        [
            rouge_n(title, summary, n).f1,
            _ratio(len(t_dkb & s_dkb), len(d_dkb)),
            _ratio(len(t_ent & s_ent), len(d_ent)),
            _ratio(redundancy, len(units)),
            _ratio(len(s_dkb), len(d_dkb)),
            _ratio(len(s_ent), len(d_ent)),
        ]
    )


def faithful_score(f, params: MetricParams) -> float:
    return float(np.dot(params.w, np.asarray(f, dtype=np.float64)) + params.b)


def fit_params(training: Sequence, ridge: float = 0.0, rouge_n: int = 1) -> MetricParams:
    """Least-squares fit of ``target ~ w . f + b``; ``ridge`` penalises w only."""
    if ridge < 0:
        raise MetricError("ridge must be non-negative")
    if not training:
        raise MetricError("no training examples")
    X = np.array([np.asarray(f, dtype=np.float64) for f, _ in training])
    y = np.array([float(t) for _, t in training])
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise MetricError(f"features must have {N_FEATURES} entries")
    # centring removes the bias from the normal equations
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    gram = Xc.T @ Xc + ridge * np.eye(N_FEATURES)
    if ridge == 0 and np.linalg.matrix_rank(gram) < N_FEATURES:
        raise MetricError("normal equations are singular; supply more varied examples or ridge > 0")
    w = np.linalg.solve(gram, Xc.T @ yc)
    b = y_mean - x_mean @ w
    return MetricParams(tuple(w.tolist()), float(b), fitted=True, rouge_n=rouge_n)


def load_training(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out.append((rec["features"], rec["target"]))
    return out


# -- baselines ----------------------------------------------------------------


def _sentences(document: Document) -> list:
    return [sent for _, _, sent in document.sentences()]


def _take_until(order: list, lengths: list, target: int) -> list:
    chosen, words = [], 0
    for i in order:
        chosen.append(i)
        words += lengths[i]
        if words >= target:
            break
    return chosen


def lead_baseline(document: Document, budget: Budget, separator: str = " ") -> SummaryResult:
    sents = _sentences(document)
    lengths = [len(s) for s in sents]
    chosen = _take_until(list(range(len(sents))), lengths, budget.target(sum(lengths)))
    return result_from_units(sents, chosen, lengths, separator)


def sentence_similarity(a, b) -> float:
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    denom = np.log(la) + np.log(lb)
    if denom <= 0:
        return 0.0
    overlap = len(set(_lemmas(a)) & set(_lemmas(b)))
    return overlap / denom


def textrank_baseline(document: Document, budget: Budget, d: float = 0.85, separator: str = " ") -> SummaryResult:
    sents = _sentences(document)
    if not sents:
        raise MetricError("document has no sentences")
    n = len(sents)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = sentence_similarity(sents[i], sents[j])
    scores = rank_graph(w, d=d, tol=1e-8, max_iter=200).scores
    order = sorted(range(n), key=lambda i: (-round(scores[i], 12), i))
    lengths = [len(s) for s in sents]
    chosen = _take_until(order, lengths, budget.target(sum(lengths)))
    return result_from_units(sents, chosen, lengths, separator)
