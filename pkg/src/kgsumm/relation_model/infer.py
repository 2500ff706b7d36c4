"""Greedy bottom-up tree construction over EDUs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import torch

from ..dkb import DKB
from ..rstree import Internal, Leaf, Nuclearity, RSTree, is_multinuclear, merge
from ..segmenter import Pattern, Triple
from .data import class_label
from .model import RelationModel

MAX_SPAN_TOKENS = 64


@dataclass(frozen=True)
class Span:
    """What a scorer sees of a (possibly merged) node."""

    node: object
    lemmas: tuple
    triple: Triple
    sentence: Optional[tuple]  # (paragraph, sentence) when the span lies inside one sentence
    keyed: bool = True  # some EDU inside matched a knowledge pattern on its own

    @property
    def keywords(self) -> tuple:
        return tuple(x for x in (self.triple.a, self.triple.p, self.triple.t) if x)


class Scorer(Protocol):
    def score(self, left: Span, right: Span) -> tuple:
        """Return ``(merge score, relation, nuclearity)``."""


def heuristic_score(a, b, dkb: Optional[DKB] = None) -> tuple:
    """Triple overlap plus a same-sentence bonus.

    A side without any pattern-matched EDU is the satellite of a side that has
    one. Otherwise agreeing agents give Joint/NN and anything else
    Elaboration/NS.
    """
    ta, tb = a.triple, b.triple
    overlap = sum(1 for x, y in ((ta.a, tb.a), (ta.p, tb.p), (ta.t, tb.t)) if x and x == y)
    same_sentence = _sentence_of(a) is not None and _sentence_of(a) == _sentence_of(b)
    score = overlap + (1 if same_sentence else 0)
    ka, kb = _keyed(a), _keyed(b)
    if ka and not kb:
        return score, "Elaboration", Nuclearity.NS
    if kb and not ka:
        return score, "Background", Nuclearity.SN
    if ta.a and ta.a == tb.a:
        return score, "Joint", Nuclearity.NN
    return score, "Elaboration", Nuclearity.NS


def _keyed(x) -> bool:
    if isinstance(x, Span):
        return x.keyed
    return x.pattern is not Pattern.OTHER


def _sentence_of(x) -> Optional[tuple]:
    if isinstance(x, Span):
        return x.sentence
    return (x.paragraph, x.sentence)


class HeuristicScorer:
    def __init__(self, dkb: Optional[DKB] = None):
        self.dkb = dkb

    def score(self, left: Span, right: Span) -> tuple:
        return heuristic_score(left, right, self.dkb)


def resolve_label(probs) -> tuple:
    """Arg-max (relation, nuclearity), forced consistent with the relation's nuclear type."""
    probs = [float(p) for p in probs]
    best = max(range(len(probs)), key=lambda i: (probs[i], -i))
    rel, nuc = class_label(best)
    if (nuc == Nuclearity.NN) == is_multinuclear(rel):
        return rel, nuc
    allowed = [
        i
        for i in range(len(probs))
        if (class_label(i)[1] == nuc) and ((nuc == Nuclearity.NN) == is_multinuclear(class_label(i)[0]))
    ]
    if not allowed:
        # no relation fits the predicted nuclearity; fall back to the best consistent class
        allowed = [i for i in range(len(probs)) if (class_label(i)[1] == Nuclearity.NN) == is_multinuclear(class_label(i)[0])]
    best = max(allowed, key=lambda i: (probs[i], -i))
    return class_label(best)


class ModelScorer:
    def __init__(self, model: RelationModel, lang: str = "L2"):
        self.model = model
        self.lang = lang

    @torch.no_grad()
    def score(self, left: Span, right: Span) -> tuple:
        v = self.model.vocabs[self.lang]
        feats = self.model.pair_features(
            [v.encode(left.lemmas)], [v.encode(right.lemmas)], [v.encode(left.keywords)], [v.encode(right.keywords)], self.lang
        )
        merge_p = float(self.model.span_classify(feats)[0])
        rel, nuc = resolve_label(self.model.relation_classify(feats)[0].tolist())
        return merge_p, rel, nuc


def _leaf_span(edu, max_tokens: int = MAX_SPAN_TOKENS) -> Span:
    return Span(
        Leaf(edu.id),
        tuple(edu.lemmas)[:max_tokens],
        edu.triple,
        (edu.paragraph, edu.sentence),
        edu.pattern is not Pattern.OTHER,
    )


def _merged_span(node: Internal, left: Span, right: Span, max_tokens: int) -> Span:
    nucleus = right if node.nuclearity == Nuclearity.SN else left
    sentence = left.sentence if left.sentence is not None and left.sentence == right.sentence else None
    return Span(node, (left.lemmas + right.lemmas)[:max_tokens], nucleus.triple, sentence, left.keyed or right.keyed)


def infer_tree(edus: list, scorer: Optional[Scorer] = None, max_tokens: int = MAX_SPAN_TOKENS) -> RSTree:
    """Repeatedly merge the best-scoring adjacent pair (leftmost on ties) until one root remains."""
    if not edus:
        raise ValueError("cannot build a tree over zero EDUs")
    scorer = scorer or HeuristicScorer()
    spans = [_leaf_span(e, max_tokens) for e in edus]
    cache: dict = {}
    while len(spans) > 1:
        best = None
        for i in range(len(spans) - 1):
            key = (spans[i].node.start, spans[i].node.end, spans[i + 1].node.end)
            if key not in cache:
                cache[key] = scorer.score(spans[i], spans[i + 1])
            s = cache[key][0]
            if best is None or s > best[0]:
                best = (s, i)
        i = best[1]
        _, rel, nuc = cache[(spans[i].node.start, spans[i].node.end, spans[i + 1].node.end)]
        node = merge(spans[i].node, spans[i + 1].node, rel, nuc)
        spans[i : i + 2] = [_merged_span(node, spans[i], spans[i + 1], max_tokens)]
    return RSTree(spans[0].node, tuple(edus))
