"""Knowledge-guided discourse segmentation into EDUs."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .corpus import Document, Token
from .dkb import DKB

CLAUSE_DELIMITERS = frozenset({"，", "、", "；", "：", ",", ";", ":"})


class SegmentationError(ValueError):
    pass


class Pattern(str, Enum):
    APT = "APT"
    PT = "PT"
    OTHER = "OTHER"


@dataclass(frozen=True)
class Triple:
    a: Optional[str] = None
    p: Optional[str] = None
    t: Optional[str] = None

    @property
    def complete(self) -> bool:
        return bool(self.a and self.p and self.t)


@dataclass(frozen=True)
class EDU:
    id: int
    tokens: tuple
    paragraph: int
    sentence: int
    clauses: tuple  # (first clause index, one past the last) within the sentence
    triple: Triple = Triple()
    pattern: Pattern = Pattern.OTHER
    borrowed_agent: bool = False

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)

    @property
    def lemmas(self) -> list:
        return [t.lemma for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "tokens": [t.to_record() for t in self.tokens],
            "span": [self.paragraph, self.sentence, list(self.clauses)],
            "triple": {"a": self.triple.a, "p": self.triple.p, "t": self.triple.t},
            "pattern": self.pattern.value,
            "borrowed_agent": self.borrowed_agent,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EDU":
        para, sent, clauses = rec["span"]
        tri = rec.get("triple") or {}
        if "tokens" in rec:
            tokens = tuple(Token.from_record(t) for t in rec["tokens"])
        else:
            tokens = tuple(Token(w, w) for w in rec["text"].split())
        return cls(
            int(rec["id"]),
            tokens,
            int(para),
            int(sent),
            tuple(clauses),
            Triple(tri.get("a"), tri.get("p"), tri.get("t")),
            Pattern(rec.get("pattern", "OTHER")),
            bool(rec.get("borrowed_agent", False)),
        )


def dump_edus(edus: list, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([e.to_record() for e in edus], fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_edus(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [EDU.from_record(r) for r in json.load(fh)]


def split_clauses(sentence) -> list:
    clauses, current = [], []
    for tok in sentence:
        current.append(tok)
        surface = tok.surface if isinstance(tok, Token) else tok
        if surface in CLAUSE_DELIMITERS:
            clauses.append(current)
            current = []
    if current:
        clauses.append(current)
    return clauses


def match_pattern(clause, dkb: DKB) -> tuple:
    """Return ``(Pattern, Triple)`` for a clause, keeping the earliest lemma per category."""
    if len(dkb) == 0:
        raise SegmentationError("empty knowledge base")
    found = {}
    for tok in clause:
        lemma = tok.lemma if isinstance(tok, Token) else tok
        cat = dkb.category(lemma)
        if cat is not None and cat not in found:
            found[cat] = lemma
    triple = Triple(found.get("A"), found.get("P"), found.get("T"))
    if triple.p and triple.t:
        return (Pattern.APT if triple.a else Pattern.PT), triple
    return Pattern.OTHER, triple


def segment(document: Document, dkb: DKB) -> list:
    if len(dkb) == 0:
        raise SegmentationError("empty knowledge base")
    edus = []
    for p, s, sent in document.sentences():
        clauses = split_clauses(sent)
        # each group: [first clause, end clause, pattern, triple]
        groups = []
        for ci, clause in enumerate(clauses):
            pattern, triple = match_pattern(clause, dkb)
            if pattern is not Pattern.OTHER:
                # leading OTHER clauses belong to the first pattern clause
                groups.append([0 if not groups else ci, ci + 1, pattern, triple])
            elif groups:
                groups[-1][1] = ci + 1
        if not groups:
            groups = [[0, len(clauses), Pattern.OTHER, Triple()]]
        for start, end, pattern, triple in groups:
            tokens = tuple(tok for clause in clauses[start:end] for tok in clause)
            edus.append(EDU(len(edus), tokens, p, s, (start, end), triple, pattern))
    return edus


def _nearest(index: int, candidates: list) -> Optional[int]:
    best = None
    for c in candidates:
        dist = abs(c - index)
        # strict comparison keeps the preceding candidate on ties
        if best is None or dist < abs(best - index):
            best = c
    return best


def borrow_agent(edus: list, default_agent: Optional[str] = None) -> list:
    """Complete every triple from the nearest EDU that carries the missing slots.

    PT-pattern EDUs borrow only the agent. EDUs with no pattern clause borrow
    the whole triple.
    """
    agents = [e.id for e in edus if e.triple.a]
    if not agents and default_agent is None:
        raise SegmentationError("no EDU carries an agent and no default agent was given")
    cores = [e.id for e in edus if e.triple.p and e.triple.t]
    by_id = {e.id: e for e in edus}
    out = []
    for e in edus:
        if e.triple.complete:
            out.append(e)
            continue
        p, t = e.triple.p, e.triple.t
        if not (p and t):
            src = _nearest(e.id, cores)
            if src is None:
                raise SegmentationError("no EDU matches a knowledge pattern; cannot complete triples")
            p, t = by_id[src].triple.p, by_id[src].triple.t
        a = e.triple.a
        if not a:
            src = _nearest(e.id, agents)
            a = by_id[src].triple.a if src is not None else default_agent
        out.append(replace(e, triple=Triple(a, p, t), borrowed_agent=True))
    return out


def segment_document(document: Document, dkb: DKB, default_agent: Optional[str] = None) -> list:
    return borrow_agent(segment(document, dkb), default_agent)
