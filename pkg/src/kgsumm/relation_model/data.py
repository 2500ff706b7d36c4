"""Vocabularies and text-pair records for the relation model."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from ..rstree import NUCLEARITIES, RELATIONS, Nuclearity

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
RESERVED = (PAD, UNK, BOS, EOS)
PAD_ID, UNK_ID, BOS_ID, EOS_ID = range(4)

LANGS = ("L1", "L2")
N_CLASSES = len(RELATIONS) * len(NUCLEARITIES)


def other_lang(lang: str) -> str:
    return "L2" if lang == "L1" else "L1"


def class_index(relation: str, nuclearity) -> int:
    return RELATIONS.index(relation) * len(NUCLEARITIES) + NUCLEARITIES.index(Nuclearity(nuclearity))


def class_label(index: int) -> tuple:
    rel, nuc = divmod(index, len(NUCLEARITIES))
    return RELATIONS[rel], NUCLEARITIES[nuc]


class Vocab:
    def __init__(self, tokens: Iterable[str] = ()):
        self.itos = list(RESERVED)
        for tok in tokens:
            if tok not in RESERVED:
                self.itos.append(tok)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate vocabulary entries")

    @classmethod
    def build(cls, sequences: Iterable[Iterable[str]], min_count: int = 2) -> "Vocab":
        counts = Counter(tok for seq in sequences for tok in seq)
        kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        return cls(kept)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def encode(self, tokens: Iterable[str]) -> list:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list:
        """Tokens up to the first EOS, without PAD or BOS."""
        out = []
        for i in ids:
            if i == EOS_ID:
                break
            if i not in (PAD_ID, BOS_ID):
                out.append(self.itos[i])
        return out


@dataclass(frozen=True)
class PairLabel:
    merge: bool
    relation: Optional[str] = None
    nuclearity: Optional[Nuclearity] = None

    @property
    def class_index(self) -> Optional[int]:
        if not self.merge or self.relation is None:
            return None
        return class_index(self.relation, self.nuclearity)


@dataclass(frozen=True)
class TextPair:
    lang: str
    span1: tuple
    span2: tuple
    dkb1: tuple = ()
    dkb2: tuple = ()
    label: Optional[PairLabel] = None

    def __post_init__(self):
        if self.lang not in LANGS:
            raise ValueError(f"lang must be one of {LANGS}")
        if not self.span1 or not self.span2:
            raise ValueError("spans must be non-empty")

    def to_record(self) -> dict:
        rec = {
            "lang": self.lang,
            "span1": list(self.span1),
            "span2": list(self.span2),
            "dkb1": list(self.dkb1),
            "dkb2": list(self.dkb2),
        }
        if self.label is not None:
            rec["label"] = {
                "merge": self.label.merge,
                "rel": self.label.relation,
                "nuc": self.label.nuclearity.value if self.label.nuclearity else None,
            }
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "TextPair":
        label = None
        if rec.get("label"):
            lab = rec["label"]
            nuc = Nuclearity(lab["nuc"]) if lab.get("nuc") else None
            label = PairLabel(bool(lab["merge"]), lab.get("rel"), nuc)
        return cls(
            rec["lang"],
            tuple(rec["span1"]),
            tuple(rec["span2"]),
            tuple(rec.get("dkb1") or ()),
            tuple(rec.get("dkb2") or ()),
            label,
        )


def load_pairs(path) -> list:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                pairs.append(TextPair.from_record(json.loads(line)))
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
    return pairs


def save_pairs(pairs: Iterable[TextPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")


def build_vocabs(pairs: Iterable[TextPair], min_count: int = 2) -> dict:
    seqs: dict = {lang: [] for lang in LANGS}
    for p in pairs:
        seqs[p.lang].extend([p.span1, p.span2, p.dkb1, p.dkb2])
    return {lang: Vocab.build(seqs[lang], min_count) for lang in LANGS}


def pairs_from_edus(edus: list, lang: str = "L2") -> list:
    """Unlabelled adjacent-EDU pairs, usable as translation-only training data."""
    out = []
    for a, b in zip(edus, edus[1:]):
        out.append(
            TextPair(
                lang,
                tuple(a.lemmas),
                tuple(b.lemmas),
                tuple(x for x in (a.triple.a, a.triple.p, a.triple.t) if x),
                tuple(x for x in (b.triple.a, b.triple.p, b.triple.t) if x),
            )
        )
    return out
