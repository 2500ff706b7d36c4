"""Extractive summarization by nucleus-preference traversal of an RS-tree.

The traversal is written as four mutually tail-calling subroutines
(``dfinding`` descends nucleus children, ``sfinding`` visits siblings,
``ufinding`` climbs to parents, ``index`` checks the budget). ``x`` tracks the
position inside the root's nucleus subtree and ``y`` inside its satellite
subtree; ``w`` selects which side acts next and flips after every move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .rstree import Internal, Node, RSTree, validate


class BudgetMode(str, Enum):
    WORDS = "word_limit"
    RATIO = "ratio"


@dataclass(frozen=True)
class Budget:
    mode: BudgetMode
    value: float

    def __post_init__(self):
        mode = BudgetMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is BudgetMode.RATIO and not 0.0 < self.value <= 1.0:
            raise ValueError("ratio budget must lie in (0, 1]")
        if mode is BudgetMode.WORDS and (self.value < 1 or int(self.value) != self.value):
            raise ValueError("word limit must be a positive integer")

    @classmethod
    def words(cls, n: int) -> "Budget":
        return cls(BudgetMode.WORDS, n)

    @classmethod
    def ratio(cls, r: float) -> "Budget":
        return cls(BudgetMode.RATIO, r)

    def target(self, total_words: int) -> int:
        """Word count at which selection stops; 0 means stop after the first unit."""
        if self.mode is BudgetMode.WORDS:
            return int(self.value)
        return math.floor(self.value * total_words)

    @property
    def label(self) -> str:
        if self.mode is BudgetMode.RATIO:
            return f"{round(self.value * 100, 6):g}%"
        return str(int(self.value))

    def to_obj(self) -> dict:
        return {"mode": self.mode.value, "value": self.value}

    @classmethod
    def parse(cls, text: str) -> "Budget":
        """``"10%"`` or ``"0.1r"`` style ratios, plain integers for word limits."""
        text = text.strip()
        if text.endswith("%"):
            return cls.ratio(float(text[:-1]) / 100)
        if text.endswith("r"):
            return cls.ratio(float(text[:-1]))
        return cls.words(int(text))


@dataclass(frozen=True)
class SummaryResult:
    selection_order: list
    output_order: list
    text: str
    word_count: int

    def to_obj(self, doc_id=None, budget: Optional[Budget] = None) -> dict:
        return {
            "doc_id": doc_id,
            "budget": budget.label if budget else None,
            "selection_order": list(self.selection_order),
            "output_order": list(self.output_order),
            "text": self.text,
            "word_count": self.word_count,
        }


class _Halt(Exception):
    pass


class _Traversal:
    def __init__(self, root: Internal, lengths: Sequence[int], target: Optional[int], strict_alternation: bool):
        self.root = root
        self.lengths = lengths
        self.target = target
        self.strict = strict_alternation
        self.parent: dict = {}
        self.sibling: dict = {}
        for node in _internal(root):
            for child in (node.left, node.right):
                self.parent[id(child)] = node
            self.sibling[id(node.left)] = node.right
            self.sibling[id(node.right)] = node.left
        self.travelled: set = set()
        self.selected: list = []
        self.words = 0
        self.j = 1
        self.k = 1

    # -- primitives -------------------------------------------------------

    def put(self, leaf) -> None:
        self.selected.append(leaf.edu_id)
        self.words += self.lengths[leaf.edu_id]
        node = leaf
        while node is not None and id(node) not in self.travelled:
            self.travelled.add(id(node))
            node = self.parent.get(id(node))

    def index(self) -> None:
        if self.target is not None and self.words >= self.target:
            raise _Halt

    # -- subroutines; each returns the next call as (fn, w, x, y, zp) -----

    def dfinding(self, w, x, y, zp):
        if w == 0:
            if self.j == 0:
                raise _Halt
            if not x.nucleus.is_leaf:
                return self.dfinding, w, x.nucleus, y, zp
            self.put(x.nucleus)
            self.index()
            return zp, 1 - w, x.nucleus, y, self.sfinding
        if self.k == 0:
            raise _Halt
        if y.is_leaf:
            self.put(y)
            self.k = 0
            if self.j == 0:
                raise _Halt
            self.index()
            return zp, 1 - w, x, y, self.sfinding
        if not y.nucleus.is_leaf:
            return self.dfinding, w, x, y.nucleus, zp
        self.put(y.nucleus)
        self.index()
        return zp, 1 - w, x, y.nucleus, self.sfinding

    def ufinding(self, w, x, y, zp):
        if w == 0:
            if self.j == 0:
                raise _Halt
            return zp, 1 - w, self.parent[id(x)], y, self.sfinding
        if self.k == 0:
            raise _Halt
        return zp, 1 - w, x, self.parent[id(y)], self.sfinding

    def _climb(self, w, x, y):
        # a side that only climbs past finished subtrees keeps its turn
        if self.strict:
            if w == 0:
                return self.sfinding, w, self.parent[id(x)], y, self.sfinding
            return self.sfinding, w, x, self.parent[id(y)], self.sfinding
        return self.ufinding, w, x, y, self.sfinding

    def sfinding(self, w, x, y, zp):
        if w == 0:
            if self.j == 0:
                return self.sfinding, 1 - w, x, y, self.sfinding
            if self.parent[id(x)] is self.root:
                self.j = 0
                if self.k == 0:
                    raise _Halt
                return self.sfinding, 1 - w, x, y, self.sfinding
            sib = self.sibling[id(x)]
            if id(sib) in self.travelled:
                return self._climb(w, x, y)
            if sib.is_leaf:
                self.put(sib)
                self.index()
                return self.ufinding, w, x, y, self.sfinding
            return self.dfinding, w, sib, y, self.sfinding
        if self.k == 0:
            return self.sfinding, 1 - w, x, y, self.sfinding
        if self.parent[id(y)] is self.root:
            self.k = 0
            if self.j == 0:
                raise _Halt
            return self.sfinding, 1 - w, x, y, self.sfinding
        sib = self.sibling[id(y)]
        if id(sib) in self.travelled:
            return self._climb(w, x, y)
        if sib.is_leaf:
            self.put(sib)
            self.index()
            return self.ufinding, w, x, y, self.sfinding
        return self.dfinding, w, x, sib, self.sfinding

    def run(self) -> list:
        call = (self.dfinding, 0, self.root, self.root.satellite, self.dfinding)
        try:
            while True:
                fn, *args = call
                call = fn(*args)
        except _Halt:
            pass
        return self.selected


def _internal(root: Node):
    stack = [root]
    while stack:
        n = stack.pop()
        if not n.is_leaf:
            yield n
            stack.extend((n.left, n.right))


def _edu_lengths(tree: RSTree, unit: str = "tokens") -> list:
    if not tree.edus:
        raise ValueError("tree carries no EDUs; word counts are unavailable")
    if unit == "chars":
        return [sum(len(t.surface) for t in e.tokens) for e in tree.edus]
    return [len(e.tokens) for e in tree.edus]


def select_edus(
    tree: RSTree,
    budget: Optional[Budget] = None,
    lengths: Optional[Sequence[int]] = None,
    strict_alternation: bool = True,
    unit: str = "tokens",
) -> list:
    """EDU ids in the order the traversal selects them.

    ``budget=None`` selects every leaf. ``lengths`` overrides the per-EDU
    word counts taken from ``tree.edus``. With ``strict_alternation=False``
    the subroutines run exactly as originally written, where climbing past an
    already travelled sibling hands the turn to the other side.
    """
    problems = validate(tree)
    if problems:
        raise ValueError("invalid tree: " + "; ".join(problems))
    if lengths is None:
        lengths = _edu_lengths(tree, unit) if budget is not None else [0] * tree.n_leaves
    root = tree.root
    if root.is_leaf:
        return [root.edu_id]
    target = None
    if budget is not None:
        target = budget.target(sum(lengths))
    return _Traversal(root, lengths, target, strict_alternation).run()


def summarize(
    tree: RSTree,
    budget: Optional[Budget] = None,
    separator: str = " ",
    strict_alternation: bool = True,
    unit: str = "tokens",
) -> SummaryResult:
    lengths = _edu_lengths(tree, unit)
    order = select_edus(tree, budget, lengths, strict_alternation)
    return result_from_units([tree.edus[i].tokens for i in range(len(tree.edus))], order, lengths, separator)


def result_from_units(units: Sequence, selection: list, lengths: Sequence[int], separator: str = " ") -> SummaryResult:
    output = sorted(selection)
    texts = [separator.join(t.surface for t in units[i]) for i in output]
    return SummaryResult(list(selection), output, separator.join(texts), sum(lengths[i] for i in output))


def summary_hierarchy(tree: RSTree, strict_alternation: bool = True, separator: str = " ") -> list:
    lengths = _edu_lengths(tree)
    full = select_edus(tree, None, lengths, strict_alternation)
    units = [e.tokens for e in tree.edus]
    return [result_from_units(units, full[:i], lengths, separator) for i in range(1, len(full) + 1)]
