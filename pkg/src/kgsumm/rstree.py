"""Binary rhetorical-structure trees over EDUs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Union

RELATIONS = (
    "Attribution",
    "Background",
    "Cause",
    "Comparison",
    "Condition",
    "Contrast",
    "Elaboration",
    "Enablement",
    "Evaluation",
    "Explanation",
    "Joint",
    "Manner-Means",
    "Topic-Comment",
    "Summary",
    "Temporal",
    "Topic-Change",
    "Textual-Organization",
    "Same-Unit",
)

DEFAULT_MULTINUCLEAR = frozenset({"Joint", "Same-Unit", "Temporal"})

_multinuclear = set(DEFAULT_MULTINUCLEAR)


def set_multinuclear(names) -> None:
    """Override which relations count as multinuclear."""
    names = set(names)
    unknown = names - set(RELATIONS)
    if unknown:
        raise ValueError(f"unknown relations: {sorted(unknown)}")
    _multinuclear.clear()
    _multinuclear.update(names)


def is_multinuclear(relation: str) -> bool:
    return relation in _multinuclear


class Nuclearity(str, Enum):
    NS = "NS"
    SN = "SN"
    NN = "NN"


NUCLEARITIES = (Nuclearity.NS, Nuclearity.SN, Nuclearity.NN)


class TreeError(ValueError):
    pass


class AdjacencyError(TreeError):
    pass


class ConsistencyError(TreeError):
    pass


class TreeParseError(TreeError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")


@dataclass(frozen=True)
class Leaf:
    edu_id: int

    def __post_init__(self):
        if not isinstance(self.edu_id, int) or self.edu_id < 0:
            raise TreeError(f"leaf id must be a non-negative integer, got {self.edu_id!r}")

    @property
    def is_leaf(self) -> bool:
        return True

    @property
    def start(self) -> int:
        return self.edu_id

    @property
    def end(self) -> int:
        return self.edu_id


@dataclass(frozen=True)
class Internal:
    relation: str
    nuclearity: Nuclearity
    left: "Node"
    right: "Node"

    @property
    def is_leaf(self) -> bool:
        return False

    @property
    def start(self) -> int:
        return self.left.start

    @property
    def end(self) -> int:
        return self.right.end

    @property
    def nucleus(self) -> "Node":
        # multinuclear nodes: the left child takes the nucleus position
        return self.right if self.nuclearity == Nuclearity.SN else self.left

    @property
    def satellite(self) -> "Node":
        return self.left if self.nuclearity == Nuclearity.SN else self.right


Node = Union[Leaf, Internal]


def make_leaf(edu_id: int) -> Leaf:
    return Leaf(edu_id)


def _check_label(relation: str, nuclearity) -> Nuclearity:
    if relation not in RELATIONS:
        raise ConsistencyError(f"unknown relation {relation!r}")
    nuc = Nuclearity(nuclearity)
    if (nuc == Nuclearity.NN) != is_multinuclear(relation):
        raise ConsistencyError(f"nuclearity {nuc.value} is inconsistent with relation {relation}")
    return nuc


def merge(left: Node, right: Node, relation: str, nuclearity) -> Internal:
    if right.start != left.end + 1:
        raise AdjacencyError(f"spans [{left.start},{left.end}] and [{right.start},{right.end}] are not adjacent")
    return Internal(relation, _check_label(relation, nuclearity), left, right)


def right_binarize(children: list, relation: str) -> Node:
    if len(children) < 2:
        raise TreeError("right_binarize needs at least two children")
    if not is_multinuclear(relation):
        raise ConsistencyError(f"{relation} is not multinuclear")
    node = children[-1]
    for child in reversed(children[:-1]):
        node = merge(child, node, relation, Nuclearity.NN)
    return node


def leaves(node: Node) -> list:
    out = []
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            out.append(n.edu_id)
        else:
            stack.append(n.right)
            stack.append(n.left)
    return out


def internal_nodes(node: Node) -> Iterator[Internal]:
    stack = [node]
    while stack:
        n = stack.pop()
        if not n.is_leaf:
            yield n
            stack.append(n.right)
            stack.append(n.left)


@dataclass(frozen=True)
class RSTree:
    root: Node
    edus: tuple = ()

    @property
    def n_leaves(self) -> int:
        return len(leaves(self.root))


def validate(tree: RSTree) -> list:
    """Return every invariant violation found; an empty list means the tree is valid."""
    violations = []

    def walk(node) -> Optional[list]:
        if isinstance(node, Leaf):
            if not isinstance(node.edu_id, int) or node.edu_id < 0:
                violations.append(f"leaf with invalid id {node.edu_id!r}")
            return [node.edu_id]
        if not isinstance(node, Internal):
            violations.append(f"unexpected node {node!r}")
            return []
        if node.relation not in RELATIONS:
            violations.append(f"unknown relation {node.relation!r}")
        else:
            try:
                nuc = Nuclearity(node.nuclearity)
            except ValueError:
                violations.append(f"unknown nuclearity {node.nuclearity!r}")
            else:
                if (nuc == Nuclearity.NN) != is_multinuclear(node.relation):
                    violations.append(f"{node.relation} node labelled {nuc.value}")
        ls, rs = walk(node.left), walk(node.right)
        ids = ls + rs
        if ids and ids != list(range(ids[0], ids[0] + len(ids))):
            violations.append(f"non-contiguous span {ids} under {node.relation}")
        return ids

    ids = walk(tree.root)
    n = len(tree.edus) if tree.edus else len(ids)
    if ids != list(range(n)):
        violations.append(f"leaves {ids} do not cover EDUs 0..{n - 1}")
    return violations


# -- serialization ---------------------------------------------------------


def node_to_obj(node: Node) -> dict:
    if node.is_leaf:
        return {"leaf": node.edu_id}
    return {
        "rel": node.relation,
        "nuc": node.nuclearity.value,
        "left": node_to_obj(node.left),
        "right": node_to_obj(node.right),
    }


def node_from_obj(obj) -> Node:
    if not isinstance(obj, dict):
        raise TreeError(f"expected an object, got {obj!r}")
    if "leaf" in obj:
        return Leaf(obj["leaf"])
    try:
        return Internal(obj["rel"], Nuclearity(obj["nuc"]), node_from_obj(obj["left"]), node_from_obj(obj["right"]))
    except KeyError as exc:
        raise TreeError(f"missing field {exc}") from exc


def serialize(tree: RSTree) -> str:
    edus = [e.to_record() if hasattr(e, "to_record") else e for e in tree.edus]
    return json.dumps({"edus": edus, "root": node_to_obj(tree.root)}, ensure_ascii=False, sort_keys=True)


def deserialize(text: str) -> RSTree:
    from .segmenter import EDU

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeParseError(exc.msg, exc.pos) from exc
    if not isinstance(data, dict) or "root" not in data:
        raise TreeParseError("missing root", 0)
    edus = tuple(EDU.from_record(e) if isinstance(e, dict) else e for e in data.get("edus", []))
    return RSTree(node_from_obj(data["root"]), edus)


def to_bracketed(node: Node) -> str:
    """Compact text form, e.g. ``(Elaboration:NS 0 (Joint:NN 1 2))``."""
    if node.is_leaf:
        return str(node.edu_id)
    return f"({node.relation}:{node.nuclearity.value} {to_bracketed(node.left)} {to_bracketed(node.right)})"


def shape(node: Node):
    """Nested tuples of leaf ids, ignoring labels."""
    if node.is_leaf:
        return node.edu_id
    return (shape(node.left), shape(node.right))
