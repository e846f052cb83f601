"""Threshold-gate access trees.

A policy document is JSON::

    {"attr": "A"}
    {"or":  [child, ...]}                      # 1-of-n
    {"and": [child, ...]}                      # n-of-n
    {"threshold": {"k": 2, "children": [...]}} # k-of-n

Attribute labels are resolved to integer ids through an ``AttributeUniverse``.
Nodes get pre-order ids at parse time; a child's ``index`` is its 1-based
position under its parent.
"""
from __future__ import annotations

import json
import random
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from itertools import islice
from typing import TYPE_CHECKING, Union

from .group import Element
from .interp import eval_poly, lagrange_coeff

if TYPE_CHECKING:
    from .kpabe import AttributeUniverse

MAX_DEPTH = 64
MAX_LEAVES = 4096


class PolicyError(ValueError):
    """Malformed policy document."""


@dataclass(frozen=True)
class Leaf:
    id: int
    attr: int


@dataclass(frozen=True)
class Gate:
    id: int
    k: int
    children: tuple[PolicyNode, ...]


PolicyNode = Union[Leaf, Gate]


@dataclass(frozen=True)
class AccessTree:
    root: PolicyNode
    leaf_count: int

    def nodes(self) -> Iterator[PolicyNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Gate):
                stack.extend(reversed(node.children))

    def leaves(self) -> list[Leaf]:
        return [n for n in self.nodes() if isinstance(n, Leaf)]

    def attributes(self) -> set[int]:
        return {leaf.attr for leaf in self.leaves()}

    def to_document(self, universe: AttributeUniverse) -> dict:
        def doc(node):
            if isinstance(node, Leaf):
                return {"attr": universe.label(node.attr)}
            kids = [doc(c) for c in node.children]
            if node.k == 1:
                return {"or": kids}
            if node.k == len(kids):
                return {"and": kids}
            return {"threshold": {"k": node.k, "children": kids}}
        return doc(self.root)

    def canonical_text(self, universe: AttributeUniverse) -> str:
        return json.dumps(self.to_document(universe), sort_keys=True, separators=(",", ":"))


def parse_policy(text: str | Mapping, universe: AttributeUniverse) -> AccessTree:
    """Parse a JSON policy (string or already-decoded mapping) into an AccessTree."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PolicyError(f"policy is not valid JSON: {exc}") from exc
    else:
        doc = text

    counter = 0
    leaves = 0

    def build(node, depth: int) -> PolicyNode:
        nonlocal counter, leaves
        if depth > MAX_DEPTH:
            raise PolicyError(f"policy deeper than {MAX_DEPTH} levels")
        if not isinstance(node, Mapping) or len(node) != 1:
            raise PolicyError(f"each node must be an object with one key: {node!r}")
        (key, body), = node.items()
        node_id = counter
        counter += 1
        if key == "attr":
            if not isinstance(body, str):
                raise PolicyError("attribute label must be a string")
            leaves += 1
            if leaves > MAX_LEAVES:
                raise PolicyError(f"policy has more than {MAX_LEAVES} leaves")
            return Leaf(node_id, universe.id_of(body))
        if key in ("or", "and"):
            kids = body
            if not isinstance(kids, list) or not kids:
                raise PolicyError(f"{key!r} needs a non-empty list of children")
            k = 1 if key == "or" else len(kids)
        elif key == "threshold":
            if not isinstance(body, Mapping) or set(body) != {"k", "children"}:
                raise PolicyError("threshold gate needs exactly 'k' and 'children'")
            k, kids = body["k"], body["children"]
            if not isinstance(kids, list) or not kids:
                raise PolicyError("threshold gate needs a non-empty children list")
            if not isinstance(k, int) or isinstance(k, bool):
                raise PolicyError("threshold k must be an integer")
        else:
            raise PolicyError(f"unknown node type {key!r}")
        if not 1 <= k <= len(kids):
            raise PolicyError(f"threshold {k} out of range for {len(kids)} children")
        children = tuple(build(c, depth + 1) for c in kids)
        return Gate(node_id, k, children)

    root = build(doc, 1)
    return AccessTree(root, leaves)


def _sat(node: PolicyNode, gamma: set[int]) -> bool:
    if isinstance(node, Leaf):
        return node.attr in gamma
    count = 0
    for child in node.children:
        if _sat(child, gamma):
            count += 1
            if count >= node.k:
                return True
    return False


def satisfies(tree: AccessTree | PolicyNode, gamma) -> bool:
    root = tree.root if isinstance(tree, AccessTree) else tree
    return _sat(root, set(gamma))


@dataclass(frozen=True)
class KeyedTree:
    tree: AccessTree
    polynomials: dict[int, tuple[int, ...]]   # node id -> coefficients, constant first

    def q_at(self, node: PolicyNode, x: int, p: int) -> int:
        return eval_poly(self.polynomials[node.id], x, p)


def assign_polynomials(tree: AccessTree, secret: int, rng: random.Random, p: int) -> KeyedTree:
    """Top-down: q_R(0) = secret, q_z(0) = q_parent(index(z)); deg q_x = k_x - 1."""
    polys: dict[int, tuple[int, ...]] = {}

    def walk(node: PolicyNode, value: int) -> None:
        if isinstance(node, Leaf):
            polys[node.id] = (value % p,)
            return
        coeffs = (value % p,) + tuple(rng.randrange(p) for _ in range(node.k - 1))
        polys[node.id] = coeffs
        for index, child in enumerate(node.children, start=1):
            walk(child, eval_poly(coeffs, index, p))

    walk(tree.root, secret)
    return KeyedTree(tree, polys)


# chooses which satisfied children (1-based indices) a gate combines
ChildSelector = Callable[[Gate, Sequence[int]], Sequence[int]]


def smallest_subset(gate: Gate, satisfied: Sequence[int]) -> Sequence[int]:
    return list(islice(satisfied, gate.k))


def decrypt_node(node: PolicyNode, key_components: Mapping[int, Element],
                 shares: Mapping[int, Element], gamma,
                 selector: ChildSelector = smallest_subset) -> Element | None:
    """Recursive DecryptNode. Returns e(g,g)^{q_node(0)*s}, or None if unsatisfied.

    ``key_components`` maps leaf id -> D_x (in G2), ``shares`` maps attribute
    id -> T_u^s (in G1).
    """
    gamma = set(gamma)
    if not _sat(node, gamma):
        return None
    group = next(iter(key_components.values())).group
    group.ops.decrypt_nodes += 1
    return _decrypt(node, key_components, shares, gamma, selector)


def _decrypt(node, key_components, shares, gamma, selector):
    if isinstance(node, Leaf):
        try:
            share = shares[node.attr]
            d = key_components[node.id]
        except KeyError as exc:
            raise ValueError(f"missing share or key component for leaf {node.id}") from exc
        return share.group.pair(share, d)

    satisfied = [i for i, child in enumerate(node.children, start=1) if _sat(child, gamma)]
    chosen = list(selector(node, satisfied))
    if len(chosen) != node.k or not set(chosen) <= set(satisfied):
        raise ValueError("selector must return k satisfied child indices")
    acc = None
    for i in chosen:
        f_z = _decrypt(node.children[i - 1], key_components, shares, gamma, selector)
        coeff = lagrange_coeff(i, chosen, 0, f_z.group.order)
        term = f_z if coeff == 1 else f_z ** coeff
        acc = term if acc is None else acc * term
    return acc
