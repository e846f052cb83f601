"""Small-universe KP-ABE: setup, key generation and the single-party encrypt/decrypt.

Placement on the asymmetric curve: T_i, A and ciphertext attribute components
live in G1; key components D_x and the identity element g^{s_i} live in G2.
"""
from __future__ import annotations

import hashlib
import random
import threading
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .group import Element, PairingGroup
from .policy import AccessTree, KeyedTree, PolicyError, assign_polynomials, decrypt_node, parse_policy


@dataclass(frozen=True)
class AttributeUniverse:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("attribute universe must not be empty")
        if len(set(labels)) != len(labels):
            raise ValueError("attribute labels must be unique")
        if not all(isinstance(x, str) and x for x in labels):
            raise ValueError("attribute labels must be non-empty strings")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def ids(self) -> range:
        return range(1, len(self.labels) + 1)

    def id_of(self, label: str) -> int:
        try:
            return self.labels.index(label) + 1
        except ValueError:
            raise PolicyError(f"unknown attribute {label!r}") from None

    def ids_of(self, labels: Iterable[str]) -> frozenset[int]:
        return frozenset(self.id_of(x) for x in labels)

    def label(self, attr: int) -> str:
        if not 1 <= attr <= len(self.labels):
            raise PolicyError(f"attribute id {attr} outside the universe")
        return self.labels[attr - 1]

    def digest(self) -> bytes:
        return hashlib.sha256("\n".join(self.labels).encode()).digest()


@dataclass(frozen=True)
class SystemParams:
    group: PairingGroup
    universe: AttributeUniverse
    T: dict[int, Element]
    Y: Element
    A: Element


@dataclass(frozen=True)
class MasterKey:
    t: dict[int, int]
    y: int
    alpha: int


@dataclass(frozen=True)
class DecryptionKey:
    tree: AccessTree
    D: dict[int, Element]     # leaf id -> g2^{q_x(0)/t_att(x)}


@dataclass(frozen=True)
class BaselineCiphertext:
    gamma: frozenset[int]
    E_prime: Element
    E: dict[int, Element]


def setup(group: PairingGroup, universe: AttributeUniverse,
          rng: random.Random) -> tuple[SystemParams, MasterKey]:
    t: dict[int, int] = {}
    seen: set[int] = set()
    for i in universe.ids:
        ti = group.random_scalar(rng)
        while ti in seen:
            ti = group.random_scalar(rng)
        seen.add(ti)
        t[i] = ti
    y = group.random_scalar(rng)
    alpha = group.random_scalar(rng)
    g1 = group.g1
    pk = SystemParams(
        group=group,
        universe=universe,
        T={i: g1 ** ti for i, ti in t.items()},
        Y=group.gt ** y,
        A=g1 ** alpha,
    )
    return pk, MasterKey(t=t, y=y, alpha=alpha)


def keygen_from_keyed(group: PairingGroup, mk: MasterKey, keyed: KeyedTree) -> DecryptionKey:
    p = group.order
    g2 = group.g2
    D = {}
    for leaf in keyed.tree.leaves():
        if leaf.attr not in mk.t:
            raise PolicyError(f"attribute id {leaf.attr} outside the universe")
        D[leaf.id] = g2 ** (keyed.polynomials[leaf.id][0] * pow(mk.t[leaf.attr], -1, p))
    return DecryptionKey(tree=keyed.tree, D=D)


def keygen(group: PairingGroup, mk: MasterKey, tree: AccessTree, rng: random.Random) -> DecryptionKey:
    for attr in tree.attributes():
        if attr not in mk.t:
            raise PolicyError(f"attribute id {attr} outside the universe")
    return keygen_from_keyed(group, mk, assign_polynomials(tree, mk.y, rng, group.order))


def verify_key(pk: SystemParams, key: DecryptionKey) -> bool:
    """Public well-formedness check: running DecryptNode with s = 1 must yield Y."""
    shares = {u: pk.T[u] for u in key.tree.attributes()}
    got = decrypt_node(key.tree.root, key.D, shares, shares.keys())
    return got == pk.Y


def _check_gamma(pk: SystemParams, gamma: Iterable[int]) -> frozenset[int]:
    gamma = frozenset(gamma)
    if not gamma:
        raise ValueError("attribute set must not be empty")
    missing = gamma - set(pk.T)
    if missing:
        raise PolicyError(f"attributes {sorted(missing)} outside the universe")
    return gamma


def gpsw_encrypt(pk: SystemParams, gamma: Iterable[int], m: Element,
                 rng: random.Random) -> BaselineCiphertext:
    gamma = _check_gamma(pk, gamma)
    s = pk.group.random_scalar(rng)
    return BaselineCiphertext(
        gamma=gamma,
        E_prime=m * pk.Y ** s,
        E={i: pk.T[i] ** s for i in sorted(gamma)},
    )


def gpsw_decrypt(key: DecryptionKey, ct: BaselineCiphertext) -> Element | None:
    f_root = decrypt_node(key.tree.root, key.D, ct.E, ct.gamma)
    if f_root is None:
        return None
    return ct.E_prime / f_root


class Authority:
    """Trusted key-generation server: owns MK and serializes keygen requests."""

    def __init__(self, group: PairingGroup, universe: AttributeUniverse, rng: random.Random):
        self.group = group
        self._rng = rng
        self._lock = threading.Lock()
        self.pk, self._mk = setup(group, universe, rng)

    @property
    def universe(self) -> AttributeUniverse:
        return self.pk.universe

    def keygen(self, policy: str | Mapping | AccessTree) -> DecryptionKey:
        tree = policy if isinstance(policy, AccessTree) else parse_policy(policy, self.universe)
        with self._lock:
            return keygen(self.group, self._mk, tree, self._rng)
