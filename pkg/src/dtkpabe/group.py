"""Bilinear groups and their canonical encodings.

Two backends share one interface:

``BLS12Group``
    BLS12-381 through RELIC (``petrelic``). Asymmetric, e: G1 x G2 -> GT.
``ToyGroup``
    A symmetric pairing on the order-p subgroup of Z_q^* with q = 2p + 1 and
    p just below 2^31. Pairing takes a discrete log (baby-step giant-step), so
    it is only good for tests and hand-checkable vectors.

Scheme code always takes exponent-carrying "left" components from ``g1`` and
key/identity components from ``g2``; on the toy group both are the same
generator, so the algebra is identical in either setting.

Wire encoding of every scalar and element::

    tag (1 byte) | length (2 bytes, big-endian) | payload

Scalars are fixed-width little-endian. Group elements use the backend's
compressed canonical form and are validated (on-curve and subgroup) on decode.
"""
from __future__ import annotations

import random
import struct
from contextlib import contextmanager
from dataclasses import dataclass, fields
from functools import lru_cache
from math import isqrt

TAG_SCALAR = 0x00
TAG_G1 = 0x01
TAG_G2 = 0x02
TAG_GT = 0x03

_KIND_TAGS = {"G1": TAG_G1, "G2": TAG_G2, "GT": TAG_GT}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


class EncodingError(ValueError):
    """Malformed or non-canonical encoding, or a point outside the group."""


@dataclass
class OpCounter:
    pairings: int = 0
    exponentiations: int = 0
    interpolations: int = 0
    decrypt_nodes: int = 0

    def copy(self) -> OpCounter:
        return OpCounter(**self.as_dict())

    def __sub__(self, other: OpCounter) -> OpCounter:
        return OpCounter(**{f.name: getattr(self, f.name) - getattr(other, f.name)
                            for f in fields(self)})

    def __add__(self, other: OpCounter) -> OpCounter:
        return OpCounter(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                            for f in fields(self)})

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Element:
    """Immutable element of G1, G2 or GT, written multiplicatively."""

    __slots__ = ("group", "kind", "value")

    def __init__(self, group: PairingGroup, kind: str, value):
        self.group = group
        self.kind = kind
        self.value = value

    def _same(self, other: Element) -> None:
        if not isinstance(other, Element):
            raise TypeError(f"expected a group element, got {type(other).__name__}")
        if other.group.ident != self.group.ident or other.kind != self.kind:
            raise TypeError(f"cannot combine {self.kind} and {other.kind} elements")

    def __mul__(self, other: Element) -> Element:
        self._same(other)
        return Element(self.group, self.kind, self.group._mul(self.kind, self.value, other.value))

    def __truediv__(self, other: Element) -> Element:
        self._same(other)
        return self * other.inverse()

    def __pow__(self, exponent: int) -> Element:
        self.group.ops.exponentiations += 1
        e = int(exponent) % self.group.order
        return Element(self.group, self.kind, self.group._pow(self.kind, self.value, e))

    def inverse(self) -> Element:
        return Element(self.group, self.kind, self.group._inv(self.kind, self.value))

    def is_identity(self) -> bool:
        return self == self.group.identity(self.kind)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        return (other.group.ident == self.group.ident and other.kind == self.kind
                and self.group._eq(self.value, other.value))

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def to_bytes(self) -> bytes:
        payload = self.group._to_bytes(self.kind, self.value)
        return _frame(_KIND_TAGS[self.kind], payload)

    __bytes__ = to_bytes

    def __repr__(self) -> str:
        return f"<{self.group.name} {self.kind} {self.to_bytes()[3:11].hex()}...>"


def _frame(tag: int, payload: bytes) -> bytes:
    if len(payload) > 0xFFFF:
        raise EncodingError("payload too long for a 2-byte length field")
    return struct.pack(">BH", tag, len(payload)) + payload


def split_frame(data: bytes, offset: int = 0) -> tuple[int, bytes, int]:
    """Read one tagged frame starting at ``offset``; returns (tag, payload, next_offset)."""
    if len(data) - offset < 3:
        raise EncodingError("truncated frame header")
    tag, length = struct.unpack_from(">BH", data, offset)
    end = offset + 3 + length
    if end > len(data):
        raise EncodingError("truncated frame payload")
    return tag, bytes(data[offset + 3:end]), end


class PairingGroup:
    """Common interface; subclasses provide the raw backend hooks."""

    name = "abstract"
    ident = 0
    order: int
    symmetric: bool

    def __init__(self):
        self.ops = OpCounter()
        self.scalar_width = (self.order.bit_length() + 7) // 8

    # -- generators -------------------------------------------------------
    @property
    def g1(self) -> Element:
        return Element(self, "G1", self._generator("G1"))

    @property
    def g2(self) -> Element:
        kind = "G1" if self.symmetric else "G2"
        return Element(self, kind, self._generator(kind))

    @property
    def gt(self) -> Element:
        """e(g1, g2), cached per backend."""
        return Element(self, "GT", self._gt_generator())

    def identity(self, kind: str) -> Element:
        return Element(self, kind, self._identity(kind))

    # -- operations -------------------------------------------------------
    def pair(self, u: Element, v: Element) -> Element:
        left, right = ("G1", "G1") if self.symmetric else ("G1", "G2")
        if not (isinstance(u, Element) and isinstance(v, Element)):
            raise TypeError("pair() takes two group elements")
        if u.group.ident != self.ident or v.group.ident != self.ident:
            raise TypeError("element from a different group")
        if u.kind != left or v.kind != right:
            raise TypeError(f"pair() expects ({left}, {right}), got ({u.kind}, {v.kind})")
        self.ops.pairings += 1
        return Element(self, "GT", self._pair(u.value, v.value))

    def random_scalar(self, rng: random.Random, nonzero: bool = True) -> int:
        return rng.randrange(1 if nonzero else 0, self.order)

    def random_gt(self, rng: random.Random) -> Element:
        return self.gt ** self.random_scalar(rng)

    @contextmanager
    def counting(self):
        """Yield an OpCounter that holds the operations done inside the block."""
        delta = OpCounter()
        before = self.ops.copy()
        try:
            yield delta
        finally:
            for k, v in (self.ops - before).as_dict().items():
                setattr(delta, k, v)

    # -- encodings --------------------------------------------------------
    def scalar_to_bytes(self, x: int) -> bytes:
        return _frame(TAG_SCALAR, (int(x) % self.order).to_bytes(self.scalar_width, "little"))

    def scalar_from_bytes(self, data: bytes) -> int:
        tag, payload, end = split_frame(data)
        if tag != TAG_SCALAR or end != len(data):
            raise EncodingError("not a scalar frame")
        if len(payload) != self.scalar_width:
            raise EncodingError("wrong scalar width")
        x = int.from_bytes(payload, "little")
        if x >= self.order:
            raise EncodingError("scalar not reduced")
        return x

    def element_from_bytes(self, data: bytes, kind: str | None = None) -> Element:
        tag, payload, end = split_frame(data)
        if end != len(data):
            raise EncodingError("trailing bytes after element")
        got = _TAG_KINDS.get(tag)
        if got is None:
            raise EncodingError(f"unknown element tag {tag:#x}")
        if self.symmetric and got == "G2":
            raise EncodingError("symmetric group has no G2 tag")
        if kind is not None and got != kind:
            raise EncodingError(f"expected {kind}, found {got}")
        return Element(self, got, self._from_bytes(got, payload))

    # -- backend hooks ----------------------------------------------------
    def _generator(self, kind):  # pragma: no cover - abstract
        raise NotImplementedError

    def _gt_generator(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _identity(self, kind):  # pragma: no cover - abstract
        raise NotImplementedError

    def _mul(self, kind, a, b):  # pragma: no cover - abstract
        raise NotImplementedError

    def _pow(self, kind, a, e):  # pragma: no cover - abstract
        raise NotImplementedError

    def _inv(self, kind, a):  # pragma: no cover - abstract
        raise NotImplementedError

    def _eq(self, a, b) -> bool:
        return a == b

    def _pair(self, a, b):  # pragma: no cover - abstract
        raise NotImplementedError

    def _to_bytes(self, kind, a) -> bytes:  # pragma: no cover - abstract
        raise NotImplementedError

    def _from_bytes(self, kind, payload: bytes):  # pragma: no cover - abstract
        raise NotImplementedError


class ToyGroup(PairingGroup):
    """Symmetric pairing over the quadratic residues mod a 32-bit safe prime.

    G0 and GT are the same order-p subgroup (distinguished by tag). With
    generator g = 4, e(g^a, g^b) = g^(ab), computed by taking log_g of the
    left argument.
    """

    name = "toy"
    ident = 0x7F
    order = 2147483543          # p, prime
    modulus = 4294967087        # q = 2p + 1, prime
    generator = 4
    symmetric = True

    def _generator(self, kind):
        return self.generator

    def _gt_generator(self):
        return self.generator

    def _identity(self, kind):
        return 1

    def _mul(self, kind, a, b):
        return a * b % self.modulus

    def _pow(self, kind, a, e):
        return pow(a, e, self.modulus)

    def _inv(self, kind, a):
        return pow(a, -1, self.modulus)

    def _pair(self, a, b):
        return pow(b, _toy_dlog(a), self.modulus)

    def _to_bytes(self, kind, a):
        return a.to_bytes(4, "little")

    def _from_bytes(self, kind, payload):
        if len(payload) != 4:
            raise EncodingError("toy element must be 4 bytes")
        v = int.from_bytes(payload, "little")
        if not 1 <= v < self.modulus or pow(v, self.order, self.modulus) != 1:
            raise EncodingError("value outside the order-p subgroup")
        return v

    def dlog(self, element: Element) -> int:
        """log_g of a toy element (test helper)."""
        return _toy_dlog(element.value)


@lru_cache(maxsize=1)
def _bsgs_table() -> tuple[dict[int, int], int, int]:
    q, g, p = ToyGroup.modulus, ToyGroup.generator, ToyGroup.order
    m = isqrt(p) + 1
    table = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * g % q
    giant = pow(g, -m, q)
    return table, m, giant


@lru_cache(maxsize=1 << 16)
def _toy_dlog(h: int) -> int:
    table, m, giant = _bsgs_table()
    q = ToyGroup.modulus
    gamma = h
    for i in range(m):
        j = table.get(gamma)
        if j is not None:
            return (i * m + j) % ToyGroup.order
        gamma = gamma * giant % q
    raise ValueError("element is not in the subgroup")  # pragma: no cover


class BLS12Group(PairingGroup):
    """BLS12-381 via RELIC; ~128-bit security, Type-III pairing."""

    name = "bls12-381"
    ident = 0x01
    symmetric = False

    def __init__(self):
        from petrelic.multiplicative import pairing as pg

        self._pg = pg
        self._groups = {"G1": pg.G1, "G2": pg.G2, "GT": pg.GT}
        self._elem_types = {"G1": pg.G1Element, "G2": pg.G2Element, "GT": pg.GTElement}
        self.order = int(pg.G1.order())
        super().__init__()
        self._gt_gen = pg.G1.generator().pair(pg.G2.generator())

    def _generator(self, kind):
        return self._groups[kind].generator()

    def _gt_generator(self):
        return self._gt_gen

    def _identity(self, kind):
        if kind == "GT":
            return self._pg.GT.unity()
        return self._groups[kind].neutral_element()

    def _mul(self, kind, a, b):
        return a * b

    def _pow(self, kind, a, e):
        return a ** e

    def _inv(self, kind, a):
        return a.inverse()

    def _pair(self, a, b):
        return a.pair(b)

    def _to_bytes(self, kind, a):
        return a.to_binary()

    def _from_bytes(self, kind, payload):
        try:
            v = self._elem_types[kind].from_binary(payload)
        except Exception as exc:
            raise EncodingError(f"cannot decode {kind} point: {exc}") from exc
        # RELIC reports the point at infinity as invalid; its one-byte form is canonical
        if payload == b"\x00" and kind != "GT":
            return self._identity(kind)
        if not v.is_valid():
            raise EncodingError(f"{kind} point fails the curve/subgroup check")
        if v.to_binary() != payload:
            raise EncodingError(f"non-canonical {kind} encoding")
        return v


_BACKENDS = {ToyGroup.name: ToyGroup, BLS12Group.name: BLS12Group}
_BY_IDENT = {ToyGroup.ident: ToyGroup, BLS12Group.ident: BLS12Group}


def get_group(name: str = "bls12-381") -> PairingGroup:
    """Fresh group handle (each carries its own operation counter)."""
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown group {name!r}; choose from {sorted(_BACKENDS)}") from None


def group_for_ident(ident: int) -> PairingGroup:
    try:
        return _BY_IDENT[ident]()
    except KeyError:
        raise EncodingError(f"unknown group id {ident:#x}") from None
