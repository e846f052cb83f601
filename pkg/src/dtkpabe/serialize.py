"""Versioned binary formats for public parameters, keys and ciphertexts.

Layout::

    magic "DTKP" | version u8 | kind u8 | group id u8 | sha256(universe) 32 bytes
    then a sequence of tagged frames (see ``group`` for element/scalar frames)

Extra frame tags used here: 0x10 raw bytes, 0x11 unsigned int (4-byte
little-endian), 0x12 "absent" marker for optional fields.
"""
from __future__ import annotations

import struct

from .group import TAG_SCALAR, Element, EncodingError, PairingGroup, split_frame
from .kpabe import AttributeUniverse, BaselineCiphertext, DecryptionKey, SystemParams
from .policy import parse_policy
from .sharing import Cid, CidError

MAGIC = b"DTKP"
VERSION = 1

KIND_PK = 1
KIND_KEY = 2
KIND_BASELINE_CT = 3
KIND_SEMI_CT = 4
KIND_FINISHED_CT = 5
KIND_PREDECRYPTED_CT = 6

_TAG_BYTES = 0x10
_TAG_UINT = 0x11
_TAG_NONE = 0x12
_HEADER = struct.Struct(">4sBBB32s")


class _Writer:
    def __init__(self, kind: int, group: PairingGroup, universe: AttributeUniverse):
        self.parts = [_HEADER.pack(MAGIC, VERSION, kind, group.ident, universe.digest())]
        self.group = group

    def raw(self, tag: int, payload: bytes) -> None:
        self.parts.append(struct.pack(">BH", tag, len(payload)) + payload)

    def blob(self, b: bytes) -> None:
        # long payloads (wrapped data) are chunked into consecutive frames
        self.uint(len(b))
        for i in range(0, len(b), 0xFFFF):
            self.raw(_TAG_BYTES, b[i:i + 0xFFFF])

    def uint(self, n: int) -> None:
        self.raw(_TAG_UINT, int(n).to_bytes(4, "little"))

    def elem(self, e: Element | None) -> None:
        if e is None:
            self.raw(_TAG_NONE, b"")
        else:
            self.parts.append(e.to_bytes())

    def scalar(self, x: int) -> None:
        self.parts.append(self.group.scalar_to_bytes(x))

    def cid(self, cid: Cid) -> None:
        self.parts.append(cid.to_bytes(self.group))

    def attr_map(self, m: dict[int, Element]) -> None:
        self.uint(len(m))
        for attr in sorted(m):
            self.uint(attr)
            self.elem(m[attr])

    def done(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes, kind: int, group: PairingGroup,
                 universe: AttributeUniverse | None):
        if len(data) < _HEADER.size:
            raise EncodingError("truncated header")
        magic, version, got_kind, ident, digest = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise EncodingError("bad magic")
        if version != VERSION:
            raise EncodingError(f"unsupported format version {version}")
        if got_kind != kind:
            raise EncodingError(f"expected object kind {kind}, found {got_kind}")
        if ident != group.ident:
            raise EncodingError("object was produced on a different group")
        if universe is not None and digest != universe.digest():
            raise EncodingError("attribute universe mismatch")
        self.digest = digest
        self.data = data
        self.off = _HEADER.size
        self.group = group

    def _frame(self) -> tuple[int, bytes, int]:
        return split_frame(self.data, self.off)

    def raw(self, tag: int) -> bytes:
        got, payload, end = self._frame()
        if got != tag:
            raise EncodingError(f"expected frame tag {tag:#x}, found {got:#x}")
        self.off = end
        return payload

    def blob(self) -> bytes:
        n = self.uint()
        out = bytearray()
        while len(out) < n:
            out += self.raw(_TAG_BYTES)
        if len(out) != n:
            raise EncodingError("blob length mismatch")
        return bytes(out)

    def uint(self) -> int:
        payload = self.raw(_TAG_UINT)
        if len(payload) != 4:
            raise EncodingError("bad uint frame")
        return int.from_bytes(payload, "little")

    def elem(self, kind: str, optional: bool = False) -> Element | None:
        tag, _, end = self._frame()
        if optional and tag == _TAG_NONE:
            self.off = end
            return None
        e = self.group.element_from_bytes(self.data[self.off:end], kind=kind)
        self.off = end
        return e

    def scalar(self) -> int:
        tag, _, end = self._frame()
        if tag != TAG_SCALAR:
            raise EncodingError("expected a scalar frame")
        x = self.group.scalar_from_bytes(self.data[self.off:end])
        self.off = end
        return x

    def cid(self) -> Cid:
        start = self.off
        _, _, off = split_frame(self.data, start)
        _, _, off = split_frame(self.data, off)
        _, _, off = split_frame(self.data, off)
        self.off = off
        try:
            return Cid.from_bytes(self.group, self.data[start:off])
        except CidError as exc:
            raise EncodingError(str(exc)) from exc

    def attr_map(self, kind: str) -> dict[int, Element]:
        n = self.uint()
        out = {}
        for _ in range(n):
            attr = self.uint()
            out[attr] = self.elem(kind)
        if list(out) != sorted(out) or len(out) != n:
            raise EncodingError("attribute map not in canonical order")
        return out

    def end(self) -> None:
        if self.off != len(self.data):
            raise EncodingError("trailing bytes")


# -- public parameters -------------------------------------------------------

def dump_pk(pk: SystemParams) -> bytes:
    w = _Writer(KIND_PK, pk.group, pk.universe)
    w.blob("\n".join(pk.universe.labels).encode())
    w.attr_map(pk.T)
    w.elem(pk.Y)
    w.elem(pk.A)
    return w.done()


def load_pk(data: bytes, group: PairingGroup) -> SystemParams:
    r = _Reader(data, KIND_PK, group, None)
    universe = AttributeUniverse(tuple(r.blob().decode().split("\n")))
    if universe.digest() != r.digest:
        raise EncodingError("universe digest does not match embedded labels")
    g1 = group.g1.kind
    T = r.attr_map(g1)
    if set(T) != set(universe.ids):
        raise EncodingError("PK must hold one T_i per attribute")
    Y = r.elem("GT")
    A = r.elem(g1)
    r.end()
    return SystemParams(group=group, universe=universe, T=T, Y=Y, A=A)


# -- decryption keys ---------------------------------------------------------

def dump_key(key: DecryptionKey, pk: SystemParams) -> bytes:
    w = _Writer(KIND_KEY, pk.group, pk.universe)
    w.blob(key.tree.canonical_text(pk.universe).encode())
    leaves = key.tree.leaves()
    w.uint(len(leaves))
    for leaf in leaves:
        w.elem(key.D[leaf.id])
    return w.done()


def load_key(data: bytes, pk: SystemParams) -> DecryptionKey:
    r = _Reader(data, KIND_KEY, pk.group, pk.universe)
    tree = parse_policy(r.blob().decode(), pk.universe)
    leaves = tree.leaves()
    if r.uint() != len(leaves):
        raise EncodingError("leaf count mismatch")
    g2 = pk.group.g2.kind
    D = {leaf.id: r.elem(g2) for leaf in leaves}
    r.end()
    return DecryptionKey(tree=tree, D=D)


# -- baseline ciphertext -----------------------------------------------------

def dump_baseline_ct(ct: BaselineCiphertext, pk: SystemParams) -> bytes:
    w = _Writer(KIND_BASELINE_CT, pk.group, pk.universe)
    w.elem(ct.E_prime)
    w.attr_map(ct.E)
    return w.done()


def load_baseline_ct(data: bytes, pk: SystemParams) -> BaselineCiphertext:
    r = _Reader(data, KIND_BASELINE_CT, pk.group, pk.universe)
    e_prime = r.elem("GT")
    E = r.attr_map(pk.group.g1.kind)
    r.end()
    return BaselineCiphertext(gamma=frozenset(E), E_prime=e_prime, E=E)


# -- protocol ciphertexts ----------------------------------------------------

def dump_protocol_ct(ct, pk: SystemParams) -> bytes:
    from .protocol.messages import FinishedCiphertext, PreDecryptedCiphertext, SemiCiphertext

    if isinstance(ct, SemiCiphertext):
        w = _Writer(KIND_SEMI_CT, pk.group, pk.universe)
        w.cid(ct.cid)
        w.elem(ct.C_hat)
        w.elem(ct.C_tilde)
    elif isinstance(ct, FinishedCiphertext):
        w = _Writer(KIND_FINISHED_CT, pk.group, pk.universe)
        w.cid(ct.cid)
        w.elem(ct.C_hat)
    elif isinstance(ct, PreDecryptedCiphertext):
        w = _Writer(KIND_PREDECRYPTED_CT, pk.group, pk.universe)
        w.cid(ct.cid)
        w.elem(ct.C_tilde_out)
    else:
        raise TypeError(f"not a protocol ciphertext: {type(ct).__name__}")
    w.attr_map(ct.C_u)
    w.blob(ct.wrapped)
    return w.done()


def load_protocol_ct(data: bytes, pk: SystemParams):
    from .protocol.messages import FinishedCiphertext, PreDecryptedCiphertext, SemiCiphertext

    if len(data) < _HEADER.size:
        raise EncodingError("truncated header")
    kind = data[5]
    if kind not in (KIND_SEMI_CT, KIND_FINISHED_CT, KIND_PREDECRYPTED_CT):
        raise EncodingError(f"not a protocol ciphertext kind: {kind}")
    r = _Reader(data, kind, pk.group, pk.universe)
    cid = r.cid()
    g1 = pk.group.g1.kind
    if kind == KIND_SEMI_CT:
        c_hat = r.elem("GT")
        c_tilde = r.elem("GT", optional=True)
        C_u = r.attr_map(g1)
        wrapped = r.blob()
        r.end()
        return SemiCiphertext(frozenset(C_u), cid, c_hat, c_tilde, C_u, wrapped)
    if kind == KIND_FINISHED_CT:
        c_hat = r.elem("GT")
        C_u = r.attr_map(g1)
        wrapped = r.blob()
        r.end()
        return FinishedCiphertext(frozenset(C_u), cid, c_hat, C_u, wrapped)
    out = r.elem("GT")
    C_u = r.attr_map(g1)
    wrapped = r.blob()
    r.end()
    return PreDecryptedCiphertext(frozenset(C_u), cid, out, C_u, wrapped)
