"""Dealer-free (k, n) sharing among residential units.

The first k arriving units are contributors: each picks s_i and a random
degree-(k-1) polynomial f_i with f_i(0) = s_i. Every registered unit is a
shareholder: contributor i sends f_i(x_j) privately to unit j, and unit j sums
what it receives into h(x_j). The implicit h = sum f_i has h(0) = s = sum s_i.

Evaluation points come from ciphertext ids: a CID is the AES-GCM encryption of
g2^{s_i} under the area key, and its abscissa x is SHA-256 of the CID bytes
reduced mod p (zero rejected).
"""
from __future__ import annotations

import hashlib
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .group import Element, EncodingError, PairingGroup, split_frame
from .interp import eval_poly, interpolate_exponent_at_zero

AREA_KEY_LEN = 32
CID_NONCE_LEN = 12
MAX_CID_ATTEMPTS = 8
_CID_AAD = b"dtkpabe/cid/v1"
_CID_HASH = b"dtkpabe/cid-x/v1"
_TAG_BYTES = 0x10


class CidError(ValueError):
    """A CID failed to authenticate, decode, or match its claimed abscissa."""


class CidCollision(ValueError):
    """Two roster CIDs mapped to the same evaluation point."""


@dataclass(frozen=True)
class Contribution:
    secret: int
    coeffs: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.coeffs)

    def at(self, x: int, p: int) -> int:
        return eval_poly(self.coeffs, x, p)


def gen_contribution(k: int, rng: random.Random, p: int, secret: int | None = None) -> Contribution:
    if k < 1:
        raise ValueError("threshold k must be at least 1")
    if secret is None:
        secret = rng.randrange(1, p)
    coeffs = [secret % p] + [rng.randrange(p) for _ in range(k - 1)]
    while k > 1 and coeffs[-1] == 0:
        coeffs[-1] = rng.randrange(p)
    return Contribution(secret=secret % p, coeffs=tuple(coeffs))


def cid_abscissa(nonce: bytes, ct_bytes: bytes, p: int) -> int:
    ctr = 0
    while True:
        digest = hashlib.sha256(_CID_HASH + bytes([ctr]) + nonce + ct_bytes).digest()
        x = int.from_bytes(digest, "big") % p
        if x:
            return x
        ctr += 1  # pragma: no cover - probability 1/p


def _frame_bytes(b: bytes) -> bytes:
    return bytes([_TAG_BYTES]) + len(b).to_bytes(2, "big") + b


@dataclass(frozen=True)
class Cid:
    nonce: bytes
    ct_bytes: bytes
    x: int

    def to_bytes(self, group: PairingGroup) -> bytes:
        return _frame_bytes(self.nonce) + _frame_bytes(self.ct_bytes) + group.scalar_to_bytes(self.x)

    @classmethod
    def from_bytes(cls, group: PairingGroup, data: bytes) -> Cid:
        try:
            tag1, nonce, off = split_frame(data, 0)
            tag2, ct, off = split_frame(data, off)
            x = group.scalar_from_bytes(data[off:])
        except EncodingError as exc:
            raise CidError(f"malformed CID: {exc}") from exc
        if tag1 != _TAG_BYTES or tag2 != _TAG_BYTES or len(nonce) != CID_NONCE_LEN:
            raise CidError("malformed CID fields")
        if cid_abscissa(nonce, ct, group.order) != x:
            raise CidError("CID abscissa does not match its bytes")
        return cls(nonce, ct, x)

    def short(self) -> str:
        return hashlib.sha256(self.nonce + self.ct_bytes).hexdigest()[:12]


def make_cid(group: PairingGroup, area_key: bytes, y_prime: Element, rng: random.Random) -> Cid:
    """CID = Enc_K(g^{s_i}) with a fresh nonce, plus its field abscissa."""
    nonce = rng.randbytes(CID_NONCE_LEN)
    ct = AESGCM(area_key).encrypt(nonce, y_prime.to_bytes(), _CID_AAD)
    return Cid(nonce, ct, cid_abscissa(nonce, ct, group.order))


def open_cid(group: PairingGroup, area_key: bytes, cid: Cid) -> Element:
    try:
        plain = AESGCM(area_key).decrypt(cid.nonce, cid.ct_bytes, _CID_AAD)
    except (InvalidTag, ValueError) as exc:
        raise CidError("CID failed to authenticate under this area key") from exc
    try:
        return group.element_from_bytes(plain, kind=group.g2.kind)
    except EncodingError as exc:
        raise CidError(f"CID does not hold a valid group element: {exc}") from exc


def eval_shares(contrib: Contribution, roster: Sequence[Cid], p: int) -> dict[Cid, int]:
    xs = [c.x for c in roster]
    if len(set(xs)) != len(xs):
        raise CidCollision("roster contains duplicate evaluation points")
    return {cid: contrib.at(cid.x, p) for cid in roster}


def aggregate_h(shares_received: Mapping[str, int], contributors: Iterable[str], p: int) -> int:
    """h(x_own) = sum over contributors of f_i(x_own)."""
    contributors = list(contributors)
    missing = [c for c in contributors if c not in shares_received]
    if missing:
        raise ValueError(f"missing shares from contributors {missing}")
    extra = set(shares_received) - set(contributors)
    if extra:
        raise ValueError(f"shares from non-contributors {sorted(extra)}")
    return sum(shares_received[c] for c in contributors) % p


def _check_items(items: Sequence[tuple[Cid, Element]], k: int) -> None:
    if len(items) < k:
        raise ValueError(f"need {k} shares, got {len(items)}")
    if len(items) > k:
        raise ValueError(f"expected exactly {k} shares, got {len(items)}")
    xs = [cid.x for cid, _ in items]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate CID among shares")


def combine_gt_shares(items: Sequence[tuple[Cid, Element]], k: int) -> Element:
    """k pairs (CID_i, e(g,g)^{y h(x_i)}) -> e(g,g)^{y s}."""
    _check_items(items, k)
    return interpolate_exponent_at_zero([(cid.x, e) for cid, e in items])


def combine_g_shares(u: int, items: Sequence[tuple[Cid, Element]], k: int) -> Element:
    """k pairs (CID_i, T_u^{h(x_i)}) -> T_u^s."""
    _check_items(items, k)
    return interpolate_exponent_at_zero([(cid.x, e) for cid, e in items])


@dataclass
class ShareRound:
    """One community's sharing session. Mutable until ``freeze``; single owner."""

    group: PairingGroup
    k: int
    round_id: str = "round-0"
    roster: dict[str, Cid] = field(default_factory=dict)
    contributors: list[str] = field(default_factory=list)
    incoming: dict[tuple[str, str], int] = field(default_factory=dict)
    h_values: dict[str, int] = field(default_factory=dict)
    frozen: bool = False

    def _mutable(self):
        if self.frozen:
            raise RuntimeError("share round is frozen")

    def register(self, pid: str, cid: Cid) -> None:
        self._mutable()
        if pid in self.roster:
            raise ValueError(f"{pid} already registered")
        if any(c.x == cid.x for c in self.roster.values()):
            raise CidCollision(f"CID of {pid} collides with a registered CID")
        self.roster[pid] = cid

    def register_fresh(self, pid: str, area_key: bytes, y_prime: Element,
                       rng: random.Random) -> Cid:
        """Encrypt y_prime into a CID, retrying with fresh nonces on collision."""
        for _ in range(MAX_CID_ATTEMPTS):
            cid = make_cid(self.group, area_key, y_prime, rng)
            try:
                self.register(pid, cid)
                return cid
            except CidCollision:
                continue
        raise CidCollision(f"could not register a distinct CID for {pid}")

    def begin(self, contributors: Sequence[str]) -> None:
        self._mutable()
        if self.contributors:
            raise RuntimeError("sharing already started")
        if len(contributors) != self.k or len(set(contributors)) != self.k:
            raise ValueError(f"need exactly {self.k} distinct contributors")
        unknown = [c for c in contributors if c not in self.roster]
        if unknown:
            raise ValueError(f"unregistered contributors {unknown}")
        self.contributors = list(contributors)

    def deliver(self, sender: str, receiver: str, value: int) -> None:
        self._mutable()
        if sender not in self.contributors:
            raise ValueError(f"{sender} is not a contributor")
        if receiver not in self.roster:
            raise ValueError(f"{receiver} is not registered")
        self.incoming[(sender, receiver)] = value % self.group.order

    def aggregate(self, pid: str) -> int:
        received = {s: v for (s, r), v in self.incoming.items() if r == pid}
        h = aggregate_h(received, self.contributors, self.group.order)
        self.h_values[pid] = h
        return h

    def freeze(self) -> None:
        self.frozen = True

    def share_message(self, sender: str, receiver: str) -> bytes:
        """Wire form of one point-to-point share: (round-id, from-cid, to-cid, scalar)."""
        g = self.group
        return (_frame_bytes(self.round_id.encode())
                + self.roster[sender].to_bytes(g)
                + self.roster[receiver].to_bytes(g)
                + g.scalar_to_bytes(self.incoming[(sender, receiver)]))


def run_sharing(rnd: ShareRound, contributions: Mapping[str, Contribution]) -> dict[str, int]:
    """Contributors evaluate at every roster CID, deliver, and everyone aggregates."""
    rnd.begin(list(contributions))
    p = rnd.group.order
    roster = list(rnd.roster.values())
    names = {cid: pid for pid, cid in rnd.roster.items()}
    for sender, contrib in contributions.items():
        if contrib.k != rnd.k:
            raise ValueError(f"{sender}'s polynomial has the wrong degree")
        for cid, value in eval_shares(contrib, roster, p).items():
            rnd.deliver(sender, names[cid], value)
    for pid in rnd.roster:
        rnd.aggregate(pid)
    return dict(rnd.h_values)
