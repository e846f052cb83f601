"""The four protocol roles and the trusted authority.

Pure functions carry the algebra; the role classes hold only the state each
party is allowed to have (the CA, notably, has no area key field at all).
"""
from __future__ import annotations

import random
from collections.abc import Iterable, Mapping, Sequence

from ..group import Element
from ..kpabe import Authority, AttributeUniverse, DecryptionKey, SystemParams
from ..payload import DEFAULT_MAX_PAYLOAD, PayloadAuthError, decode_payload, encode_payload
from ..policy import AccessTree, decrypt_node, satisfies
from ..sharing import AREA_KEY_LEN, Cid, combine_g_shares, combine_gt_shares, open_cid
from .messages import FinishedCiphertext, PreDecryptedCiphertext, SemiCiphertext


class ProtocolError(RuntimeError):
    """A role was asked to act out of order or on inconsistent inputs."""


# -- residential unit ------------------------------------------------------

def blind_message(pk: SystemParams, gamma: Iterable[int], m: Element, wrapped: bytes,
                  s_i: int, h: int, is_batch: bool, cid: Cid) -> SemiCiphertext:
    gamma = frozenset(gamma)
    if not gamma:
        raise ValueError("attribute set must not be empty")
    group = pk.group
    y_prime = group.g2 ** s_i
    return SemiCiphertext(
        gamma=gamma,
        cid=cid,
        C_hat=m * group.pair(pk.A, y_prime),
        C_tilde=pk.Y ** h if is_batch else None,
        C_u={u: pk.T[u] ** h for u in sorted(gamma)},
        wrapped=wrapped,
    )


def ru_encrypt(pk: SystemParams, gamma: Iterable[int], payload: bytes, s_i: int, h: int,
               is_batch: bool, cid: Cid, rng: random.Random,
               max_payload: int | None = DEFAULT_MAX_PAYLOAD) -> SemiCiphertext:
    m, wrapped = encode_payload(pk.group, payload, rng, max_payload)
    return blind_message(pk, gamma, m, wrapped, s_i, h, is_batch, cid)


# -- central aggregator ----------------------------------------------------

def ca_finalize_batch(semis: Sequence[SemiCiphertext],
                      k: int) -> tuple[list[FinishedCiphertext], Element]:
    if len(semis) != k:
        raise ProtocolError(f"batch needs exactly {k} semi-finished ciphertexts, got {len(semis)}")
    if len({s.cid.x for s in semis}) != k:
        raise ProtocolError("duplicate CID in batch")
    if any(s.C_tilde is None for s in semis):
        raise ProtocolError("batch ciphertext without C_tilde")
    cached = combine_gt_shares([(s.cid, s.C_tilde) for s in semis], k)
    return [_finish(s, cached) for s in semis], cached


def ca_finalize_delayed(semi: SemiCiphertext, cached_gt: Element | None,
                        roster: Iterable[Cid] | None = None) -> FinishedCiphertext:
    if cached_gt is None:
        raise ProtocolError("batch not finalized yet: no cached e(g,g)^{ys}")
    if roster is not None and semi.cid.x not in {c.x for c in roster}:
        raise ProtocolError("CID is not registered in this round")
    return _finish(semi, cached_gt)


def _finish(semi: SemiCiphertext, cached: Element) -> FinishedCiphertext:
    return FinishedCiphertext(semi.gamma, semi.cid, semi.C_hat * cached, dict(semi.C_u), semi.wrapped)


# -- central dispatcher ----------------------------------------------------

def cd_predecrypt(ct: FinishedCiphertext, area_key: bytes, pk: SystemParams) -> PreDecryptedCiphertext:
    return strip_blinding(ct, open_cid(pk.group, area_key, ct.cid), pk)


def strip_blinding(ct: FinishedCiphertext, y_prime: Element, pk: SystemParams) -> PreDecryptedCiphertext:
    out = ct.C_hat / pk.group.pair(pk.A, y_prime)
    return PreDecryptedCiphertext(ct.gamma, ct.cid, out, dict(ct.C_u), ct.wrapped)


# -- agency operator -------------------------------------------------------

def _common_gamma(cts: Sequence[PreDecryptedCiphertext]) -> frozenset[int]:
    gammas = {ct.gamma for ct in cts}
    if len(gammas) != 1:
        raise ValueError("ciphertexts carry different attribute sets")
    return gammas.pop()


def select_for_interpolation(cts: Sequence[PreDecryptedCiphertext], k: int) -> list[PreDecryptedCiphertext]:
    """The k ciphertexts with the smallest CID abscissae."""
    if len(cts) < k:
        raise ValueError(f"need at least {k} ciphertexts, got {len(cts)}")
    return sorted(cts, key=lambda c: c.cid.x)[:k]


def recover_blinding(cts: Sequence[PreDecryptedCiphertext], key: DecryptionKey, k: int,
                     chosen: Sequence[PreDecryptedCiphertext] | None = None) -> Element | None:
    """F_R = e(g,g)^{ys}: interpolate T_u^s from k ciphertexts, then one DecryptNode."""
    gamma = _common_gamma(cts)
    if not satisfies(key.tree, gamma):
        return None
    picked = list(chosen) if chosen is not None else select_for_interpolation(cts, k)
    shares = {u: combine_g_shares(u, [(c.cid, c.C_u[u]) for c in picked], k) for u in sorted(gamma)}
    return decrypt_node(key.tree.root, key.D, shares, gamma)


def ao_decrypt(cts: Sequence[PreDecryptedCiphertext], key: DecryptionKey,
               k: int) -> list[bytes | None] | None:
    """Decrypt all l >= k ciphertexts of one round at once.

    Returns None if the key's policy is not satisfied. Otherwise returns one
    entry per input ciphertext: the payload, or None if the unblinded element
    fails hybrid-layer authentication (e.g. ciphertexts mixed across rounds).
    """
    return unblind_all(cts, recover_blinding(cts, key, k))


def unblind_all(cts: Sequence[PreDecryptedCiphertext],
                f_root: Element | None) -> list[bytes | None] | None:
    if f_root is None:
        return None
    out: list[bytes | None] = []
    for ct in cts:
        try:
            out.append(decode_payload(ct.C_tilde_out / f_root, ct.wrapped))
        except PayloadAuthError:
            out.append(None)
    return out


# -- role objects ----------------------------------------------------------

class TrustedAuthority(Authority):
    """Key-generation server that also provisions per-area symmetric keys."""

    def __init__(self, group, universe: AttributeUniverse, rng: random.Random):
        super().__init__(group, universe, rng)
        self._area_keys: dict[str, bytes] = {}

    def area_key(self, area: str) -> bytes:
        with self._lock:
            if area not in self._area_keys:
                self._area_keys[area] = self._rng.randbytes(AREA_KEY_LEN)
            return self._area_keys[area]


class ResidentialUnit:
    def __init__(self, pid: str, pk: SystemParams, area_key: bytes):
        self.pid = pid
        self.pk = pk
        self._area_key = area_key
        self.s_i: int | None = None
        self.cid: Cid | None = None
        self.h: int | None = None

    @property
    def area_key(self) -> bytes:
        return self._area_key

    def pick_secret(self, rng: random.Random) -> Element:
        self.s_i = self.pk.group.random_scalar(rng)
        return self.pk.group.g2 ** self.s_i

    def encrypt(self, gamma, payload: bytes, is_batch: bool, rng: random.Random,
                max_payload: int | None = DEFAULT_MAX_PAYLOAD) -> SemiCiphertext:
        if self.h is None or self.cid is None or self.s_i is None:
            raise ProtocolError(f"{self.pid} has no share of the round polynomial yet")
        return ru_encrypt(self.pk, gamma, payload, self.s_i, self.h, is_batch, self.cid, rng, max_payload)


class CentralAggregator:
    """Collects k semi-finished ciphertexts, caches e(g,g)^{ys}, finalizes the rest."""

    def __init__(self, k: int):
        self.k = k
        self.roster: dict[int, Cid] = {}
        self.pending: list[SemiCiphertext] = []
        self.cached_gt: Element | None = None
        self.view: list[bytes] = []

    def register(self, cid: Cid) -> None:
        self.roster[cid.x] = cid

    def receive(self, semi: SemiCiphertext) -> list[FinishedCiphertext]:
        if semi.cid.x not in self.roster:
            raise ProtocolError("CID is not registered in this round")
        if self.cached_gt is not None:
            return [ca_finalize_delayed(semi, self.cached_gt, self.roster.values())]
        self.pending.append(semi)
        if len(self.pending) < self.k:
            return []
        finished, self.cached_gt = ca_finalize_batch(self.pending, self.k)
        self.pending = []
        return finished


class CentralDispatcher:
    def __init__(self, pk: SystemParams, area_keys: Mapping[str, bytes]):
        self.pk = pk
        self._area_keys = dict(area_keys)
        self.view: list[bytes] = []

    def predecrypt(self, area: str, cts: Iterable[FinishedCiphertext]) -> list[PreDecryptedCiphertext]:
        key = self._area_keys[area]
        out = []
        for ct in cts:
            y_prime = open_cid(self.pk.group, key, ct.cid)
            pre = strip_blinding(ct, y_prime, self.pk)
            self.view += [y_prime.to_bytes(), pre.C_tilde_out.to_bytes()]
            out.append(pre)
        return out


class AgencyOperator:
    def __init__(self, name: str, key: DecryptionKey):
        self.name = name
        self.key = key
        self.last_f_root: Element | None = None

    @property
    def tree(self) -> AccessTree:
        return self.key.tree

    def decrypt(self, cts: Sequence[PreDecryptedCiphertext], k: int) -> list[bytes | None] | None:
        self.last_f_root = recover_blinding(cts, self.key, k)
        return unblind_all(cts, self.last_f_root)
