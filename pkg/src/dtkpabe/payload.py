"""Hybrid layer: bytes payloads ride on a random GT element.

The ABE algebra only ever moves GT elements around. To carry real bid data we
pick a random M in GT, derive an AES-256-GCM key from M's canonical bytes with
HKDF-SHA256 and seal the payload under it. Whoever recovers M opens the
payload; anyone holding a wrong M gets an authentication failure.
"""
from __future__ import annotations

import random

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .group import Element, PairingGroup

DEFAULT_MAX_PAYLOAD = 1 << 20
NONCE_LEN = 12
_INFO = b"dtkpabe/payload/v1"


class PayloadAuthError(ValueError):
    """The wrapped payload failed authentication (wrong key element or tampering)."""


def derive_data_key(m: Element) -> bytes:
    if m.kind != "GT":
        raise TypeError("payload keys derive from GT elements only")
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=_INFO).derive(m.to_bytes())


def seal(m: Element, data: bytes, rng: random.Random) -> bytes:
    nonce = rng.randbytes(NONCE_LEN)
    return nonce + AESGCM(derive_data_key(m)).encrypt(nonce, bytes(data), None)


def encode_payload(group: PairingGroup, data: bytes, rng: random.Random,
                   max_size: int | None = DEFAULT_MAX_PAYLOAD) -> tuple[Element, bytes]:
    """Sample M in GT and wrap ``data`` under it; returns (M, wrapped)."""
    if max_size is not None and len(data) > max_size:
        raise ValueError(f"payload of {len(data)} bytes exceeds the {max_size}-byte limit")
    m = group.random_gt(rng)
    return m, seal(m, data, rng)


def decode_payload(m: Element, wrapped: bytes) -> bytes:
    if len(wrapped) < NONCE_LEN + 16:
        raise PayloadAuthError("wrapped payload is truncated")
    nonce, body = wrapped[:NONCE_LEN], wrapped[NONCE_LEN:]
    try:
        return AESGCM(derive_data_key(m)).decrypt(nonce, body, None)
    except InvalidTag:
        raise PayloadAuthError("payload authentication failed") from None
