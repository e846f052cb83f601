"""Ciphertext states as they move RU -> CA -> network -> CD -> AO."""
from __future__ import annotations

from dataclasses import dataclass

from ..group import Element
from ..sharing import Cid


@dataclass(frozen=True)
class SemiCiphertext:
    """RU output: C_hat = M e(A, g^{s_i}), C_tilde = Y^{h(x_i)} (batch only), C_u = T_u^{h(x_i)}."""

    gamma: frozenset[int]
    cid: Cid
    C_hat: Element
    C_tilde: Element | None
    C_u: dict[int, Element]
    wrapped: bytes

    @property
    def is_batch(self) -> bool:
        return self.C_tilde is not None


@dataclass(frozen=True)
class FinishedCiphertext:
    """After the CA: C_hat = M e(g,g)^{alpha s_i} e(g,g)^{y s}."""

    gamma: frozenset[int]
    cid: Cid
    C_hat: Element
    C_u: dict[int, Element]
    wrapped: bytes


@dataclass(frozen=True)
class PreDecryptedCiphertext:
    """After the CD strips e(g,g)^{alpha s_i}: C_tilde_out = M e(g,g)^{y s}."""

    gamma: frozenset[int]
    cid: Cid
    C_tilde_out: Element
    C_u: dict[int, Element]
    wrapped: bytes
