"""Delay-tolerant KP-ABE with dealer-free threshold sharing for smart-grid bid data."""
from .group import BLS12Group, Element, OpCounter, PairingGroup, ToyGroup, get_group
from .kpabe import (AttributeUniverse, Authority, BaselineCiphertext, DecryptionKey, MasterKey,
                    SystemParams, gpsw_decrypt, gpsw_encrypt, keygen, setup)
from .policy import AccessTree, parse_policy, satisfies

__version__ = "0.1.0"

__all__ = [
    "AccessTree", "AttributeUniverse", "Authority", "BLS12Group", "BaselineCiphertext",
    "DecryptionKey", "Element", "MasterKey", "OpCounter", "PairingGroup", "SystemParams",
    "ToyGroup", "get_group", "gpsw_decrypt", "gpsw_encrypt", "keygen", "parse_policy",
    "satisfies", "setup",
]
