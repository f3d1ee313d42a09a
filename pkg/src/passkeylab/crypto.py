"""Signature primitives and deterministic key derivation.

All credentials use Ed25519. Signing is deterministic, so two runs with the
same keys and messages produce byte-identical transcripts.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature as _CryptoInvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

ALGORITHM = "ed25519"
KEY_SIZE = 32
SIGNATURE_SIZE = 64

_RAW = serialization.Encoding.Raw


class SeedOrigin(enum.Enum):
    FRESH_RANDOM = "fresh-random"
    ATTACKER_KNOWN = "attacker-known"


@dataclass(frozen=True)
class Seed:
    bytes: bytes
    origin: SeedOrigin = SeedOrigin.FRESH_RANDOM

    def __post_init__(self) -> None:
        if len(self.bytes) != KEY_SIZE:
            raise ValueError(f"seed must be {KEY_SIZE} bytes, got {len(self.bytes)}")

    def __repr__(self) -> str:
        return f"Seed(origin={self.origin.value}, fingerprint={fingerprint(self.bytes)})"


@dataclass(frozen=True)
class KeyPair:
    public_key: bytes
    private_key: bytes = field(repr=False)
    algorithm: str = ALGORITHM


@dataclass(frozen=True)
class Signature:
    bytes: bytes
    algorithm: str = ALGORITHM


def hash(data: bytes) -> bytes:  # noqa: A001 - mirrors the protocol vocabulary
    return hashlib.sha256(data).digest()


def fingerprint(data: bytes) -> str:
    """Short non-reversible label for secret material (safe to log)."""
    return hashlib.sha256(b"fingerprint:" + data).hexdigest()[:16]


def keypair_from_private(private_key: bytes) -> KeyPair:
    if len(private_key) != KEY_SIZE:
        raise ValueError(f"private key must be {KEY_SIZE} bytes")
    sk = Ed25519PrivateKey.from_private_bytes(private_key)
    pk = sk.public_key().public_bytes(_RAW, serialization.PublicFormat.Raw)
    return KeyPair(public_key=pk, private_key=private_key)


def generate_keypair(rng: random.Random) -> KeyPair:
    return keypair_from_private(rng.randbytes(KEY_SIZE))


def derive_seeded_keypair(seed: Seed, index: int) -> KeyPair:
    """Keypair whose private half is ``hash(seed || index as 4-byte BE)``."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return keypair_from_private(hash(seed.bytes + index.to_bytes(4, "big")))


def sign(private_key: bytes, message: bytes) -> Signature:
    if not message:
        raise ValueError("refusing to sign an empty message")
    sk = Ed25519PrivateKey.from_private_bytes(private_key)
    return Signature(sk.sign(message))


def verify(public_key: bytes, message: bytes, sig: Signature | bytes) -> bool:
    raw = sig.bytes if isinstance(sig, Signature) else sig
    if len(raw) != SIGNATURE_SIZE or len(public_key) != KEY_SIZE:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(raw, message)
    except (_CryptoInvalidSignature, ValueError):
        return False
    return True
