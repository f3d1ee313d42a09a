"""Byte-exact ceremony structures: what gets hashed and signed."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from . import crypto
from .errors import MalformedResponse
from .transcript import canonical_json

CREATE = "webauthn.create"
GET = "webauthn.get"

FLAG_USER_PRESENT = 0x01
FLAG_USER_VERIFIED = 0x04

AUTH_DATA_LEN = 32 + 1 + 4


@dataclass(frozen=True)
class ClientData:
    type: Literal["webauthn.create", "webauthn.get"]
    challenge: str  # base64url of the challenge bytes
    origin: str

    def serialize(self) -> bytes:
        return canonical_json({"challenge": self.challenge, "origin": self.origin, "type": self.type})

    def digest(self) -> bytes:
        return crypto.hash(self.serialize())

    def to_dict(self) -> dict:
        return {"type": self.type, "challenge": self.challenge, "origin": self.origin}

    @classmethod
    def from_dict(cls, d: dict) -> "ClientData":
        try:
            typ, challenge, origin = d["type"], d["challenge"], d["origin"]
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"client data missing field: {exc}") from exc
        if typ not in (CREATE, GET):
            raise MalformedResponse(f"bad client data type {typ!r}")
        return cls(type=typ, challenge=str(challenge), origin=str(origin))


@dataclass(frozen=True)
class AuthenticatorData:
    rp_id_hash: bytes
    flags: int
    sign_count: int

    @classmethod
    def for_rp(cls, rp_id: str, sign_count: int, *, user_verified: bool = True) -> "AuthenticatorData":
        flags = FLAG_USER_PRESENT | (FLAG_USER_VERIFIED if user_verified else 0)
        return cls(crypto.hash(rp_id.encode()), flags, sign_count)

    @property
    def user_present(self) -> bool:
        return bool(self.flags & FLAG_USER_PRESENT)

    @property
    def user_verified(self) -> bool:
        return bool(self.flags & FLAG_USER_VERIFIED)

    def to_bytes(self) -> bytes:
        return self.rp_id_hash + bytes([self.flags]) + self.sign_count.to_bytes(4, "big")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "AuthenticatorData":
        if len(raw) != AUTH_DATA_LEN:
            raise MalformedResponse(f"authenticator data must be {AUTH_DATA_LEN} bytes, got {len(raw)}")
        return cls(raw[:32], raw[32], int.from_bytes(raw[33:37], "big"))


def signed_payload(auth_data: bytes, client_data_hash: bytes) -> bytes:
    return auth_data + client_data_hash
