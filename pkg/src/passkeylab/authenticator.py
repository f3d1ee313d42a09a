"""CTAP-side authenticator: credential creation and assertion behind an unlock gate.

An honest authenticator draws fresh keys from its RNG. An infected one derives
every key from a seed the attacker also holds, either always index 0 (one key
reused for every registration) or a per-registration index.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Any

from . import crypto
from .crypto import KeyPair, Seed
from .errors import MalformedResponse, NoCredential, NotUnlocked, UserDeclined, WrongPin
from .structures import AuthenticatorData, signed_payload
from .transcript import Transcript, b64u, unb64u

CREDENTIAL_ID_SIZE = 16


class Mode(enum.Enum):
    HONEST = "honest"
    INFECTED = "infected"


class InfectionMode(enum.Enum):
    FIXED = "fixed"
    INDEXED = "indexed"


@dataclass(frozen=True)
class Infection:
    seed: Seed
    mode: InfectionMode = InfectionMode.FIXED
    # announce keys to the attacker over the network; only the event is modelled
    exfiltrate: bool = False


def infected_credential_id(seed: Seed, index: int) -> bytes:
    return crypto.hash(seed.bytes + b"cid" + index.to_bytes(4, "big"))[:CREDENTIAL_ID_SIZE]


@dataclass
class _Entry:
    credential_id: bytes
    keypair: KeyPair = field(repr=False)
    user_handle: str
    sign_count: int = 0


@dataclass(frozen=True)
class CtapRequest:
    op: str  # "make_credential" | "get_assertion"
    rp_id: str
    client_data_hash: bytes
    user_handle: str | None = None
    allow_credentials: tuple[bytes, ...] = ()

    def to_message(self) -> dict:
        msg: dict[str, Any] = {"op": self.op, "rp_id": self.rp_id, "client_data_hash": b64u(self.client_data_hash)}
        if self.user_handle is not None:
            msg["user_handle"] = self.user_handle
        if self.allow_credentials:
            msg["allow_credentials"] = [b64u(c) for c in self.allow_credentials]
        return msg

    @classmethod
    def from_message(cls, msg: dict) -> "CtapRequest":
        try:
            return cls(
                op=msg["op"],
                rp_id=msg["rp_id"],
                client_data_hash=unb64u(msg["client_data_hash"]),
                user_handle=msg.get("user_handle"),
                allow_credentials=tuple(unb64u(c) for c in msg.get("allow_credentials", ())),
            )
        except KeyError as exc:
            raise MalformedResponse(f"ctap request missing {exc}") from exc


@dataclass(frozen=True)
class CtapResponse:
    credential_id: bytes
    authenticator_data: bytes
    public_key: bytes | None = None
    signature: bytes | None = None
    user_handle: str | None = None

    def to_message(self) -> dict:
        msg: dict[str, Any] = {
            "credential_id": b64u(self.credential_id),
            "authenticator_data": b64u(self.authenticator_data),
        }
        if self.public_key is not None:
            msg["public_key"] = b64u(self.public_key)
        if self.signature is not None:
            msg["signature"] = b64u(self.signature)
        if self.user_handle is not None:
            msg["user_handle"] = self.user_handle
        return msg

    @classmethod
    def from_message(cls, msg: dict) -> "CtapResponse":
        try:
            return cls(
                credential_id=unb64u(msg["credential_id"]),
                authenticator_data=unb64u(msg["authenticator_data"]),
                public_key=unb64u(msg["public_key"]) if "public_key" in msg else None,
                signature=unb64u(msg["signature"]) if "signature" in msg else None,
                user_handle=msg.get("user_handle"),
            )
        except KeyError as exc:
            raise MalformedResponse(f"ctap response missing {exc}") from exc


class _AlwaysApprove:
    approves_authenticator_prompts = True


class Authenticator:
    def __init__(
        self,
        *,
        pin: str = "1234",
        rng: random.Random | None = None,
        infection: Infection | None = None,
        user: Any = None,
        host_id: str = "authenticator",
        transcript: Transcript | None = None,
    ) -> None:
        self.pin = pin
        self.rng = rng or random.Random(0)
        self.infection = infection
        self.user = user or _AlwaysApprove()
        self.host_id = host_id
        self.transcript = transcript or Transcript()
        self.store: dict[str, list[_Entry]] = {}
        self.locked = True
        self._registrations = 0

    @property
    def mode(self) -> Mode:
        return Mode.INFECTED if self.infection else Mode.HONEST

    def _emit(self, kind: str, payload: dict) -> None:
        self.transcript.emit(self.host_id, kind, payload)

    def _gate(self, what: str) -> None:
        if self.locked:
            self._emit(f"ctap.{what}", {"error": "NotUnlocked"})
            raise NotUnlocked(what)
        if not self.user.approves_authenticator_prompts:
            self.locked = True
            self._emit(f"ctap.{what}", {"error": "UserDeclined"})
            raise UserDeclined(what)

    def unlock(self, pin: str) -> None:
        if pin != self.pin:
            self._emit("ctap.unlock", {"error": "WrongPin"})
            raise WrongPin("incorrect PIN")
        self.locked = False
        self._emit("ctap.unlock", {"error": None})

    # -- key material -----------------------------------------------------

    def _new_key(self) -> tuple[KeyPair, bytes]:
        if self.infection is None:
            kp = crypto.generate_keypair(self.rng)
            return kp, self.rng.randbytes(CREDENTIAL_ID_SIZE)
        inf = self.infection
        index = 0 if inf.mode is InfectionMode.FIXED else self._registrations
        return crypto.derive_seeded_keypair(inf.seed, index), infected_credential_id(inf.seed, index)

    def _put(self, rp_id: str, entry: _Entry) -> None:
        entries = self.store.setdefault(rp_id, [])
        entries[:] = [e for e in entries if e.credential_id != entry.credential_id]
        entries.append(entry)

    def provision_credential(self, rp_id: str, user_handle: str, *, credential_id: bytes, sign_count: int = 0) -> bytes:
        """Mint a fresh key under a caller-chosen credential ID; returns the public key.

        Used by attacker-side authenticators that need to answer for a
        credential ID the RP already associates with a victim.
        """
        kp = crypto.generate_keypair(self.rng)
        self._put(rp_id, _Entry(credential_id, kp, user_handle, sign_count))
        return kp.public_key

    @classmethod
    def cloned_from_seed(
        cls,
        seed: Seed,
        *,
        rp_id: str,
        user_handle: str,
        index: int = 0,
        start_count: int = 0,
        **kwargs: Any,
    ) -> "Authenticator":
        """An authenticator holding the credential an infected device would have made."""
        auth = cls(**kwargs)
        kp = crypto.derive_seeded_keypair(seed, index)
        auth._put(rp_id, _Entry(infected_credential_id(seed, index), kp, user_handle, start_count))
        return auth

    def public_credentials(self) -> list[dict]:
        return [
            {"rp_id": rp, "credential_id": e.credential_id, "public_key": e.keypair.public_key,
             "user_handle": e.user_handle, "sign_count": e.sign_count}
            for rp, entries in sorted(self.store.items()) for e in entries
        ]

    def _key_audit(self) -> list[bytes]:
        # test-only accessor for the confidentiality scan
        return [e.keypair.private_key for entries in self.store.values() for e in entries]

    # -- CTAP operations ------------------------------------------------

    def make_credential(self, req: CtapRequest, rng: random.Random | None = None) -> CtapResponse:
        if rng is not None:
            self.rng = rng
        self._gate("make_credential")
        kp, cred_id = self._new_key()
        self._registrations += 1
        user = req.user_handle or ""
        self._put(req.rp_id, _Entry(cred_id, kp, user, 0))
        auth = AuthenticatorData.for_rp(req.rp_id, 0)
        self.locked = True
        self._emit("ctap.make_credential", {
            "error": None, "rp_id": req.rp_id, "credential_id": b64u(cred_id),
            "public_key": b64u(kp.public_key), "mode": self.mode.value,
        })
        if self.infection is not None and self.infection.exfiltrate:
            self._emit("authenticator.exfiltrate", {
                "rp_id": req.rp_id, "credential_id": b64u(cred_id), "channel": "network", "detectable": True,
            })
        return CtapResponse(cred_id, auth.to_bytes(), public_key=kp.public_key, user_handle=user)

    def get_assertion(self, req: CtapRequest) -> CtapResponse:
        self._gate("get_assertion")
        entries = self.store.get(req.rp_id, [])
        if req.allow_credentials:
            entries = [e for e in entries if e.credential_id in req.allow_credentials]
        if not entries:
            self.locked = True
            self._emit("ctap.get_assertion", {"error": "NoCredential", "rp_id": req.rp_id})
            raise NoCredential(req.rp_id)
        entry = entries[-1]
        entry.sign_count += 1
        auth = AuthenticatorData.for_rp(req.rp_id, entry.sign_count).to_bytes()
        sig = crypto.sign(entry.keypair.private_key, signed_payload(auth, req.client_data_hash))
        self.locked = True
        self._emit("ctap.get_assertion", {
            "error": None, "rp_id": req.rp_id, "credential_id": b64u(entry.credential_id),
            "sign_count": entry.sign_count,
        })
        return CtapResponse(entry.credential_id, auth, signature=sig.bytes, user_handle=entry.user_handle)

    def handle(self, message: dict, peer: str | None = None) -> dict:
        op = message.get("op")
        if op == "unlock":
            self.unlock(message["pin"])
            return {"status": "unlocked"}
        req = CtapRequest.from_message(message)
        if op == "make_credential":
            return self.make_credential(req).to_message()
        if op == "get_assertion":
            return self.get_assertion(req).to_message()
        raise MalformedResponse(f"unsupported ctap op {op!r}")
