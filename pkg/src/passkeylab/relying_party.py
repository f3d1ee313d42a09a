"""The relying party: accounts, credentials, pending ceremonies and sessions.

The server halves of registration and authentication live here together with
password login and the add-passkey flow. Authentication ceremonies may be
started without naming a user; the identity is then taken from the response.
That binding model is what lets a relayed assertion be redeemed under a
ceremony the attacker opened.
"""

from __future__ import annotations

import enum
import hmac
import random
import threading
from dataclasses import dataclass, field
from urllib.parse import urlsplit

from . import crypto
from .errors import (
    BadCredentials,
    ChallengeMismatch,
    CloneSuspected,
    DuplicateCredentialId,
    InvalidSession,
    InvalidSignature,
    MalformedResponse,
    OriginMismatch,
    PasskeyLabError,
    RpIdMismatch,
    UnknownCeremony,
    UnknownCredential,
    UnknownUser,
    UserMismatch,
    WrongCeremonyType,
)
from .structures import CREATE, GET, AuthenticatorData, ClientData, signed_payload
from .transcript import Clock, Transcript, b64u, unb64u

CHALLENGE_SIZE = 32
CHALLENGE_TTL = 120
SESSION_TTL = 10_000


class CeremonyKind(enum.Enum):
    REGISTRATION = "registration"
    AUTHENTICATION = "authentication"


@dataclass(frozen=True)
class Challenge:
    bytes: bytes
    issued_at: int
    ceremony_id: str

    @property
    def encoded(self) -> str:
        return b64u(self.bytes)


@dataclass
class Credential:
    credential_id: bytes
    rp_id: str
    user_handle: str
    public_key: bytes
    sign_count: int = 0


@dataclass
class PendingCeremony:
    ceremony_id: str
    challenge: Challenge
    kind: CeremonyKind
    user_handle: str | None
    expires_at: int


@dataclass(frozen=True)
class Session:
    token: bytes
    user_handle: str
    established_at: int
    expires_at: int = field(default=0, compare=False)


@dataclass
class Account:
    user_handle: str
    owner: str
    password_digest: bytes | None = None


def canonical_origin(origin: str) -> str:
    parts = urlsplit(origin)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    port = parts.port
    if port is None or (scheme, port) in (("https", 443), ("http", 80)):
        return f"{scheme}://{host}"
    return f"{scheme}://{host}:{port}"


def _password_digest(user_handle: str, password: str) -> bytes:
    # salted by handle; the testbed never needs a slow KDF
    return crypto.hash(f"pw:{user_handle}:{password}".encode())


class RelyingParty:
    def __init__(
        self,
        rp_id: str,
        *,
        origin: str | None = None,
        name: str | None = None,
        host_id: str = "rp",
        rng: random.Random | None = None,
        transcript: Transcript | None = None,
        challenge_size: int = CHALLENGE_SIZE,
        challenge_ttl: int = CHALLENGE_TTL,
        session_ttl: int = SESSION_TTL,
    ) -> None:
        self.rp_id = rp_id
        self.origin = canonical_origin(origin or f"https://{rp_id}")
        self.name = name or rp_id
        self.host_id = host_id
        self.rng = rng or random.Random(0)
        self.transcript = transcript or Transcript()
        self.challenge_size = challenge_size
        self.challenge_ttl = challenge_ttl
        self.session_ttl = session_ttl

        self.accounts: dict[str, Account] = {}
        self.credentials: dict[bytes, Credential] = {}
        self.pending: dict[str, PendingCeremony] = {}
        self.sessions: dict[bytes, Session] = {}
        self._lock = threading.RLock()

    @property
    def clock(self) -> Clock:
        return self.transcript.clock

    def _emit(self, kind: str, payload: dict, step: int | None = None) -> None:
        self.transcript.emit(self.host_id, kind, payload, step=step)

    # -- fixtures -------------------------------------------------------

    def create_account(self, user_handle: str, *, owner: str, password: str | None = None) -> Account:
        with self._lock:
            acct = Account(user_handle, owner)
            if password is not None:
                acct.password_digest = _password_digest(user_handle, password)
            self.accounts[user_handle] = acct
            self._emit("rp.account_created", {
                "user_handle": user_handle, "owner": owner, "has_password": password is not None,
            })
            return acct

    def set_password(self, user_handle: str, password: str) -> None:
        with self._lock:
            acct = self._account(user_handle)
            acct.password_digest = _password_digest(user_handle, password)
            self._emit("rp.password_changed", {"user_handle": user_handle})

    def credentials_for(self, user_handle: str) -> list[Credential]:
        return [c for c in self.credentials.values() if c.user_handle == user_handle]

    # -- helpers --------------------------------------------------------

    def _account(self, user_handle: str) -> Account:
        try:
            return self.accounts[user_handle]
        except KeyError:
            raise UnknownUser(user_handle) from None

    def _new_ceremony(self, kind: CeremonyKind, user_handle: str | None, rng: random.Random) -> PendingCeremony:
        ceremony_id = rng.randbytes(16).hex()
        while ceremony_id in self.pending:
            ceremony_id = rng.randbytes(16).hex()
        now = self.clock.now
        challenge = Challenge(rng.randbytes(self.challenge_size), now, ceremony_id)
        pc = PendingCeremony(ceremony_id, challenge, kind, user_handle, now + self.challenge_ttl)
        self.pending[ceremony_id] = pc
        return pc

    def _take_pending(self, ceremony_id: str, kind: CeremonyKind) -> PendingCeremony:
        # single use: the entry is consumed whatever the outcome
        pc = self.pending.pop(ceremony_id, None)
        if pc is None or pc.expires_at < self.clock.now:
            raise UnknownCeremony(ceremony_id)
        if pc.kind is not kind:
            raise WrongCeremonyType(f"{ceremony_id} is a {pc.kind.value} ceremony")
        return pc

    def _check_client_data(self, client_data: ClientData, pc: PendingCeremony, expected_type: str) -> None:
        if client_data.type != expected_type:
            raise WrongCeremonyType(client_data.type)
        if not hmac.compare_digest(client_data.challenge.encode(), pc.challenge.encoded.encode()):
            raise ChallengeMismatch(pc.ceremony_id)
        if canonical_origin(client_data.origin) != self.origin:
            raise OriginMismatch(f"{client_data.origin} != {self.origin}")

    def _check_rp_hash(self, auth: AuthenticatorData) -> None:
        if auth.rp_id_hash != crypto.hash(self.rp_id.encode()):
            raise RpIdMismatch("authenticator data was produced for a different RP ID")

    def _issue_session(self, user_handle: str, method: str, peer: str | None) -> Session:
        token = self.rng.randbytes(16)
        now = self.clock.now
        session = Session(token, user_handle, now, now + self.session_ttl)
        self.sessions[token] = session
        self._emit("rp.session_issued", {
            "user_handle": user_handle, "method": method, "peer": peer,
            "token_fp": crypto.fingerprint(token),
        })
        return session

    def session_for(self, token: bytes) -> Session:
        session = self.sessions.get(token)
        if session is None or session.expires_at < self.clock.now:
            raise InvalidSession("unknown or expired session")
        return session

    # -- registration ---------------------------------------------------

    def begin_registration(self, user_handle: str, rng: random.Random | None = None, *, peer: str | None = None):
        with self._lock:
            self._account(user_handle)
            pc = self._new_ceremony(CeremonyKind.REGISTRATION, user_handle, rng or self.rng)
            self._emit("rp.begin_registration", {
                "ceremony_id": pc.ceremony_id, "user_handle": user_handle, "peer": peer,
            })
            return pc.ceremony_id, pc.challenge, {"id": self.rp_id, "name": self.name}

    def finish_registration(self, ceremony_id: str, client_data: ClientData, attestation: dict, *, peer: str | None = None) -> Credential:
        with self._lock:
            try:
                pc = self._take_pending(ceremony_id, CeremonyKind.REGISTRATION)
                self._check_client_data(client_data, pc, CREATE)
                try:
                    cred_id = bytes(attestation["credential_id"])
                    public_key = bytes(attestation["public_key"])
                    auth = AuthenticatorData.from_bytes(bytes(attestation["authenticator_data"]))
                except (KeyError, TypeError) as exc:
                    raise MalformedResponse(f"attestation missing field: {exc}") from exc
                if len(public_key) != crypto.KEY_SIZE or not cred_id:
                    raise MalformedResponse("attestation key material has the wrong shape")
                self._check_rp_hash(auth)
                if cred_id in self.credentials:
                    raise DuplicateCredentialId(cred_id.hex())
            except PasskeyLabError as exc:
                self._emit("rp.finish_registration", {"ceremony_id": ceremony_id, "error": exc.code, "peer": peer})
                raise
            cred = Credential(cred_id, self.rp_id, pc.user_handle, public_key, auth.sign_count)
            self.credentials[cred_id] = cred
            self._emit("rp.finish_registration", {"ceremony_id": ceremony_id, "error": None, "peer": peer})
            self._emit("rp.credential_stored", {
                "user_handle": cred.user_handle, "credential_id": b64u(cred_id),
                "public_key": b64u(public_key), "sign_count": cred.sign_count, "peer": peer,
            })
            return cred

    # -- authentication -------------------------------------------------

    def begin_authentication(self, user_handle: str | None = None, rng: random.Random | None = None, *, peer: str | None = None):
        with self._lock:
            pc = self._new_ceremony(CeremonyKind.AUTHENTICATION, user_handle, rng or self.rng)
            self._emit("rp.begin_authentication", {
                "ceremony_id": pc.ceremony_id, "user_handle": user_handle, "peer": peer,
            })
            return pc.ceremony_id, pc.challenge

    def finish_authentication(
        self,
        ceremony_id: str,
        client_data: ClientData,
        authenticator_data: bytes,
        credential_id: bytes,
        user_handle: str,
        sig: bytes,
        *,
        peer: str | None = None,
    ) -> Session:
        with self._lock:
            try:
                pc = self._take_pending(ceremony_id, CeremonyKind.AUTHENTICATION)
                self._check_client_data(client_data, pc, GET)
                auth = AuthenticatorData.from_bytes(authenticator_data)
                self._check_rp_hash(auth)
                cred = self.credentials.get(credential_id)
                if cred is None:
                    raise UnknownCredential(credential_id.hex())
                if cred.user_handle != user_handle or (pc.user_handle is not None and pc.user_handle != user_handle):
                    raise UserMismatch(user_handle)
                message = signed_payload(authenticator_data, client_data.digest())
                if not crypto.verify(cred.public_key, message, sig):
                    raise InvalidSignature(credential_id.hex())
                if auth.sign_count <= cred.sign_count:
                    raise CloneSuspected(f"counter {auth.sign_count} <= stored {cred.sign_count}")
            except PasskeyLabError as exc:
                self._emit("rp.finish_authentication", {
                    "ceremony_id": ceremony_id, "error": exc.code, "peer": peer, "user_handle": user_handle,
                })
                raise
            cred.sign_count = auth.sign_count
            self._emit("rp.finish_authentication", {
                "ceremony_id": ceremony_id, "error": None, "peer": peer, "user_handle": user_handle,
                "credential_id": b64u(credential_id), "sign_count": auth.sign_count,
            })
            return self._issue_session(cred.user_handle, "passkey", peer)

    # -- password paths -------------------------------------------------

    def password_login(self, user_handle: str, password: str, *, peer: str | None = None) -> Session:
        with self._lock:
            acct = self.accounts.get(user_handle)
            candidate = _password_digest(user_handle, password)
            stored = acct.password_digest if acct else None
            if stored is None or not hmac.compare_digest(stored, candidate):
                self._emit("rp.password_login", {"user_handle": user_handle, "error": "BadCredentials", "peer": peer})
                raise BadCredentials(user_handle)
            self._emit("rp.password_login", {"user_handle": user_handle, "error": None, "peer": peer})
            return self._issue_session(user_handle, "password", peer)

    def add_passkey_to_account(self, session: Session | bytes, rng: random.Random | None = None, *, peer: str | None = None):
        token = session.token if isinstance(session, Session) else session
        with self._lock:
            live = self.session_for(token)
            pc = self._new_ceremony(CeremonyKind.REGISTRATION, live.user_handle, rng or self.rng)
            self._emit("rp.begin_registration", {
                "ceremony_id": pc.ceremony_id, "user_handle": live.user_handle, "peer": peer, "via": "add_passkey",
            })
            return pc.ceremony_id, pc.challenge

    # -- wire adapter ---------------------------------------------------

    def handle(self, message: dict, peer: str | None = None) -> dict:
        """Serve one decoded wire message; errors propagate to the fabric."""
        try:
            return self._dispatch(message, peer)
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"request missing or malformed field: {exc}") from exc

    def _dispatch(self, message: dict, peer: str | None) -> dict:
        op = message.get("op")
        if op == "register.begin":
            cid, ch, rp = self.begin_registration(message["user_handle"], peer=peer)
            return {"ceremony_id": cid, "challenge": ch.encoded, "rp": rp, "user_handle": message["user_handle"]}
        if op == "passkey.add":
            cid, ch = self.add_passkey_to_account(unb64u(message["session"]), peer=peer)
            user = self.sessions[unb64u(message["session"])].user_handle
            return {"ceremony_id": cid, "challenge": ch.encoded, "rp": {"id": self.rp_id, "name": self.name}, "user_handle": user}
        if op == "register.finish":
            att = message["attestation"]
            cred = self.finish_registration(
                message["ceremony_id"],
                ClientData.from_dict(message["client_data"]),
                {
                    "credential_id": unb64u(att["credential_id"]),
                    "public_key": unb64u(att["public_key"]),
                    "authenticator_data": unb64u(att["authenticator_data"]),
                },
                peer=peer,
            )
            return {"status": "registered", "credential_id": b64u(cred.credential_id)}
        if op == "login.begin":
            cid, ch = self.begin_authentication(message.get("user_handle"), peer=peer)
            return {"ceremony_id": cid, "challenge": ch.encoded, "rp_id": self.rp_id}
        if op == "login.finish":
            session = self.finish_authentication(
                message["ceremony_id"],
                ClientData.from_dict(message["client_data"]),
                unb64u(message["authenticator_data"]),
                unb64u(message["credential_id"]),
                message["user_handle"],
                unb64u(message["signature"]),
                peer=peer,
            )
            return {"status": "authenticated", "session": b64u(session.token), "user_handle": session.user_handle}
        if op == "password.login":
            session = self.password_login(message["user_handle"], message["password"], peer=peer)
            return {"status": "authenticated", "session": b64u(session.token), "user_handle": session.user_handle}
        if op == "password.change":
            live = self.session_for(unb64u(message["session"]))
            self.set_password(live.user_handle, message["password"])
            return {"status": "password_changed"}
        raise MalformedResponse(f"unsupported operation {op!r}")
