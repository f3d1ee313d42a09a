"""Browser model: navigation, secure-context rule, WebAuthn API and CTAP forwarding."""

from __future__ import annotations

from dataclasses import dataclass, field
from urllib.parse import urlsplit

from .authenticator import CtapRequest, CtapResponse
from .errors import (
    ConnectionRefused,
    InsecureContext,
    NameResolutionFailure,
    PasskeyLabError,
    RpIdMismatch,
    UserDeclined,
    WrongPin,
)
from .fabric import Channel, Fabric
from .structures import CREATE, GET, ClientData
from .transcript import b64u


@dataclass(frozen=True)
class VictimPolicy:
    follows_phishing_links: bool = False
    ignores_tls_warnings: bool = False
    approves_authenticator_prompts: bool = True
    falls_back_to_password: bool = False
    enters_correct_pin: bool = True

    def to_dict(self) -> dict:
        return {
            "follows_phishing_links": self.follows_phishing_links,
            "ignores_tls_warnings": self.ignores_tls_warnings,
            "approves_authenticator_prompts": self.approves_authenticator_prompts,
            "falls_back_to_password": self.falls_back_to_password,
            "enters_correct_pin": self.enters_correct_pin,
        }


@dataclass(frozen=True)
class Connection:
    origin_as_seen: str
    peer_endpoint: str
    secure_context: bool
    warnings: tuple[str, ...] = ()
    channel: Channel | None = field(default=None, compare=False, repr=False)

    @property
    def host(self) -> str:
        return urlsplit(self.origin_as_seen).hostname or ""

    def request(self, message: dict) -> dict:
        if self.channel is None:
            raise ConnectionRefused("connection has no channel")
        return self.channel.request(message)


def origin_of(url: str) -> tuple[str, str, int]:
    parts = urlsplit(url)
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https") or not parts.hostname:
        raise NameResolutionFailure(f"not a navigable URL: {url!r}")
    host = parts.hostname.lower()
    default = 443 if scheme == "https" else 80
    port = parts.port or default
    origin = f"{scheme}://{host}" if port == default else f"{scheme}://{host}:{port}"
    return origin, host, port


class Browser:
    """One client agent per host.

    ``authenticator_host`` names where CTAP requests go; it is the browser's
    own host unless a hybrid (Bluetooth) pairing routes them elsewhere.
    """

    def __init__(self, fabric: Fabric, host_id: str, policy: VictimPolicy | None = None, *, pin: str = "1234") -> None:
        self.fabric = fabric
        self.host_id = host_id
        self.policy = policy or VictimPolicy()
        self.pin = pin
        self.authenticator_host: str | None = host_id
        # set only by malware that patches the platform FIDO library
        self.forced_success = False

    def _emit(self, kind: str, payload: dict, step: int | None = None) -> None:
        self.fabric.transcript.emit(self.host_id, kind, payload, step=step)

    def navigate(self, url: str) -> Connection:
        origin, host, port = origin_of(url)
        tls = origin.startswith("https://")
        try:
            channel = self.fabric.establish_channel(
                self.host_id, host, port, tls, allow_untrusted=self.policy.ignores_tls_warnings,
            )
        except PasskeyLabError as exc:
            self._emit("client.navigate", {"url": url, "error": exc.code})
            raise
        secure = (tls and channel.trusted) or host == "localhost"
        conn = Connection(origin, channel.server_host, secure, tuple(channel.warnings), channel)
        self._emit("client.navigate", {
            "url": url, "origin_as_seen": origin, "peer": channel.server_host,
            "secure_context": secure, "warnings": list(channel.warnings), "error": None,
        })
        return conn

    # -- CTAP ---------------------------------------------------------------

    def _ctap(self) -> Channel:
        return self.fabric.ctap_channel(self.host_id, self.authenticator_host)

    def _ctap_call(self, req: CtapRequest) -> CtapResponse:
        ch = self._ctap()
        # over a hybrid link the phone's owner unlocks it locally
        if ch.kind != "hybrid":
            pin = self.pin if self.policy.enters_correct_pin else "0000"
            try:
                ch.request({"op": "unlock", "pin": pin})
            except WrongPin:
                # the authenticator stays locked; its own gate reports the failure
                pass
        return CtapResponse.from_message(ch.request(req.to_message()))

    def _check_context(self, conn: Connection, rp_id: str | None, what: str) -> str:
        if not conn.secure_context:
            self._emit(f"client.{what}", {"origin": conn.origin_as_seen, "error": "InsecureContext"})
            raise InsecureContext(conn.origin_as_seen)
        effective = rp_id or conn.host
        if effective != conn.host:
            self._emit(f"client.{what}", {"origin": conn.origin_as_seen, "rp_id": effective, "error": "RpIdMismatch"})
            raise RpIdMismatch(f"{effective} is not {conn.host}")
        return effective

    def webauthn_create(self, conn: Connection, options: dict) -> dict:
        rp_id = self._check_context(conn, options.get("rp", {}).get("id"), "webauthn_create")
        cd = ClientData(CREATE, options["challenge"], conn.origin_as_seen)
        self._emit("client.webauthn_create", {"origin": conn.origin_as_seen, "rp_id": rp_id, "error": None})
        resp = self._ctap_call(CtapRequest("make_credential", rp_id, cd.digest(), user_handle=options.get("user_handle")))
        return {
            "ceremony_id": options["ceremony_id"],
            "client_data": cd.to_dict(),
            "attestation": {
                "credential_id": b64u(resp.credential_id),
                "public_key": b64u(resp.public_key or b""),
                "authenticator_data": b64u(resp.authenticator_data),
            },
        }

    def webauthn_get(self, conn: Connection, options: dict) -> dict:
        rp_id = self._check_context(conn, options.get("rp_id"), "webauthn_get")
        if self.forced_success:
            self._emit("client.webauthn_get", {"origin": conn.origin_as_seen, "rp_id": rp_id, "forced": True, "error": None})
            return {"ceremony_id": options.get("ceremony_id"), "forced": True, "status": "authenticated"}
        cd = ClientData(GET, options["challenge"], conn.origin_as_seen)
        self._emit("client.webauthn_get", {"origin": conn.origin_as_seen, "rp_id": rp_id, "error": None})
        resp = self._ctap_call(CtapRequest("get_assertion", rp_id, cd.digest()))
        return {
            "op": "login.finish",
            "ceremony_id": options["ceremony_id"],
            "client_data": cd.to_dict(),
            "authenticator_data": b64u(resp.authenticator_data),
            "credential_id": b64u(resp.credential_id),
            "user_handle": resp.user_handle,
            "signature": b64u(resp.signature or b""),
        }

    def submit_password_form(self, conn: Connection, user: str, password: str) -> dict:
        if not self.policy.falls_back_to_password:
            self._emit("client.password_submit", {"peer": conn.peer_endpoint, "error": "UserDeclined"})
            raise UserDeclined("user will not type a password here")
        self._emit("client.password_submit", {"peer": conn.peer_endpoint, "origin": conn.origin_as_seen, "error": None})
        return conn.request({"op": "password.login", "user_handle": user, "password": password})

    # -- convenience flows used by scenarios -----------------------------------

    def register_passkey(self, conn: Connection, user_handle: str, *, session: str | None = None) -> dict:
        if session is None:
            options = conn.request({"op": "register.begin", "user_handle": user_handle})
        else:
            options = conn.request({"op": "passkey.add", "session": session})
        att = self.webauthn_create(conn, options)
        return conn.request({"op": "register.finish", **att})

    def login_with_passkey(self, conn: Connection, user_handle: str | None = None) -> dict:
        begin: dict = {"op": "login.begin"}
        if user_handle is not None:
            begin["user_handle"] = user_handle
        options = conn.request(begin)
        return conn.request(self.webauthn_get(conn, options))
