"""Attacker-run web pages used by several scenarios."""

from __future__ import annotations

from typing import Any, Callable

from .. import crypto
from ..transcript import b64u
from .base import ATTACKER_ADDR, PHISH_ADDR, World, phish_certificate, rogue_certificate


class FakeRelyingParty:
    """A look-alike login page.

    ``on_passkey`` decides what happens when the victim picks passkey login:
    ``"error"`` claims passkeys are unavailable, ``"fake_ceremony"`` runs a
    ceremony the attacker never redeems, ``"qr"`` shows a relay token.
    """

    def __init__(self, world: World, host_id: str, *, on_passkey: str = "error",
                 qr_source: Callable[[], str] | None = None) -> None:
        self.world = world
        self.host_id = host_id
        self.on_passkey = on_passkey
        self.qr_source = qr_source
        self.rng = world.rng(f"fake-rp:{host_id}")

    def capture(self, what: str, **payload: Any) -> None:
        self.world.emit(self.host_id, "attacker.capture", {"what": what, **payload})

    def __call__(self, message: dict, peer: str) -> dict:
        op = message.get("op")
        if op == "login.begin":
            if self.on_passkey == "error":
                self.world.emit(self.host_id, "attacker.signal_error", {"shown": "passkey sign-in is unavailable, use your password"})
                return {"status": "passkey_unavailable", "fallback": "password"}
            if self.on_passkey == "qr":
                return {"status": "scan_qr", "qr": self.qr_source()}
            challenge = self.rng.randbytes(32)
            return {"ceremony_id": "fake-" + self.rng.randbytes(8).hex(), "challenge": b64u(challenge), "rp_id": None}
        if op == "login.finish":
            # nothing to redeem: the page simply declares success
            return {"status": "authenticated", "user_handle": message.get("user_handle")}
        if op == "password.login":
            self.capture("password", user_handle=message["user_handle"],
                         password_fp=crypto.fingerprint(message["password"].encode()))
            return {"status": "authenticated", "user_handle": message["user_handle"]}
        if op == "profile.verify":
            self.capture("information", fields=sorted(message.get("fields", {})))
            return {"status": "thanks"}
        return {"status": "ok"}


def serve_phishing_site(world: World, site: FakeRelyingParty) -> None:
    """Publish ``site`` on the attacker's own domain and on its LAN frontend."""
    world.fabric.listen("phish", 443, site, phish_certificate())
    world.fabric.listen("attacker", 443, site, rogue_certificate())
    world.emit("attacker", "attacker.serve", {"hosts": {"phish": PHISH_ADDR, "attacker": ATTACKER_ADDR}})
