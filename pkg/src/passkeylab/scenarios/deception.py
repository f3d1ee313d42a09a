"""Authenticator deception.

The victim is redirected (ARP + DNS) to an attacker frontend whose certificate
chains to a rogue CA planted on the victim's machine. The frontend relays a
challenge the attacker obtained from the genuine RP, the victim's authenticator
signs it under the genuine origin, and the attacker swaps the victim's signed
response and user handle into its own pending login.
"""

from __future__ import annotations

from typing import Any

from ..client import Connection
from ..errors import GenuineRpReached
from ..fabric import Action, ChannelSelector, Interceptor, Modify
from .base import RP_ID, RP_URL, World, rogue_certificate

SWAPPED_FIELDS = ("client_data", "authenticator_data", "credential_id", "signature", "user_handle")


class AttackerProxy:
    """Interceptor on the attacker's own traffic to the RP (the manual AITM proxy)."""

    def __init__(self, world: World) -> None:
        self.world = world
        self.captured_login: dict | None = None
        self.victim_response: dict | None = None

    def __call__(self, message: dict, ctx) -> Any:
        if ctx.direction == "response" and ctx.op == "login.begin":
            self.captured_login = {"ceremony_id": message["ceremony_id"], "challenge": message["challenge"]}
            self.world.emit("attacker", "attacker.capture", {
                "what": "challenge", "ceremony_id": message["ceremony_id"],
            })
            self.world.fig2(3, "attacker", "challenge and authentication id extracted")
            return Action.COPY
        if ctx.direction == "request" and ctx.op == "login.finish" and self.victim_response:
            swapped = dict(message)
            for k in SWAPPED_FIELDS:
                swapped[k] = self.victim_response[k]
            self.world.emit("attacker", "attacker.swap", {
                "fields": list(SWAPPED_FIELDS), "ceremony_id": message["ceremony_id"],
                "user_handle": swapped["user_handle"],
            })
            return Modify(swapped)
        return Action.PASS


class DeceptionFrontend:
    """The cloned site the victim lands on; its backend talks to the real RP."""

    def __init__(self, world: World, proxy: AttackerProxy) -> None:
        self.world = world
        self.proxy = proxy
        self.rp_conn: Connection | None = None
        self.done = False

    def __call__(self, message: dict, peer: str) -> dict:
        w = self.world
        op = message.get("op")
        if op == "login.begin":
            self.rp_conn = w.attacker_browser.navigate(RP_URL)
            w.fig2(2, "attacker", "attacker starts authentication at the genuine RP")
            self.rp_conn.request({"op": "login.begin"})
            captured = self.proxy.captured_login
            w.fig2(4, "attacker", "captured challenge forwarded to the victim")
            return {"ceremony_id": captured["ceremony_id"], "challenge": captured["challenge"], "rp_id": RP_ID}
        if op == "login.finish":
            w.fig2(6, "attacker", "victim's signed challenge returned to the attacker")
            self.proxy.victim_response = {k: message[k] for k in SWAPPED_FIELDS}
            # the attacker signs its own pending login; the proxy swaps in the victim's response
            own = w.attacker_browser.webauthn_get(self.rp_conn, {
                "ceremony_id": self.proxy.captured_login["ceremony_id"],
                "challenge": self.proxy.captured_login["challenge"],
                "rp_id": RP_ID,
            })
            w.fig2(7, "attacker", "attacker submits the victim's response under its own ceremony")
            self.rp_conn.request(own)
            self.done = True
            w.emit("attacker", "attacker.signal_error", {"shown": "something went wrong, please reload the page"})
            return {"status": "error", "message": "please reload"}
        return {"status": "ok"}


def scenario_authenticator_deception(world: World) -> None:
    world.enroll_victim()
    world.enroll_attacker()

    proxy = AttackerProxy(world)
    world.fabric.register_interceptor("attacker", Interceptor(
        ChannelSelector("attacker", RP_ID, "https"), proxy, label="attacker-proxy"))
    frontend = DeceptionFrontend(world, proxy)
    world.fabric.listen("attacker", 443, frontend, rogue_certificate())

    world.spoof_victim_dns()

    browser = world.victim_browser
    conn = browser.navigate(RP_URL)
    if conn.peer_endpoint == "rp":
        raise GenuineRpReached("victim reached the genuine RP (stale cache or no redirect)")
    world.fig2(1, "victim", "victim reaches the attacker frontend")

    options = conn.request({"op": "login.begin"})
    assertion = browser.webauthn_get(conn, options)
    world.fig2(5, "victim", "victim approves and the authenticator signs")
    conn.request(assertion)
    # cleanup: stop spoofing so that a reload reaches the genuine RP
    world.undo_spoof()
    conn = browser.navigate(RP_URL)
    world.note("victim", "reload after error", peer=conn.peer_endpoint)
    browser.login_with_passkey(conn)
