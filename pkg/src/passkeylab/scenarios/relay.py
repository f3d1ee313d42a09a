"""Bluetooth/QR relay: the attacker opens a hybrid login at the genuine RP and shows
its QR code on a phishing page; the victim's phone pairs with the attacker's
nearby device and signs for it."""

from __future__ import annotations

from ..errors import PhishingUnreachable, UserDeclined
from ..transcript import b64u, canonical_json
from .base import RP_URL, VICTIM_PIN, World
from .phishing import FakeRelyingParty, serve_phishing_site


def scenario_bluetooth_qr_relay(world: World) -> None:
    world.enroll_victim()
    attacker = world.attacker_browser
    state: dict = {}

    def make_qr() -> str:
        rp_conn = attacker.navigate(RP_URL)
        options = rp_conn.request({"op": "login.begin"})
        state.update(conn=rp_conn, options=options)
        token = b64u(canonical_json({"tunnel": "attacker", "rp_id": options["rp_id"], "nonce": options["ceremony_id"][:8]}))
        world.emit("attacker", "attacker.relay_token", {"token": token})
        return token

    serve_phishing_site(world, FakeRelyingParty(world, "phish", on_passkey="qr", qr_source=make_qr))

    if not world.policy.follows_phishing_links:
        raise PhishingUnreachable("victim does not open the phishing page")
    conn = world.lure_victim()
    page = conn.request({"op": "login.begin"})
    world.note("victim", "scans QR code", token=page["qr"])

    if not world.policy.approves_authenticator_prompts:
        world.emit("victim", "bt.pair", {"authenticator": "victim", "error": "UserDeclined"})
        raise UserDeclined("victim refuses the pairing prompt")
    world.fabric.pair_bluetooth("victim", "attacker")
    world.victim_auth.unlock(VICTIM_PIN if world.policy.enters_correct_pin else "0000")

    attacker.authenticator_host = "victim"
    assertion = attacker.webauthn_get(state["conn"], state["options"])
    state["conn"].request(assertion)
