"""Rogue key registration: an attacker-held public key ends up on the victim's account.

``local_aitm``: malware on the victim's machine sits on the CTAP channel while
the victim adds a passkey and swaps the returned public key for one the
attacker holds. The RP keeps the victim's credential ID with the attacker's
key, so the victim's own later login fails signature verification.

``credential_phishing``: a phishing page captures the password, the attacker
logs in with it and registers its own passkey, which then outlives a
password change.
"""

from __future__ import annotations

from typing import Any

from ..authenticator import Authenticator
from ..errors import PasskeyLabError, PasswordUnavailable
from ..fabric import Action, ChannelSelector, Interceptor, Modify
from ..transcript import b64u, unb64u
from .base import (
    ATTACKER_PIN,
    RP_ID,
    RP_URL,
    VICTIM_NEW_PASSWORD,
    VICTIM_PASSWORD,
    VICTIM_USER,
    World,
)
from .phishing import FakeRelyingParty, serve_phishing_site


class KeySwapper:
    def __init__(self, world: World, attacker_auth: Authenticator) -> None:
        self.world = world
        self.attacker_auth = attacker_auth
        self.swapped: list[bytes] = []

    def __call__(self, message: dict, ctx) -> Any:
        if ctx.direction != "response" or ctx.op != "make_credential":
            return Action.PASS
        cred_id = unb64u(message["credential_id"])
        public_key = self.attacker_auth.provision_credential(
            RP_ID, message.get("user_handle") or VICTIM_USER, credential_id=cred_id)
        self.world.record_attacker_key(public_key, cred_id, "swapped into victim registration")
        self.swapped.append(cred_id)
        return Modify({**message, "public_key": b64u(public_key)})


def _local_aitm(world: World) -> None:
    world.enroll_victim()
    attacker_auth = world.add_authenticator("attacker", pin=ATTACKER_PIN)
    swapper = KeySwapper(world, attacker_auth)
    try:
        world.fabric.register_interceptor("attacker", Interceptor(
            ChannelSelector("victim", kind="ctap"), swapper, label="ctap-key-swapper"))
    except PasskeyLabError as exc:
        world.block(exc, "attacker hooks the victim's CTAP channel")

    # the victim, prompted by a fake "add a passkey" email, adds one at the genuine RP
    browser = world.victim_browser
    conn = browser.navigate(RP_URL)
    session = browser.login_with_passkey(conn)["session"]
    browser.register_passkey(conn, VICTIM_USER, session=session)
    world.note("victim", "add-passkey flow reported success")

    try:
        browser.login_with_passkey(conn)
    except PasskeyLabError as exc:
        world.note("victim", "login with new passkey failed", error=exc.code)

    attacker_conn = world.attacker_browser.navigate(RP_URL)
    try:
        world.attacker_browser.login_with_passkey(attacker_conn)
    except PasskeyLabError as exc:
        world.note("attacker", "attacker login failed", error=exc.code)


def _credential_phishing(world: World) -> None:
    if not world.toggles.password_fallback_enabled:
        raise PasswordUnavailable("victim account has no password")
    serve_phishing_site(world, FakeRelyingParty(world, "phish", on_passkey="error"))
    conn = world.lure_victim()
    world.victim_browser.submit_password_form(conn, VICTIM_USER, VICTIM_PASSWORD)

    # the attacker replays the captured password at the genuine RP
    attacker = world.attacker_browser
    world.add_authenticator("attacker", pin=ATTACKER_PIN)
    rp_conn = attacker.navigate(RP_URL)
    session = rp_conn.request({"op": "password.login", "user_handle": VICTIM_USER, "password": VICTIM_PASSWORD})["session"]
    options = rp_conn.request({"op": "passkey.add", "session": session})
    att = attacker.webauthn_create(rp_conn, options)
    world.record_attacker_key(unb64u(att["attestation"]["public_key"]),
                              unb64u(att["attestation"]["credential_id"]), "registered after password login")
    rp_conn.request({"op": "register.finish", **att})

    # the victim changes the password; the attacker's passkey is unaffected
    victim_conn = world.victim_browser.navigate(RP_URL)
    victim_session = victim_conn.request({"op": "password.login", "user_handle": VICTIM_USER, "password": VICTIM_PASSWORD})["session"]
    victim_conn.request({"op": "password.change", "session": victim_session, "password": VICTIM_NEW_PASSWORD})

    attacker.login_with_passkey(attacker.navigate(RP_URL))


def scenario_rogue_key_registration(world: World) -> None:
    if world.config.variant == "credential_phishing":
        _credential_phishing(world)
    else:
        _local_aitm(world)
