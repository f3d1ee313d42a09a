"""Passkey reduction: the fake page says passkeys are broken and asks for the password."""

from __future__ import annotations

from ..errors import PasswordUnavailable
from .base import VICTIM_PASSWORD, VICTIM_USER, World
from .phishing import FakeRelyingParty, serve_phishing_site


def scenario_passkey_reduction(world: World) -> None:
    world.enroll_victim()
    serve_phishing_site(world, FakeRelyingParty(world, "phish", on_passkey="error"))

    conn = world.lure_victim()
    reply = conn.request({"op": "login.begin"})
    world.note("victim", "passkey sign-in refused by page", status=reply.get("status"))
    if not world.toggles.password_fallback_enabled:
        raise PasswordUnavailable("the account has no password to fall back to")
    world.victim_browser.submit_password_form(conn, VICTIM_USER, VICTIM_PASSWORD)
