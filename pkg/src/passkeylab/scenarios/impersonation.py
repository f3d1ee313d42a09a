"""RP impersonation: a fake login that always "succeeds", followed by requests
for personal information. No session at the genuine RP is ever involved."""

from __future__ import annotations

from ..errors import PasskeyLabError
from .base import World
from .phishing import FakeRelyingParty, serve_phishing_site

PERSONAL_FIELDS = {"date_of_birth": "<redacted>", "phone": "<redacted>", "security_answer": "<redacted>"}


def scenario_rp_impersonation(world: World) -> None:
    world.enroll_victim()
    degraded = world.config.variant == "degraded"
    serve_phishing_site(world, FakeRelyingParty(world, "phish", on_passkey="fake_ceremony"))

    if not degraded:
        try:
            world.fabric.require_privilege("attacker", "victim", "patch the platform FIDO library")
        except PasskeyLabError:
            # without the patch the fake ceremony goes to the real authenticator
            pass
        else:
            world.victim_browser.forced_success = True
            world.emit("attacker", "attacker.patch_fido_library", {"target": "victim"})

    conn = world.lure_victim()
    if degraded:
        world.note("phish", "page skips passkey sign-in entirely")
    else:
        options = conn.request({"op": "login.begin"})
        result = world.victim_browser.webauthn_get(conn, options)
        conn.request({**result, "op": "login.finish"})
        world.note("victim", "believes sign-in succeeded")
    conn.request({"op": "profile.verify", "fields": PERSONAL_FIELDS})
