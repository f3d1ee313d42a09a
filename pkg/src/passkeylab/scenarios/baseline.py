"""Honest registration followed by honest authentication, with the login annotated
by the seven steps of the browser flow (0: start ... 6: verified)."""

from __future__ import annotations

from ..errors import OutOfScope
from .base import RP_URL, VICTIM_USER, World


def scenario_baseline(world: World) -> None:
    browser = world.victim_browser
    conn = browser.navigate(RP_URL)
    browser.register_passkey(conn, VICTIM_USER)

    world.fig1(0, "victim", "client starts passkey authentication")
    options = conn.request({"op": "login.begin"})
    world.fig1(1, "rp", "RP responds with a challenge")
    world.fig1(2, "victim", "challenge forwarded to the authenticator")
    assertion = browser.webauthn_get(conn, options)
    world.fig1(3, "victim", "authenticator signed the challenge")
    world.fig1(4, "victim", "signed challenge returned to the client")
    world.fig1(5, "victim", "signed challenge forwarded to the RP")
    conn.request(assertion)
    world.fig1(6, "rp", "RP verified the signature; session established")


def scenario_key_extraction(world: World) -> None:
    raise OutOfScope("extracting keys from encrypted local stores is not modelled")
