"""Infected authenticator: the victim's key generation is replaced by one the
attacker can reproduce, so the attacker later logs in with the same key."""

from __future__ import annotations

from ..authenticator import Authenticator, Infection, InfectionMode, infected_credential_id
from ..crypto import Seed, SeedOrigin, derive_seeded_keypair, fingerprint
from ..errors import DuplicateCredentialId, PasskeyLabError
from ..transcript import b64u
from .base import ATTACKER_PIN, RP_ID, RP_URL, VICTIM_USER, World

# The clone cannot know how often the victim has logged in, so it starts far
# ahead of any plausible counter to stay clear of clone detection.
COUNTER_JUMP = 1 << 16


def scenario_infected_authenticator(world: World) -> None:
    mode = world.toggles.infection_mode
    seed = Seed(world.rng("attacker-seed").randbytes(32), SeedOrigin.ATTACKER_KNOWN)
    world.attacker_state["seed"] = seed

    if mode != "off":
        world.fabric.require_privilege("attacker", "victim", "replace the authenticator binary")
        world.victim_auth.infection = Infection(seed, InfectionMode(mode))
        world.emit("attacker", "attacker.infect_authenticator", {
            "target": "victim", "mode": mode, "seed_fp": fingerprint(seed.bytes),
        })

    browser = world.victim_browser
    conn = browser.navigate(RP_URL)
    browser.register_passkey(conn, VICTIM_USER)
    login = browser.login_with_passkey(conn)

    # a second passkey at the same RP: a fixed-key infection hands out the same credential again
    try:
        browser.register_passkey(conn, VICTIM_USER, session=login["session"])
    except DuplicateCredentialId as exc:
        world.note("victim", "second passkey rejected", error=exc.code)

    kp = derive_seeded_keypair(seed, 0)
    cred_id = infected_credential_id(seed, 0)
    world.emit("attacker", "attacker.derive_key", {
        "public_key": b64u(kp.public_key), "credential_id": b64u(cred_id), "index": 0,
    })
    clone = Authenticator.cloned_from_seed(
        seed, rp_id=RP_ID, user_handle=VICTIM_USER, start_count=COUNTER_JUMP,
        pin=ATTACKER_PIN, rng=world.rng("attacker-clone"), host_id="attacker", transcript=world.transcript,
    )
    world.install_authenticator("attacker", clone)

    attacker_conn = world.attacker_browser.navigate(RP_URL)
    try:
        world.attacker_browser.login_with_passkey(attacker_conn)
    except PasskeyLabError as exc:
        world.block(exc, "attacker login with derived key")
