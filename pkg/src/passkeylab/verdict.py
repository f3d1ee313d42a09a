"""Recompute a scenario verdict from transcript events alone."""

from __future__ import annotations

from typing import Iterable

from .transcript import TranscriptEvent

ATTACKER_SESSION = "attacker_session_as_victim"
ATTACKER_CREDENTIAL = "attacker_credential_on_victim_account"
PASSWORD_CAPTURED = "password_captured"
INFORMATION_CAPTURED = "information_captured"

SUCCESS_VERDICTS = (ATTACKER_CREDENTIAL, ATTACKER_SESSION, PASSWORD_CAPTURED, INFORMATION_CAPTURED)
ACCOUNT_TAKEOVER = (ATTACKER_SESSION, ATTACKER_CREDENTIAL)


def blocked(code: str | None) -> str:
    return f"blocked({code or 'none'})"


def is_blocked(verdict: str) -> bool:
    return verdict.startswith("blocked(")


def verdict_matches(expected: str, actual: str) -> bool:
    """``blocked`` alone accepts any blocked verdict; everything else is exact."""
    if expected == "blocked":
        return is_blocked(actual)
    return expected == actual


def derive_verdict(events: Iterable[TranscriptEvent]) -> str:
    """Strongest attacker gain wins; otherwise the first recorded block reason.

    Host roles and account owners come from the setup events, so a transcript
    file is self-describing.
    """
    roles: dict[str, str] = {}
    owners: dict[str, str] = {}
    attacker_keys: set[str] = set()
    stored: list[dict] = []
    sessions: list[dict] = []
    captures: set[str] = set()
    first_block: str | None = None

    for ev in events:
        p = ev.payload
        if ev.kind == "fabric.host":
            roles[p["host"]] = p["role"]
        elif ev.kind == "rp.account_created":
            owners[p["user_handle"]] = p["owner"]
        elif ev.kind == "attacker.keypair":
            attacker_keys.add(p["public_key"])
        elif ev.kind == "rp.credential_stored":
            stored.append(p)
        elif ev.kind == "rp.session_issued":
            sessions.append(p)
        elif ev.kind == "attacker.capture":
            captures.add(p["what"])
        elif ev.kind == "scenario.blocked" and first_block is None:
            first_block = p["error"]

    def victim_account(user: str) -> bool:
        return roles.get(owners.get(user, ""), "") == "victim"

    if any(victim_account(c["user_handle"]) and c["public_key"] in attacker_keys for c in stored):
        return ATTACKER_CREDENTIAL
    if any(victim_account(s["user_handle"]) and roles.get(s["peer"] or "") == "attacker" for s in sessions):
        return ATTACKER_SESSION
    if "password" in captures:
        return PASSWORD_CAPTURED
    if "information" in captures:
        return INFORMATION_CAPTURED
    return blocked(first_block)
