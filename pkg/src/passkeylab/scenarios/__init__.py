"""Scenario registry: one entry per attack vector plus the honest baseline."""

from __future__ import annotations

from ..client import VictimPolicy
from ..errors import UnknownScenario
from ..verdict import (
    ATTACKER_CREDENTIAL,
    ATTACKER_SESSION,
    INFORMATION_CAPTURED,
    PASSWORD_CAPTURED,
    blocked,
)
from .base import (
    ScenarioConfig,
    ScenarioOutcome,
    ScenarioSpec,
    Toggles,
    World,
    audit_private_keys,
    run_scenario,
)
from .baseline import scenario_baseline, scenario_key_extraction
from .deception import scenario_authenticator_deception
from .impersonation import scenario_rp_impersonation
from .infected import scenario_infected_authenticator
from .reduction import scenario_passkey_reduction
from .relay import scenario_bluetooth_qr_relay
from .rogue_key import scenario_rogue_key_registration

TABLE1_CRITERIA = ("Stealthiness", "Feasibility", "Victim Interaction", "Time Consumption", "Privileges")

TABLE1 = {
    "IE": dict(zip(TABLE1_CRITERIA, ("High", "Medium", "Low", "Low", "Low-High"))),
    "AD": dict(zip(TABLE1_CRITERIA, ("Medium", "High", "High", "Low-High", "Low-High"))),
}

# preconditions whose single-toggle removal must block the deception attack
DECEPTION_PRECONDITIONS = ("victim_compromised", "install_rogue_ca", "dns_override", "route_override", "flush_cache")


def _spec(name, fn, expected, description, *, toggles=None, policy=None, variant=None, variants=(), abbrev=None):
    defaults = ScenarioConfig(
        scenario=name,
        policy=VictimPolicy(**(policy or {})),
        toggles=Toggles(**(toggles or {})),
        variant=variant,
    )
    return ScenarioSpec(name, fn, defaults, expected, description, abbrev,
                        TABLE1.get(abbrev) if abbrev else None, variants)


REGISTRY: dict[str, ScenarioSpec] = {s.name: s for s in (
    _spec("baseline", scenario_baseline, blocked(None),
          "honest registration and authentication"),
    _spec("infected_authenticator", scenario_infected_authenticator, ATTACKER_SESSION,
          "authenticator generates attacker-known keys",
          toggles={"victim_compromised": True, "infection_mode": "fixed"}, abbrev="IE"),
    _spec("authenticator_deception", scenario_authenticator_deception, ATTACKER_SESSION,
          "DNS/ARP redirect plus rogue CA; victim signs the attacker's challenge",
          toggles={k: True for k in DECEPTION_PRECONDITIONS}, abbrev="AD"),
    _spec("passkey_reduction", scenario_passkey_reduction, PASSWORD_CAPTURED,
          "fake passkey error pushes the victim to a password",
          toggles={"password_fallback_enabled": True},
          policy={"follows_phishing_links": True, "falls_back_to_password": True}),
    _spec("rogue_key_registration", scenario_rogue_key_registration, ATTACKER_CREDENTIAL,
          "attacker-held public key stored on the victim's account",
          toggles={"victim_compromised": True, "password_fallback_enabled": True},
          policy={"follows_phishing_links": True, "falls_back_to_password": True},
          variant="local_aitm", variants=("local_aitm", "credential_phishing")),
    _spec("rp_impersonation", scenario_rp_impersonation, INFORMATION_CAPTURED,
          "fake login that always succeeds, then prompts for personal data",
          toggles={"victim_compromised": True}, policy={"follows_phishing_links": True},
          variant="full", variants=("full", "degraded")),
    _spec("bluetooth_qr_relay", scenario_bluetooth_qr_relay, ATTACKER_SESSION,
          "QR code from the genuine RP relayed through a phishing page to a nearby attacker",
          toggles={"attacker_in_range": True}, policy={"follows_phishing_links": True}),
    _spec("key_extraction", scenario_key_extraction, blocked("OutOfScope"),
          "private key extraction from encrypted stores (not modelled)"),
)}


def get_scenario(name: str) -> ScenarioSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownScenario(name) from None


def default_config(name: str, seed: int | None = None) -> ScenarioConfig:
    cfg = get_scenario(name).defaults
    return cfg if seed is None else cfg.merged({"seed": seed})


def run(name: str, config: ScenarioConfig | None = None) -> ScenarioOutcome:
    spec = get_scenario(name)
    return run_scenario(spec, config or spec.defaults)


__all__ = [
    "DECEPTION_PRECONDITIONS", "REGISTRY", "TABLE1", "TABLE1_CRITERIA", "ScenarioConfig", "ScenarioOutcome",
    "ScenarioSpec", "Toggles", "World", "audit_private_keys", "default_config", "get_scenario", "run",
    "run_scenario",
]
