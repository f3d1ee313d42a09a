"""Scenario configuration, the shared simulated world, and the runner."""

from __future__ import annotations

import base64
import dataclasses
import random
from dataclasses import dataclass, field
from typing import Any, Callable

from .. import crypto
from ..authenticator import Authenticator, Infection
from ..client import Browser, Connection, VictimPolicy
from ..errors import ConfigError, GenuineRpReached, PasskeyLabError, PhishingUnreachable
from ..fabric import CTAP_PORT, PUBLIC_ROOT, Certificate, Fabric, Role
from ..relying_party import RelyingParty
from ..transcript import Transcript, b64u
from ..verdict import derive_verdict

RP_ID = "linear.app"
RP_URL = "https://linear.app/login"
PHISH_DOMAIN = "evil.example"
PHISH_URL = "https://evil.example/login"
ROGUE_CA = "rogue-ca"

VICTIM_USER = "alice"
ATTACKER_USER = "mallory"
VICTIM_PIN = "1234"
ATTACKER_PIN = "9999"
VICTIM_PASSWORD = "correct horse battery staple"
VICTIM_NEW_PASSWORD = "tr0ub4dor&3"
ATTACKER_PASSWORD = "hunter2"

GATEWAY_ADDR = "10.0.0.1"
VICTIM_ADDR = "10.0.0.10"
ATTACKER_ADDR = "10.0.0.66"
RP_ADDR = "203.0.113.10"
PHISH_ADDR = "198.51.100.66"

INFECTION_MODES = ("off", "fixed", "indexed")


@dataclass(frozen=True)
class Toggles:
    victim_compromised: bool = False
    install_rogue_ca: bool = False
    dns_override: bool = False
    route_override: bool = False
    flush_cache: bool = False
    infection_mode: str = "off"
    anti_arp_spoofing: bool = False
    password_fallback_enabled: bool = False
    attacker_in_range: bool = False

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "infection_mode":
                if value not in INFECTION_MODES:
                    raise ConfigError(f"infection_mode must be one of {INFECTION_MODES}, got {value!r}")
            elif not isinstance(value, bool):
                raise ConfigError(f"toggle {f.name} must be a boolean, got {value!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


TOGGLE_NAMES = tuple(f.name for f in dataclasses.fields(Toggles))
POLICY_NAMES = tuple(f.name for f in dataclasses.fields(VictimPolicy))
CONFIG_KEYS = ("scenario", "seed", "policy", "toggles", "variant", "expect")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    seed: int = 1
    policy: VictimPolicy = field(default_factory=VictimPolicy)
    toggles: Toggles = field(default_factory=Toggles)
    variant: str | None = None
    expect: str | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "policy": self.policy.to_dict(),
            "toggles": self.toggles.to_dict(),
            "variant": self.variant,
            "expect": self.expect,
        }

    def with_toggles(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, toggles=dataclasses.replace(self.toggles, **changes))

    def with_policy(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, policy=dataclasses.replace(self.policy, **changes))

    def merged(self, doc: dict) -> "ScenarioConfig":
        """Overlay a config document onto this one, rejecting unknown keys."""
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        unknown = set(doc) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        toggles = doc.get("toggles", {})
        policy = doc.get("policy", {})
        if not isinstance(toggles, dict) or not isinstance(policy, dict):
            raise ConfigError("'toggles' and 'policy' must be objects")
        bad = set(toggles) - set(TOGGLE_NAMES)
        if bad:
            raise ConfigError(f"unknown toggles: {sorted(bad)}")
        bad = set(policy) - set(POLICY_NAMES)
        if bad:
            raise ConfigError(f"unknown policy fields: {sorted(bad)}")
        for k, v in policy.items():
            if not isinstance(v, bool):
                raise ConfigError(f"policy field {k} must be a boolean")
        seed = doc.get("seed", self.seed)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        cfg = self.with_toggles(**toggles).with_policy(**policy)
        return dataclasses.replace(
            cfg,
            seed=seed,
            variant=doc.get("variant", self.variant),
            expect=doc.get("expect", self.expect),
        )


@dataclass
class ScenarioOutcome:
    scenario: str
    verdict: str
    transcript: Transcript
    table1_labels: dict[str, str] | None = None
    # private keys held by every authenticator in the run; for audits only
    key_audit: list[bytes] = field(default_factory=list, repr=False)

    @property
    def events(self):
        return self.transcript.events


def rp_certificate() -> Certificate:
    return Certificate(RP_ID, (RP_ID, f"*.{RP_ID}"), PUBLIC_ROOT)


def rogue_certificate() -> Certificate:
    return Certificate(RP_ID, (RP_ID, f"*.{RP_ID}"), ROGUE_CA)


def phish_certificate() -> Certificate:
    return Certificate(PHISH_DOMAIN, (PHISH_DOMAIN,), PUBLIC_ROOT)


class World:
    """Victim, on-LAN attacker, remote phishing server and the genuine RP.

    Setup (hosts, RP account, the victim's first passkey) is recorded in the
    transcript like everything else so a transcript file is self-contained.
    """

    def __init__(self, config: ScenarioConfig, transcript: Transcript | None = None) -> None:
        self.config = config
        self.toggles = config.toggles
        self.policy = config.policy
        self.transcript = transcript or Transcript()
        self.fabric = Fabric(self.transcript)
        self.authenticators: list[Authenticator] = []
        # everything the attacker has learned; never serialized whole
        self.attacker_state: dict[str, Any] = {}

        fab = self.fabric
        fab.add_host("gateway", Role.INFRASTRUCTURE, "lan", GATEWAY_ADDR)
        fab.add_host("victim", Role.VICTIM, "lan", VICTIM_ADDR, gateway=GATEWAY_ADDR,
                     anti_arp_spoofing=self.toggles.anti_arp_spoofing)
        fab.add_host("attacker", Role.ATTACKER, "lan", ATTACKER_ADDR, gateway=GATEWAY_ADDR)
        fab.add_host("phish", Role.ATTACKER, "wan", PHISH_ADDR)
        fab.add_host("rp", Role.RP, "wan", RP_ADDR)
        fab.add_dns_record(RP_ID, RP_ADDR)
        fab.add_dns_record(f"*.{RP_ID}", RP_ADDR)
        fab.add_dns_record(PHISH_DOMAIN, PHISH_ADDR)
        if self.toggles.attacker_in_range:
            fab.set_proximity("victim", "attacker")
            self.emit("attacker", "fabric.proximity", {"a": "victim", "b": "attacker", "in_range": True})

        self.rp = RelyingParty(RP_ID, host_id="rp", rng=self.rng("rp"), transcript=self.transcript)
        fab.listen("rp", 443, self.rp.handle, rp_certificate())
        password = VICTIM_PASSWORD if self.toggles.password_fallback_enabled else None
        self.rp.create_account(VICTIM_USER, owner="victim", password=password)

        self.victim_browser = Browser(fab, "victim", self.policy, pin=VICTIM_PIN)
        self.victim_auth = self.add_authenticator("victim", pin=VICTIM_PIN, user=self.policy)
        self.attacker_browser = Browser(fab, "attacker", VictimPolicy(approves_authenticator_prompts=True), pin=ATTACKER_PIN)

        if self.toggles.victim_compromised:
            fab.compromise("attacker", "victim")

    # -- plumbing -----------------------------------------------------------

    def rng(self, stream: str) -> random.Random:
        return random.Random(f"{self.config.seed}:{stream}")

    def emit(self, actor: str, kind: str, payload: dict | None = None, *, step: int | None = None) -> None:
        self.transcript.emit(actor, kind, payload or {}, step=step)

    def fig1(self, n: int, actor: str, what: str) -> None:
        self.emit(actor, "fig1.step", {"what": what}, step=n)

    def fig2(self, n: int, actor: str, what: str) -> None:
        self.emit(actor, "fig2.step", {"what": what}, step=n)

    def block(self, exc: PasskeyLabError, where: str) -> None:
        self.emit("harness", "scenario.blocked", {"error": exc.code, "where": where, "detail": str(exc)})

    def note(self, actor: str, what: str, **payload: Any) -> None:
        self.emit(actor, "scenario.note", {"what": what, **payload})

    def add_authenticator(self, host_id: str, *, pin: str, user: Any = None, infection: Infection | None = None) -> Authenticator:
        auth = Authenticator(pin=pin, rng=self.rng(f"authenticator:{host_id}:{len(self.authenticators)}"),
                             infection=infection, user=user, host_id=host_id, transcript=self.transcript)
        self.install_authenticator(host_id, auth)
        return auth

    def install_authenticator(self, host_id: str, auth: Authenticator) -> None:
        if auth not in self.authenticators:
            self.authenticators.append(auth)
        self.fabric.listen(host_id, CTAP_PORT, auth.handle)

    def record_attacker_key(self, public_key: bytes, credential_id: bytes, how: str) -> None:
        """Public half of a key the attacker itself generated."""
        self.emit("attacker", "attacker.keypair", {
            "public_key": b64u(public_key), "credential_id": b64u(credential_id), "how": how,
        })

    # -- common flows -----------------------------------------------------------

    def enroll_victim(self) -> None:
        """Victim registers a passkey at the genuine RP before any attack starts.

        Runs with a cooperative user so that attack-time policy choices
        (declining prompts, wrong PIN) only affect the attack itself.
        """
        coop = VictimPolicy(approves_authenticator_prompts=True, enters_correct_pin=True)
        saved = self.victim_browser.policy, self.victim_auth.user
        self.victim_browser.policy, self.victim_auth.user = coop, coop
        try:
            conn = self.victim_browser.navigate(RP_URL)
            self.victim_browser.register_passkey(conn, VICTIM_USER)
        finally:
            self.victim_browser.policy, self.victim_auth.user = saved
        self.note("victim", "enrolled passkey at genuine RP")

    def enroll_attacker(self) -> Authenticator:
        """The attacker's own account and passkey at the genuine RP."""
        auth = self.add_authenticator("attacker", pin=ATTACKER_PIN)
        self.rp.create_account(ATTACKER_USER, owner="attacker", password=ATTACKER_PASSWORD)
        conn = self.attacker_browser.navigate(RP_URL)
        self.attacker_browser.register_passkey(conn, ATTACKER_USER)
        return auth

    def spoof_victim_dns(self) -> None:
        """Attacker prep for redirecting the victim: ARP, DNS, cache, trust.

        Each step only runs when its toggle is on; a step that fails stops
        the scenario with that step's error.
        """
        fab, t = self.fabric, self.toggles
        if t.install_rogue_ca:
            fab.install_trust_anchor("attacker", "victim", ROGUE_CA)
        if t.route_override:
            self.attacker_state["route"] = fab.apply_override(
                "attacker", "route", {"target": "victim", "address": GATEWAY_ADDR})
        if t.dns_override:
            self.attacker_state["dns"] = fab.apply_override(
                "attacker", "dns", {"target": "victim", "names": {RP_ID: ATTACKER_ADDR, f"*.{RP_ID}": ATTACKER_ADDR}})
        if t.flush_cache:
            fab.flush_dns_cache("attacker", "victim")

    def undo_spoof(self) -> None:
        for key in ("dns", "route"):
            ov = self.attacker_state.pop(key, None)
            if ov is not None:
                self.fabric.remove_override("attacker", ov)
        if self.fabric.hosts["victim"].compromised:
            self.fabric.flush_dns_cache("attacker", "victim")

    def lure_victim(self) -> Connection:
        """Get the victim onto an attacker-controlled page.

        A victim who clicks phishing links lands on the attacker's own domain.
        Otherwise the attacker needs the DNS redirect, and the victim then
        types the genuine URL.
        """
        if self.policy.follows_phishing_links:
            self.note("victim", "followed phishing link", url=PHISH_URL)
            return self.victim_browser.navigate(PHISH_URL)
        if not self.toggles.dns_override:
            raise PhishingUnreachable("victim ignores links and no DNS redirect is in place")
        self.spoof_victim_dns()
        conn = self.victim_browser.navigate(RP_URL)
        if conn.peer_endpoint == "rp":
            raise GenuineRpReached("victim resolved the genuine RP")
        return conn


ScenarioFn = Callable[[World], None]


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    fn: ScenarioFn
    defaults: ScenarioConfig
    expected: str
    description: str
    abbrev: str | None = None
    table1: dict[str, str] | None = None
    variants: tuple[str, ...] = ()


def run_scenario(spec: ScenarioSpec, config: ScenarioConfig) -> ScenarioOutcome:
    if spec.variants and config.variant not in spec.variants:
        raise ConfigError(f"{spec.name}: variant must be one of {spec.variants}, got {config.variant!r}")
    if not spec.variants and config.variant is not None:
        raise ConfigError(f"{spec.name} has no variants")
    transcript = Transcript()
    transcript.emit("harness", "scenario.start", {"scenario": spec.name, "config": config.to_dict()})
    world = World(config, transcript)
    try:
        spec.fn(world)
    except PasskeyLabError as exc:
        world.block(exc, "halt")
    verdict = derive_verdict(world.transcript.events)
    world.emit("harness", "scenario.end", {"scenario": spec.name, "verdict": verdict})
    keys = [k for a in world.authenticators for k in a._key_audit()]
    return ScenarioOutcome(spec.name, verdict, world.transcript, spec.table1, keys)


def audit_private_keys(blob: bytes, keys: list[bytes]) -> list[str]:
    """Return a description of every encoding of a private key found in ``blob``."""
    hits = []
    for k in keys:
        forms = {
            "raw": k,
            "hex": k.hex().encode(),
            "HEX": k.hex().upper().encode(),
            "b64u": b64u(k).encode(),
            "b64": base64.b64encode(k).rstrip(b"="),
        }
        for label, form in forms.items():
            if form in blob:
                hits.append(f"{crypto.fingerprint(k)}:{label}")
    return hits
