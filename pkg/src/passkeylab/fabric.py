"""Simulated network: hosts, name resolution, route overrides, trust and channels.

ARP poisoning is modelled as a route override on the victim's gateway address,
which puts the attacker on the victim's path. DNS answers can only be forged
by an actor that is on that path. Privileged changes to a host (trust store,
DNS cache, local interception) need the host to be compromised.

Messages cross channels as length-prefixed canonical JSON frames. Every frame
passes through matching interceptors in registration order.
"""

from __future__ import annotations

import enum
import itertools
import json
import struct
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from .errors import (
    ConnectionRefused,
    MessageDropped,
    NameResolutionFailure,
    ParseError,
    PasskeyLabError,
    PositionRequired,
    PrivilegeError,
    TlsUntrusted,
    error_from_code,
)
from .transcript import Transcript, canonical_json

PUBLIC_ROOT = "public-root"
CTAP_PORT = "ctap"


class Role(enum.Enum):
    VICTIM = "victim"
    ATTACKER = "attacker"
    RP = "rp"
    INFRASTRUCTURE = "infrastructure"


@dataclass(frozen=True)
class Certificate:
    subject_cn: str
    san: tuple[str, ...]
    issuer: str
    valid: bool = True

    def names(self) -> tuple[str, ...]:
        return self.san + (self.subject_cn,)


@dataclass
class Host:
    id: str
    role: Role
    segment: str
    address: str
    trust_store: set[str] = field(default_factory=lambda: {PUBLIC_ROOT})
    dns_cache: dict[str, str] = field(default_factory=dict)
    compromised: bool = False
    anti_arp_spoofing: bool = False
    gateway: str | None = None


@dataclass(frozen=True)
class Override:
    id: int
    actor: str
    kind: str  # "dns" | "route"
    target: str
    mapping: tuple[tuple[str, str], ...]


class Action(enum.Enum):
    PASS = "pass"
    DROP = "drop"
    COPY = "copy"  # pass unchanged, attacker keeps a copy


@dataclass(frozen=True)
class Modify:
    message: dict


@dataclass(frozen=True)
class ChannelSelector:
    client_host: str
    server_name: str | None = None
    kind: str | None = None
    direction: str | None = None  # "request" | "response"

    def matches(self, channel: "Channel", direction: str) -> bool:
        return (
            self.client_host == channel.client_host
            and (self.server_name is None or self.server_name == channel.name)
            and (self.kind is None or self.kind == channel.kind)
            and (self.direction is None or self.direction == direction)
        )


Handler = Callable[[dict, "InterceptContext"], "Action | Modify | None"]


@dataclass
class Interceptor:
    selector: ChannelSelector
    handler: Handler
    label: str = "interceptor"


@dataclass(frozen=True)
class InterceptContext:
    channel: "Channel"
    direction: str
    op: str | None = None  # the request's op, also set on responses


class Service(Protocol):
    def __call__(self, message: dict, peer: str) -> dict: ...


@dataclass
class _Listener:
    service: Service
    certificate: Certificate | None


# -- wire format ----------------------------------------------------------

def encode_frame(message: dict) -> bytes:
    body = canonical_json(message)
    return struct.pack(">I", len(body)) + body


def decode_frame(frame: bytes) -> dict:
    if len(frame) < 4:
        raise ParseError("short frame")
    (n,) = struct.unpack(">I", frame[:4])
    body = frame[4:]
    if len(body) != n:
        raise ParseError(f"frame length {n} does not match body length {len(body)}")
    msg = json.loads(body.decode("utf-8"))
    if not isinstance(msg, dict):
        raise ParseError("frame body is not an object")
    return msg


# -- name matching --------------------------------------------------------

def dns_pattern_matches(pattern: str, name: str) -> bool:
    """Exact match, or ``*.x`` matching any name with one or more labels before ``x``."""
    pattern, name = pattern.lower(), name.lower()
    if pattern.startswith("*."):
        return name.endswith(pattern[1:]) and len(name) > len(pattern) - 1
    return pattern == name


def cert_name_matches(pattern: str, name: str) -> bool:
    """TLS rules: a leading wildcard covers exactly one label."""
    pattern, name = pattern.lower(), name.lower()
    if pattern.startswith("*."):
        head, _, rest = name.partition(".")
        return bool(head) and rest == pattern[2:]
    return pattern == name


def _specificity(pattern: str) -> tuple[int, int]:
    return (0, 0) if not pattern.startswith("*.") else (1, -len(pattern))


class Channel:
    def __init__(
        self,
        fabric: "Fabric",
        *,
        client_host: str,
        server_host: str,
        name: str,
        port: int | str,
        kind: str,
        listener: _Listener,
        trusted: bool,
        warnings: list[str],
        on_path: list[str],
    ) -> None:
        self.fabric = fabric
        self.client_host = client_host
        self.server_host = server_host
        self.name = name
        self.port = port
        self.kind = kind
        self._listener = listener
        self.trusted = trusted
        self.warnings = warnings
        self.on_path = on_path

    @property
    def certificate(self) -> Certificate | None:
        return self._listener.certificate

    def describe(self) -> dict:
        return {"client": self.client_host, "server": self.server_host, "name": self.name,
                "port": self.port, "kind": self.kind}

    def request(self, message: dict) -> dict:
        fab = self.fabric
        msg = fab._through_interceptors(self, "request", decode_frame(encode_frame(message)))
        fab.clock.advance()
        fab.transcript.emit(self.client_host, "net.message", {
            **self.describe(), "direction": "request", "op": msg.get("op"),
        })
        try:
            response = self._listener.service(msg, self.client_host)
        except PasskeyLabError as exc:
            response = {"error": exc.code, "detail": str(exc)}
        response = fab._through_interceptors(self, "response", decode_frame(encode_frame(response)), msg.get("op"))
        fab.clock.advance()
        fab.transcript.emit(self.server_host, "net.message", {
            **self.describe(), "direction": "response", "op": msg.get("op"), "error": response.get("error"),
        })
        if response.get("error"):
            raise error_from_code(response["error"], response.get("detail", ""))
        return response


class Fabric:
    def __init__(self, transcript: Transcript | None = None) -> None:
        self.transcript = transcript or Transcript()
        self.hosts: dict[str, Host] = {}
        self.dns: dict[str, str] = {}
        self.overrides: list[Override] = []
        self.interceptors: list[tuple[int, str, Interceptor]] = []
        self.listeners: dict[tuple[str, int | str], _Listener] = {}
        self.proximity: set[frozenset[str]] = set()
        self.pairings: set[tuple[str, str]] = set()
        self._ids = itertools.count(1)

    @property
    def clock(self):
        return self.transcript.clock

    def _emit(self, actor: str, kind: str, payload: dict) -> None:
        self.transcript.emit(actor, kind, payload)

    # -- topology ---------------------------------------------------------

    def add_host(self, host_id: str, role: Role | str, segment: str, address: str, **kw: Any) -> Host:
        host = Host(host_id, Role(role), segment, address, **kw)
        self.hosts[host_id] = host
        self._emit(host_id, "fabric.host", {
            "host": host_id, "role": host.role.value, "segment": segment, "address": address,
            "anti_arp_spoofing": host.anti_arp_spoofing,
        })
        return host

    def host(self, host_id: str) -> Host:
        try:
            return self.hosts[host_id]
        except KeyError:
            raise ConnectionRefused(f"no host {host_id!r}") from None

    def host_at(self, address: str) -> Host | None:
        for h in self.hosts.values():
            if h.address == address:
                return h
        return None

    def add_dns_record(self, name: str, address: str) -> None:
        self.dns[name.lower()] = address

    def listen(self, host_id: str, port: int | str, service: Service, certificate: Certificate | None = None) -> None:
        self.listeners[(host_id, port)] = _Listener(service, certificate)

    def set_proximity(self, a: str, b: str, in_range: bool = True) -> None:
        pair = frozenset((a, b))
        if in_range:
            self.proximity.add(pair)
        else:
            self.proximity.discard(pair)

    def compromise(self, actor: str, target: str) -> None:
        """Record a malware foothold on ``target``; every privileged op depends on it."""
        self.host(target).compromised = True
        self._emit(actor, "fabric.compromise", {"target": target})

    # -- position ---------------------------------------------------------

    def on_path(self, actor: str, target: str) -> bool:
        return any(o.kind == "route" and o.actor == actor and o.target == target for o in self.overrides)

    def require_privilege(self, actor: str, target: str, what: str) -> Host:
        host = self.host(target)
        if actor != target and not host.compromised:
            self._emit(actor, "fabric.denied", {"target": target, "op": what, "error": "PrivilegeError"})
            raise PrivilegeError(f"{actor} cannot {what} on uncompromised host {target}")
        return host

    # -- overrides ----------------------------------------------------------

    def apply_override(self, actor_host: str, kind: str, mapping: dict) -> Override:
        actor = self.host(actor_host)
        target = self.host(mapping["target"])
        if kind == "route":
            if actor.segment != target.segment:
                self._deny(actor_host, kind, target.id, "not on the target's segment")
            if target.anti_arp_spoofing:
                self._deny(actor_host, kind, target.id, "target rejects spoofed ARP replies")
            pairs = ((mapping["address"], actor.address),)
        elif kind == "dns":
            if not self.on_path(actor_host, target.id):
                self._deny(actor_host, kind, target.id, "not on the target's resolution path")
            pairs = tuple(sorted(mapping["names"].items()))
        else:
            raise ValueError(f"unknown override kind {kind!r}")
        ov = Override(next(self._ids), actor_host, kind, target.id, pairs)
        self.overrides.append(ov)
        self._emit(actor_host, f"{kind}.override", {
            "override": ov.id, "target": target.id, "mapping": [list(p) for p in pairs],
        })
        return ov

    def _deny(self, actor: str, kind: str, target: str, why: str) -> None:
        self._emit(actor, f"{kind}.override_denied", {"target": target, "reason": why, "error": "PositionRequired"})
        raise PositionRequired(f"{actor}: {why}")

    def remove_override(self, actor_host: str, override: Override) -> None:
        if override.actor != actor_host:
            raise PrivilegeError("only the acting host can remove its override")
        self.overrides = [o for o in self.overrides if o.id != override.id]
        self._emit(actor_host, f"{override.kind}.override_removed", {"override": override.id, "target": override.target})

    # -- names --------------------------------------------------------------

    def resolve_name(self, host_id: str, name: str) -> str:
        if not name:
            raise NameResolutionFailure("empty name")
        host = self.host(host_id)
        name = name.lower()
        if name == "localhost":
            return host.address
        cached = host.dns_cache.get(name)
        if cached is not None:
            self._emit(host_id, "dns.resolve", {"name": name, "address": cached, "source": "cache"})
            return cached
        address, source = None, "base"
        forged = [
            (pattern, addr)
            for o in self.overrides
            if o.kind == "dns" and o.target == host_id and self.on_path(o.actor, host_id)
            for pattern, addr in o.mapping
            if dns_pattern_matches(pattern, name)
        ]
        if forged:
            address, source = min(forged, key=lambda pa: _specificity(pa[0]))[1], "override"
        else:
            base = [(p, a) for p, a in self.dns.items() if dns_pattern_matches(p, name)]
            if base:
                address = min(base, key=lambda pa: _specificity(pa[0]))[1]
        if address is None:
            self._emit(host_id, "dns.resolve", {"name": name, "address": None, "source": "none"})
            raise NameResolutionFailure(name)
        host.dns_cache[name] = address
        self._emit(host_id, "dns.resolve", {"name": name, "address": address, "source": source})
        return address

    def flush_dns_cache(self, actor_host: str, target_host: str) -> None:
        host = self.require_privilege(actor_host, target_host, "flush the DNS cache")
        host.dns_cache.clear()
        self._emit(actor_host, "dns.flush", {"target": target_host})

    # -- trust --------------------------------------------------------------

    def install_trust_anchor(self, actor_host: str, target_host: str, anchor: str) -> None:
        host = self.require_privilege(actor_host, target_host, "install a trust anchor")
        already = anchor in host.trust_store
        host.trust_store.add(anchor)
        self._emit(actor_host, "trust.install", {"target": target_host, "anchor": anchor, "already_present": already})

    def certificate_problems(self, host_id: str, cert: Certificate | None, name: str) -> list[str]:
        if cert is None:
            return ["no certificate presented"]
        problems = []
        if cert.issuer not in self.host(host_id).trust_store:
            problems.append(f"issuer {cert.issuer} is not a trusted anchor")
        if not any(cert_name_matches(p, name) for p in cert.names()):
            problems.append(f"certificate does not cover {name}")
        if not cert.valid:
            problems.append("certificate is not valid")
        return problems

    # -- channels -----------------------------------------------------------

    def establish_channel(
        self,
        client_host: str,
        name: str,
        port: int = 443,
        tls: bool = True,
        *,
        allow_untrusted: bool = False,
    ) -> Channel:
        client = self.host(client_host)
        address = self.resolve_name(client_host, name)
        server = self.host_at(address)
        listener = self.listeners.get((server.id, port)) if server else None
        if server is None or listener is None:
            self._emit(client_host, "net.connect", {"name": name, "address": address, "error": "ConnectionRefused"})
            raise ConnectionRefused(f"{name}:{port}")
        on_path = []
        if server.segment != client.segment and client.gateway is not None:
            on_path = sorted(o.actor for o in self.overrides
                             if o.kind == "route" and o.target == client_host and (o.mapping[0][0] == client.gateway))
        warnings = self.certificate_problems(client_host, listener.certificate, name) if tls else []
        self._emit(client_host, "net.connect", {
            "name": name, "address": address, "server": server.id, "port": port, "tls": tls,
            "trusted": tls and not warnings, "on_path": on_path, "error": "TlsUntrusted" if warnings and not allow_untrusted else None,
        })
        if warnings and not allow_untrusted:
            raise TlsUntrusted(f"{name}: " + "; ".join(warnings))
        return Channel(
            self, client_host=client_host, server_host=server.id, name=name, port=port,
            kind="https" if tls else "http", listener=listener, trusted=tls and not warnings,
            warnings=warnings, on_path=on_path,
        )

    def pair_bluetooth(self, authenticator_host: str, peer_host: str) -> None:
        if frozenset((authenticator_host, peer_host)) not in self.proximity:
            self._emit(peer_host, "bt.pair", {"authenticator": authenticator_host, "error": "PositionRequired"})
            raise PositionRequired(f"{peer_host} is not in radio range of {authenticator_host}")
        self.pairings.add((authenticator_host, peer_host))
        self._emit(peer_host, "bt.pair", {"authenticator": authenticator_host, "error": None})

    def ctap_channel(self, client_host: str, authenticator_host: str | None = None) -> Channel:
        auth_host = authenticator_host or client_host
        if auth_host == client_host:
            kind = "ctap"
        elif (auth_host, client_host) in self.pairings:
            kind = "hybrid"
        else:
            raise ConnectionRefused(f"{client_host} has no pairing with {auth_host}")
        listener = self.listeners.get((auth_host, CTAP_PORT))
        if listener is None:
            raise ConnectionRefused(f"no authenticator on {auth_host}")
        return Channel(
            self, client_host=client_host, server_host=auth_host, name=f"ctap:{auth_host}", port=CTAP_PORT,
            kind=kind, listener=listener, trusted=True, warnings=[], on_path=[],
        )

    # -- interception -------------------------------------------------------

    def register_interceptor(self, actor_host: str, interceptor: Interceptor) -> int:
        sel = interceptor.selector
        target = self.host(sel.client_host)
        if sel.client_host == actor_host:
            position = "own"
        elif target.compromised:
            position = "local"
        elif sel.kind in ("http", "https") and self.on_path(actor_host, sel.client_host):
            position = "on_path"
        else:
            self._emit(actor_host, "fabric.interceptor_denied", {
                "target": sel.client_host, "kind": sel.kind, "error": "PositionRequired",
            })
            raise PositionRequired(f"{actor_host} has no position on {sel.client_host}'s {sel.kind or 'any'} traffic")
        handle = next(self._ids)
        self.interceptors.append((handle, actor_host, interceptor))
        self._emit(actor_host, "fabric.interceptor", {
            "handle": handle, "target": sel.client_host, "kind": sel.kind, "server": sel.server_name,
            "position": position, "label": interceptor.label,
        })
        return handle

    def remove_interceptor(self, actor_host: str, handle: int) -> None:
        self.interceptors = [t for t in self.interceptors if not (t[0] == handle and t[1] == actor_host)]
        self._emit(actor_host, "fabric.interceptor_removed", {"handle": handle})

    def _through_interceptors(self, channel: Channel, direction: str, msg: dict, op: str | None = None) -> dict:
        op = op if op is not None else msg.get("op")
        for handle, actor, icp in list(self.interceptors):
            if not icp.selector.matches(channel, direction):
                continue
            result = icp.handler(msg, InterceptContext(channel, direction, op))
            if result is None:
                result = Action.PASS
            if isinstance(result, Modify):
                msg = decode_frame(encode_frame(result.message))
                action = "modify"
            else:
                action = result.value
            self._emit(actor, "fabric.intercept", {
                "handle": handle, "label": icp.label, **channel.describe(), "direction": direction,
                "op": op, "action": action,
            })
            if result is Action.DROP:
                raise MessageDropped(f"{icp.label} dropped a {direction}")
        return msg
