import pytest

from passkeylab.errors import (
    ConnectionRefused,
    MessageDropped,
    NameResolutionFailure,
    ParseError,
    PositionRequired,
    PrivilegeError,
    TlsUntrusted,
    UnknownUser,
)
from passkeylab.fabric import (
    Action,
    Certificate,
    ChannelSelector,
    Fabric,
    Interceptor,
    Modify,
    Role,
    cert_name_matches,
    decode_frame,
    dns_pattern_matches,
    encode_frame,
)

PUBLIC = Certificate("linear.app", ("linear.app", "*.linear.app"), "public-root")
ROGUE = Certificate("linear.app", ("linear.app", "*.linear.app"), "rogue-ca")


def echo(message, peer):
    if message.get("op") == "fail":
        raise UnknownUser("x")
    return {"echo": message, "peer": peer}


@pytest.fixture
def fab():
    f = Fabric()
    f.add_host("gateway", Role.INFRASTRUCTURE, "lan", "10.0.0.1")
    f.add_host("victim", Role.VICTIM, "lan", "10.0.0.10", gateway="10.0.0.1")
    f.add_host("attacker", Role.ATTACKER, "lan", "10.0.0.66", gateway="10.0.0.1")
    f.add_host("remote", Role.ATTACKER, "wan", "198.51.100.7")
    f.add_host("rp", Role.RP, "wan", "203.0.113.10")
    f.add_dns_record("linear.app", "203.0.113.10")
    f.add_dns_record("*.linear.app", "203.0.113.10")
    f.listen("rp", 443, echo, PUBLIC)
    f.listen("attacker", 443, echo, ROGUE)
    return f


def labels_oracle(pattern, name, *, tls):
    p, n = pattern.lower().split("."), name.lower().split(".")
    if "" in n:
        return False
    if p[0] != "*":
        return p == n
    rest = p[1:]
    if tls:
        return len(n) == len(rest) + 1 and n[1:] == rest
    return len(n) > len(rest) and n[-len(rest):] == rest


NAMES = ["linear.app", "a.linear.app", "a.b.linear.app", "xlinear.app", "linear.app.evil", "LINEAR.app", "app"]
PATTERNS = ["linear.app", "*.linear.app", "*.app", "a.linear.app"]


@pytest.mark.parametrize("pattern", PATTERNS)
@pytest.mark.parametrize("name", NAMES)
def test_wildcards_against_label_oracle(pattern, name):
    assert dns_pattern_matches(pattern, name) == labels_oracle(pattern, name, tls=False)
    assert cert_name_matches(pattern, name) == labels_oracle(pattern, name, tls=True)


def test_frame_round_trip_and_format():
    frame = encode_frame({"b": 1, "a": "é"})
    assert frame[:4] == len(frame[4:]).to_bytes(4, "big")
    assert frame[4:] == '{"a":"é","b":1}'.encode()
    assert decode_frame(frame) == {"a": "é", "b": 1}


@pytest.mark.parametrize("bad", [b"", b"\0\0", b"\0\0\0\x05{}", b"\0\0\0\x02[]"])
def test_bad_frames(bad):
    with pytest.raises(ParseError):
        decode_frame(bad)


def test_resolution_and_cache(fab):
    assert fab.resolve_name("victim", "linear.app") == "203.0.113.10"
    assert fab.hosts["victim"].dns_cache["linear.app"] == "203.0.113.10"
    with pytest.raises(NameResolutionFailure):
        fab.resolve_name("victim", "nowhere.test")


def test_route_requires_same_segment(fab):
    with pytest.raises(PositionRequired):
        fab.apply_override("remote", "route", {"target": "victim", "address": "10.0.0.1"})


def test_anti_arp_blocks_route(fab):
    fab.hosts["victim"].anti_arp_spoofing = True
    with pytest.raises(PositionRequired):
        fab.apply_override("attacker", "route", {"target": "victim", "address": "10.0.0.1"})


def test_dns_override_requires_on_path(fab):
    spoof = {"target": "victim", "names": {"linear.app": "10.0.0.66"}}
    with pytest.raises(PositionRequired):
        fab.apply_override("attacker", "dns", spoof)
    fab.apply_override("attacker", "route", {"target": "victim", "address": "10.0.0.1"})
    fab.apply_override("attacker", "dns", spoof)
    assert fab.resolve_name("victim", "linear.app") == "10.0.0.66"


def test_forged_record_loses_to_warm_cache(fab):
    fab.resolve_name("victim", "linear.app")
    fab.apply_override("attacker", "route", {"target": "victim", "address": "10.0.0.1"})
    fab.apply_override("attacker", "dns", {"target": "victim", "names": {"linear.app": "10.0.0.66"}})
    assert fab.resolve_name("victim", "linear.app") == "203.0.113.10"


def test_exact_beats_wildcard(fab):
    fab.add_dns_record("api.linear.app", "203.0.113.99")
    assert fab.resolve_name("attacker", "api.linear.app") == "203.0.113.99"
    assert fab.resolve_name("attacker", "x.y.linear.app") == "203.0.113.10"


def test_removing_route_disables_forgery(fab):
    route = fab.apply_override("attacker", "route", {"target": "victim", "address": "10.0.0.1"})
    fab.apply_override("attacker", "dns", {"target": "victim", "names": {"linear.app": "10.0.0.66"}})
    fab.remove_override("attacker", route)
    assert fab.resolve_name("victim", "linear.app") == "203.0.113.10"


def test_privileged_ops_need_compromise(fab):
    with pytest.raises(PrivilegeError):
        fab.flush_dns_cache("attacker", "victim")
    with pytest.raises(PrivilegeError):
        fab.install_trust_anchor("attacker", "victim", "rogue-ca")
    fab.flush_dns_cache("victim", "victim")
    fab.compromise("attacker", "victim")
    fab.install_trust_anchor("attacker", "victim", "rogue-ca")
    assert "rogue-ca" in fab.hosts["victim"].trust_store


def test_tls_trust(fab):
    fab.establish_channel("victim", "linear.app")
    fab.add_dns_record("fake.test", "10.0.0.66")
    with pytest.raises(TlsUntrusted):
        fab.establish_channel("victim", "fake.test")
    ch = fab.establish_channel("victim", "fake.test", allow_untrusted=True)
    assert not ch.trusted and ch.warnings


def test_rogue_ca_makes_forged_cert_trusted(fab):
    fab.compromise("attacker", "victim")
    fab.install_trust_anchor("attacker", "victim", "rogue-ca")
    fab.add_dns_record("sub.linear.app", "10.0.0.66")
    assert fab.establish_channel("victim", "sub.linear.app").trusted


def test_invalid_certificate_untrusted(fab):
    fab.listen("rp", 443, echo, Certificate("linear.app", ("linear.app",), "public-root", valid=False))
    with pytest.raises(TlsUntrusted):
        fab.establish_channel("victim", "linear.app")


def test_no_listener_refused(fab):
    with pytest.raises(ConnectionRefused):
        fab.establish_channel("victim", "linear.app", port=8443)


def test_errors_travel_in_band(fab):
    ch = fab.establish_channel("victim", "linear.app")
    with pytest.raises(UnknownUser):
        ch.request({"op": "fail"})
    assert ch.request({"op": "ok"})["peer"] == "victim"


def test_every_frame_advances_clock(fab):
    ch = fab.establish_channel("victim", "linear.app")
    before = fab.clock.now
    ch.request({"op": "ok"})
    assert fab.clock.now == before + 2


def test_interceptor_positions(fab):
    sel = ChannelSelector("victim", kind="https")
    with pytest.raises(PositionRequired):
        fab.register_interceptor("attacker", Interceptor(sel, lambda m, c: None))
    fab.apply_override("attacker", "route", {"target": "victim", "address": "10.0.0.1"})
    fab.register_interceptor("attacker", Interceptor(sel, lambda m, c: None))
    # CTAP never leaves the host: being on-path is not enough
    with pytest.raises(PositionRequired):
        fab.register_interceptor("attacker", Interceptor(ChannelSelector("victim", kind="ctap"), lambda m, c: None))
    positions = [e.payload["position"] for e in fab.transcript.of_kind("fabric.interceptor")]
    assert positions == ["on_path"]


def test_interceptor_modify_and_drop(fab):
    def rewrite(msg, ctx):
        if ctx.direction == "request":
            return Modify({**msg, "tag": "evil"})
        return Action.PASS

    fab.register_interceptor("attacker", Interceptor(ChannelSelector("attacker"), rewrite))
    ch = fab.establish_channel("attacker", "linear.app")
    assert ch.request({"op": "ok"})["echo"]["tag"] == "evil"
    fab.register_interceptor("attacker", Interceptor(ChannelSelector("attacker", direction="response"),
                                                     lambda m, c: Action.DROP))
    with pytest.raises(MessageDropped):
        ch.request({"op": "ok"})


def test_response_context_carries_request_op(fab):
    seen = []
    fab.register_interceptor("attacker", Interceptor(
        ChannelSelector("attacker", direction="response"), lambda m, c: seen.append(c.op)))
    fab.establish_channel("attacker", "linear.app").request({"op": "login.begin"})
    assert seen == ["login.begin"]


def test_bluetooth_needs_proximity(fab):
    with pytest.raises(PositionRequired):
        fab.pair_bluetooth("victim", "attacker")
    fab.set_proximity("victim", "attacker")
    fab.pair_bluetooth("victim", "attacker")
    fab.listen("victim", "ctap", echo)
    assert fab.ctap_channel("attacker", "victim").kind == "hybrid"


def test_ctap_without_pairing_refused(fab):
    fab.listen("victim", "ctap", echo)
    with pytest.raises(ConnectionRefused):
        fab.ctap_channel("attacker", "victim")


def test_mutations_are_attributed(fab):
    fab.compromise("attacker", "victim")
    fab.apply_override("attacker", "route", {"target": "victim", "address": "10.0.0.1"})
    fab.apply_override("attacker", "dns", {"target": "victim", "names": {"linear.app": "10.0.0.66"}})
    fab.flush_dns_cache("attacker", "victim")
    fab.install_trust_anchor("attacker", "victim", "rogue-ca")
    kinds = {"route.override", "dns.override", "dns.flush", "trust.install"}
    evs = [e for e in fab.transcript if e.kind in kinds]
    assert {e.kind for e in evs} == kinds
    assert all(e.actor == "attacker" and e.payload["target"] == "victim" for e in evs)
