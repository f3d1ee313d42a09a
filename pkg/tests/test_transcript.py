import pytest

from passkeylab.errors import ParseError
from passkeylab.structures import AuthenticatorData, ClientData
from passkeylab.transcript import Transcript, b64u, canonical_json, parse_lines, read_transcript, unb64u


def sample():
    t = Transcript()
    t.emit("victim", "client.navigate", {"url": "https://linear.app/", "z": 1, "a": [1, 2]})
    t.clock.advance()
    t.emit("attacker", "fig2.step", {"what": "x"}, step=3)
    return t


def test_canonical_json():
    assert canonical_json({"b": 1, "a": {"d": None, "c": "é"}}) == '{"a":{"c":"é","d":null},"b":1}'.encode()


def test_lines_are_canonical_and_sequenced():
    data = sample().to_bytes()
    lines = data.splitlines()
    assert lines[0] == (b'{"actor":"victim","kind":"client.navigate","payload":{"a":[1,2],'
                        b'"url":"https://linear.app/","z":1},"seq":0,"step_label":null,"tick":0}')
    assert b'"step_label":"3"' in lines[1] and b'"tick":1' in lines[1]


def test_round_trip(tmp_path):
    t = sample()
    p = tmp_path / "t.jsonl"
    t.write(p)
    assert read_transcript(p) == t.events


def test_truncated_file(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_bytes(sample().to_bytes()[:-5])
    with pytest.raises(ParseError):
        read_transcript(p)


def test_empty_file(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_bytes(b"")
    with pytest.raises(ParseError):
        read_transcript(p)


def test_non_canonical_line_rejected():
    with pytest.raises(ParseError):
        parse_lines([b'{"seq": 0, "tick": 0, "actor": "a", "kind": "k", "payload": {}, "step_label": null}'])


def test_sequence_gap_rejected():
    lines = sample().to_bytes().splitlines()
    with pytest.raises(ParseError):
        parse_lines([lines[1]])


def test_unserializable_payload_fails_at_emit():
    with pytest.raises(TypeError):
        Transcript().emit("a", "k", {"raw": b"bytes"})


def test_b64u():
    assert b64u(b"\xfb\xff") == "-_8"
    assert unb64u("-_8") == b"\xfb\xff"
    with pytest.raises(ParseError):
        unb64u("a")


def test_client_data_serialization_is_fixed():
    cd = ClientData("webauthn.get", "AAAA", "https://linear.app")
    assert cd.serialize() == b'{"challenge":"AAAA","origin":"https://linear.app","type":"webauthn.get"}'


def test_authenticator_data_layout():
    raw = AuthenticatorData(b"\x11" * 32, 0x05, 258).to_bytes()
    assert raw == b"\x11" * 32 + b"\x05" + b"\x00\x00\x01\x02"
    assert AuthenticatorData.from_bytes(raw).sign_count == 258
