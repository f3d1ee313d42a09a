"""Ordered event log and the canonical encodings it relies on."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ParseError


def canonical_json(obj: Any) -> bytes:
    """Key-sorted, whitespace-free UTF-8 JSON."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def b64u(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def unb64u(text: str) -> bytes:
    try:
        return base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad base64url value {text!r}") from exc


class Clock:
    """Simulation time. One tick per delivered frame."""

    def __init__(self) -> None:
        self.now = 0

    def advance(self, n: int = 1) -> int:
        self.now += n
        return self.now


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    tick: int
    actor: str
    kind: str
    payload: dict = field(default_factory=dict)
    step_label: str | None = None

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "tick": self.tick,
            "actor": self.actor,
            "kind": self.kind,
            "step_label": self.step_label,
            "payload": self.payload,
        }

    def to_line(self) -> bytes:
        return canonical_json(self.to_record())

    @classmethod
    def from_record(cls, rec: dict) -> "TranscriptEvent":
        try:
            return cls(
                seq=int(rec["seq"]),
                tick=int(rec["tick"]),
                actor=str(rec["actor"]),
                kind=str(rec["kind"]),
                payload=dict(rec["payload"]),
                step_label=rec["step_label"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed transcript record: {exc}") from exc


class Transcript:
    def __init__(self, clock: Clock | None = None) -> None:
        self.clock = clock or Clock()
        self.events: list[TranscriptEvent] = []

    def emit(self, actor: str, kind: str, payload: dict | None = None, *, step: str | int | None = None) -> TranscriptEvent:
        ev = TranscriptEvent(
            seq=len(self.events),
            tick=self.clock.now,
            actor=actor,
            kind=kind,
            payload=payload or {},
            step_label=None if step is None else str(step),
        )
        # round-trip now so a non-serializable payload fails at the emitting call site
        canonical_json(ev.payload)
        self.events.append(ev)
        return ev

    def of_kind(self, *kinds: str) -> list[TranscriptEvent]:
        return [e for e in self.events if e.kind in kinds]

    def __iter__(self) -> Iterator[TranscriptEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def to_bytes(self) -> bytes:
        return b"".join(e.to_line() + b"\n" for e in self.events)

    def write(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())


def parse_lines(lines: Iterable[bytes | str]) -> list[TranscriptEvent]:
    events = []
    for lineno, raw in enumerate(lines, 1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if not isinstance(rec, dict):
            raise ParseError(f"line {lineno}: record is not an object")
        ev = TranscriptEvent.from_record(rec)
        if canonical_json(rec) != raw.rstrip("\n").encode("utf-8"):
            raise ParseError(f"line {lineno}: record is not canonical")
        if ev.seq != len(events):
            raise ParseError(f"line {lineno}: expected seq {len(events)}, got {ev.seq}")
        events.append(ev)
    if not events:
        raise ParseError("empty transcript")
    return events


def read_transcript(path: str | Path) -> list[TranscriptEvent]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    if data and not data.endswith(b"\n"):
        raise ParseError(f"{path}: truncated (no trailing newline)")
    return parse_lines(data.splitlines())
