"""Offline analysis of transcript files: verdict replay, summary tables, capability audit."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError
from .scenarios import REGISTRY, TABLE1_CRITERIA
from .transcript import TranscriptEvent, canonical_json, read_transcript
from .verdict import derive_verdict, verdict_matches


def _checked(events: list[TranscriptEvent], path) -> list[TranscriptEvent]:
    if events[0].kind != "scenario.start":
        raise ParseError(f"{path}: first event is {events[0].kind!r}, not scenario.start")
    if events[-1].kind != "scenario.end":
        raise ParseError(f"{path}: transcript ends without scenario.end (truncated?)")
    return events


def replay(path: str | Path) -> str:
    """Recompute the verdict of a transcript file from its events only."""
    return derive_verdict(_checked(read_transcript(path), path))


def config_label(scenario: str, config: dict) -> str:
    """Describe a run by how its config departs from the scenario defaults."""
    spec = REGISTRY.get(scenario)
    if spec is None:
        return "custom"
    base = spec.defaults.to_dict()
    diffs = []
    if config.get("variant") != base["variant"]:
        diffs.append(f"variant={config.get('variant')}")
    for group in ("toggles", "policy"):
        for key, value in sorted(config.get(group, {}).items()):
            if base[group].get(key) != value:
                diffs.append(f"{key}={str(value).lower() if isinstance(value, bool) else value}")
    return ",".join(diffs) or "default"


@dataclass(frozen=True)
class RunRow:
    scenario: str
    config: str
    seed: int
    verdict: str
    recorded: str
    expected: str | None

    @property
    def consistent(self) -> bool:
        return self.verdict == self.recorded

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario, "config": self.config, "seed": self.seed,
            "verdict": self.verdict, "recorded": self.recorded, "expected": self.expected,
        }


@dataclass
class SummaryReport:
    runs: list[RunRow]
    table1: dict[str, dict[str, str]] = field(default_factory=dict)
    ablations: dict[str, dict[str, list[str]]] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "runs": [r.to_dict() for r in self.runs],
            "ablations": self.ablations,
            "table1": self.table1,
        }

    def to_json(self) -> bytes:
        return canonical_json(self.to_record()) + b"\n"

    def render(self) -> str:
        out = ["Scenario verdicts"]
        out += _table(
            ("scenario", "config", "seed", "verdict", "expected"),
            [(r.scenario, r.config, str(r.seed), r.verdict, r.expected or "-") for r in self.runs],
        )
        out += ["", "Ablation matrix"]
        out += _table(
            ("scenario", "config", "verdicts"),
            [(s, c, " ".join(sorted(set(v)))) for s, row in self.ablations.items() for c, v in row.items()],
        )
        out += ["", "Overview of the attacks"]
        out += _table(
            ("attack",) + TABLE1_CRITERIA,
            [(abbrev,) + tuple(labels[c] for c in TABLE1_CRITERIA) for abbrev, labels in self.table1.items()],
        )
        return "\n".join(out) + "\n"


def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> list[str]:
    rows = [tuple(header)] + [tuple(r) for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]


def summarize(paths: Sequence[str | Path]) -> SummaryReport:
    if not paths:
        raise ParseError("no transcripts to summarize")
    runs = []
    for path in paths:
        events = _checked(read_transcript(path), path)
        start, end = events[0].payload, events[-1].payload
        scenario = start["scenario"]
        cfg = start["config"]
        spec = REGISTRY.get(scenario)
        expected = cfg.get("expect") or (spec.expected if spec else None)
        runs.append(RunRow(scenario, config_label(scenario, cfg), cfg.get("seed", 0),
                           derive_verdict(events), end["verdict"], expected))
    runs.sort(key=lambda r: (r.scenario, r.config != "default", r.config, r.seed))

    ablations: dict[str, dict[str, list[str]]] = defaultdict(dict)
    for r in runs:
        ablations[r.scenario].setdefault(r.config, []).append(r.verdict)

    present = {REGISTRY[r.scenario].abbrev for r in runs if r.scenario in REGISTRY}
    table1 = {spec.abbrev: dict(spec.table1) for spec in REGISTRY.values() if spec.abbrev and spec.abbrev in present}
    return SummaryReport(runs, table1, dict(ablations))


def all_expected(report: SummaryReport) -> bool:
    return all(r.expected is None or verdict_matches(r.expected, r.verdict) for r in report.runs)


def audit_capabilities(events: Iterable[TranscriptEvent]) -> list[str]:
    """Replay privileged fabric mutations against the position rules.

    Returns one line per mutation the acting host had no right to perform.
    """
    hosts: dict[str, dict] = {}
    compromised: set[str] = set()
    routes: dict[int, tuple[str, str]] = {}
    violations = []

    def may_touch(actor: str, target: str) -> bool:
        return actor == target or target in compromised

    def on_path(actor: str, target: str) -> bool:
        return (actor, target) in routes.values()

    for ev in events:
        p, actor = ev.payload, ev.actor
        bad = None
        if ev.kind == "fabric.host":
            hosts[p["host"]] = p
        elif ev.kind == "fabric.compromise":
            compromised.add(p["target"])
        elif ev.kind == "route.override":
            a, t = hosts.get(actor, {}), hosts.get(p["target"], {})
            if a.get("segment") != t.get("segment") or t.get("anti_arp_spoofing"):
                bad = "route override without segment access"
            routes[p["override"]] = (actor, p["target"])
        elif ev.kind == "route.override_removed":
            routes.pop(p["override"], None)
        elif ev.kind == "dns.override" and not on_path(actor, p["target"]):
            bad = "dns override while not on path"
        elif ev.kind in ("dns.flush", "trust.install", "attacker.infect_authenticator",
                         "attacker.patch_fido_library") and not may_touch(actor, p["target"]):
            bad = f"{ev.kind} on a host the actor does not control"
        elif ev.kind == "fabric.interceptor":
            pos, target = p["position"], p["target"]
            ok = {
                "own": actor == target,
                "local": target in compromised,
                "on_path": p["kind"] in ("http", "https") and on_path(actor, target),
            }.get(pos, False)
            if not ok:
                bad = f"interceptor with unearned position {pos}"
        if bad:
            violations.append(f"seq {ev.seq}: {actor} -> {p.get('target')}: {bad}")
    return violations
