"""Command-line front end.

Exit codes for ``run``: 0 when the verdict matches the expectation, 2 on a
mismatch, 1 for anything that kept the scenario from running.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigError, PasskeyLabError
from .report import replay, summarize
from .scenarios import REGISTRY, ScenarioConfig, get_scenario, run_scenario
from .verdict import verdict_matches

EXIT_OK, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2


def load_config(name: str | None, path: str | None, seed: int | None, expect: str | None) -> ScenarioConfig:
    doc: dict = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    named = doc.get("scenario")
    if name and named and name != named:
        raise ConfigError(f"--scenario {name} contradicts config scenario {named}")
    name = name or named
    if not name:
        raise ConfigError("no scenario given")
    cfg = get_scenario(name).defaults.merged(doc)
    overrides: dict = {}
    if seed is not None:
        overrides["seed"] = seed
    if expect is not None:
        overrides["expect"] = expect
    return cfg.merged(overrides) if overrides else cfg


def execute(cfg: ScenarioConfig, transcript: str | Path | None) -> tuple[int, str, str]:
    spec = get_scenario(cfg.scenario)
    outcome = run_scenario(spec, cfg)
    if transcript is not None:
        outcome.transcript.write(transcript)
    expected = cfg.expect or spec.expected
    code = EXIT_OK if verdict_matches(expected, outcome.verdict) else EXIT_MISMATCH
    return code, outcome.verdict, expected


def _run_default(args: tuple[str, str, int]) -> tuple[str, int, str, str]:
    name, out_dir, seed = args
    cfg = get_scenario(name).defaults.merged({"seed": seed})
    code, verdict, expected = execute(cfg, Path(out_dir) / f"{name}.jsonl")
    return name, code, verdict, expected


def cmd_run(ns: argparse.Namespace) -> int:
    if ns.all:
        out_dir = Path(ns.out_dir or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        jobs = [(name, str(out_dir), ns.seed if ns.seed is not None else 1) for name in REGISTRY]
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_run_default, jobs))
        worst = EXIT_OK
        for name, code, verdict, expected in results:
            print(f"{name}: {verdict} (expected {expected}) {'ok' if code == EXIT_OK else 'MISMATCH'}")
            worst = max(worst, code)
        return worst

    cfg = load_config(ns.scenario, ns.config, ns.seed, ns.expect)
    code, verdict, expected = execute(cfg, ns.transcript)
    print(f"{cfg.scenario}: {verdict} (expected {expected})")
    return code


def cmd_summarize(ns: argparse.Namespace) -> int:
    report = summarize(ns.transcripts)
    sys.stdout.write(report.render())
    if ns.json:
        Path(ns.json).write_bytes(report.to_json())
    return EXIT_OK


def cmd_replay(ns: argparse.Namespace) -> int:
    verdict = replay(ns.transcript)
    print(verdict)
    if ns.expect is not None and not verdict_matches(ns.expect, verdict):
        return EXIT_MISMATCH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="passkeylab", description="Deterministic FIDO2/WebAuthn attack testbed")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario (or all with --all)")
    run.add_argument("--scenario", help=f"one of: {', '.join(REGISTRY)}")
    run.add_argument("--config", help="JSON config document")
    run.add_argument("--seed", type=int)
    run.add_argument("--transcript", help="write the transcript here")
    run.add_argument("--expect", help="expected verdict; 'blocked' matches any blocked verdict")
    run.add_argument("--all", action="store_true", help="run every registered scenario with its defaults")
    run.add_argument("--out-dir", help="transcript directory for --all")
    run.add_argument("--jobs", type=int, default=None, help="worker processes for --all")
    run.set_defaults(func=cmd_run)

    summ = sub.add_parser("summarize", help="tabulate verdicts from transcripts")
    summ.add_argument("transcripts", nargs="*")
    summ.add_argument("--json", help="also write the machine-readable record here")
    summ.set_defaults(func=cmd_summarize)

    rep = sub.add_parser("replay", help="recompute a verdict from a transcript")
    rep.add_argument("transcript")
    rep.add_argument("--expect")
    rep.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except PasskeyLabError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - any crash is an internal error, not a verdict
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
