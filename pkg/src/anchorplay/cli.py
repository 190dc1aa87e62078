"""Command-line entry point: ``anchorplay run | compare | trace-check``.

Exit codes:
    0  success
    2  invalid configuration (bad values, unknown keys, bad --set) or malformed event log
    3  hard invariant breached (AnchorPlay exclusion, audit mismatch)
    4  I/O error (missing or unreadable file, unwritable output)
    5  configuration file could not be parsed
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import yaml

from . import __version__
from .audit import LogFormatError, check_trace
from .eventlog import atomic_write_text, write_event_log, write_json
from .scenario import ConfigError, Mode, ScenarioConfig
from .sim import InvariantBreach, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_IO = 4
EXIT_PARSE = 5

OUT_ENV = "ANCHORPLAY_OUT"
DEFAULT_OUT = "anchorplay-out"

log = logging.getLogger("anchorplay")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def load_config_data(path: Path) -> dict[str, Any]:
    """Read a YAML/JSON config file. A run manifest is accepted too."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}", EXIT_IO) from None
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}", EXIT_IO) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise CliError(f"cannot parse config file {path}: {exc}", EXIT_PARSE) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must contain a mapping", EXIT_PARSE)
    if "resolved_config" in data:
        data = data["resolved_config"]
    return data


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    data = json.loads(json.dumps(data))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise CliError(f"--set expects key=value, got {item!r}", EXIT_CONFIG)
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        node = data
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise CliError(f"--set {key}: {part} is not a section", EXIT_CONFIG)
        node[leaf] = value
    return data


def resolve_config(path: Path, overrides: Sequence[str], seed: Optional[int] = None,
                   mode: Optional[str] = None) -> ScenarioConfig:
    data = apply_overrides(load_config_data(path), overrides)
    if seed is not None:
        data["seed"] = seed
    if mode is not None:
        data["mode"] = mode
    try:
        return ScenarioConfig.from_dict(data).validate()
    except ConfigError as exc:
        raise CliError(f"invalid config: {exc}", EXIT_CONFIG) from None


def _out_dir(arg: Optional[str]) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def manifest(command: str, config_path: Path, config: ScenarioConfig, seeds: list[int], out: Path) -> dict:
    return {
        "tool": "anchorplay",
        "version": __version__,
        "command": command,
        "config_path": str(config_path),
        "resolved_config": config.to_dict(),
        "seeds": seeds,
        "out_dir": str(out),
    }


def cmd_run(config_file: Path, overrides: Sequence[str] = (), out_dir: Optional[str] = None,
            seed: Optional[int] = None, mode: Optional[str] = None) -> int:
    config = resolve_config(config_file, overrides, seed, mode)
    out = _out_dir(out_dir)
    try:
        write_json(out / "manifest.json", manifest("run", config_file, config, [config.seed], out))
        try:
            result = run_scenario(config)
        except InvariantBreach as breach:
            write_event_log(out / "events.jsonl", config, breach.events, None)
            write_json(out / "diagnostic.json", {"error": str(breach), "events_logged": len(breach.events)})
            print(f"invariant breach: {breach}", file=sys.stderr)
            return EXIT_INVARIANT
        write_event_log(out / "events.jsonl", config, result.events, result.trace)
        write_json(out / "metrics.json", result.metrics.to_dict())
    except OSError as exc:
        raise CliError(f"cannot write outputs to {out}: {exc}", EXIT_IO) from None
    m = result.metrics
    log.info("%s seed %d: duty %.4f, losses %d, rewards %d, violations %d", config.mode.value, config.seed,
             m.camera_duty_cycle, m.tracking_loss_events, m.rewards_collected, m.exclusion_violations)
    if config.mode is Mode.ANCHORPLAY and m.exclusion_violations:
        print(f"invariant breach: {m.exclusion_violations} exclusion violations", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


COMPARE_COLUMNS = ["seed", "mode", "duty_cycle", "losses", "rewards", "max_concurrent", "pushes_proxy",
                   "violations"]


def compare_rows(config: ScenarioConfig, seeds: Sequence[int]) -> list[dict[str, Any]]:
    rows = []
    for seed in seeds:
        for mode in (Mode.ANCHORPLAY, Mode.BASELINE):
            cfg = ScenarioConfig.from_dict({**config.to_dict(), "seed": seed, "mode": mode.value,
                                            "strict": False})
            m = run_scenario(cfg).metrics
            rows.append({
                "seed": seed, "mode": mode.value, "duty_cycle": m.camera_duty_cycle,
                "losses": m.tracking_loss_events, "rewards": m.rewards_collected,
                "max_concurrent": m.crowding.max_concurrent_per_anchor,
                "pushes_proxy": m.crowding.pushes_proxy, "violations": m.exclusion_violations,
            })
    return rows


def cmd_compare(config_file: Path, seeds: Sequence[int], out_dir: Optional[str] = None,
                overrides: Sequence[str] = ()) -> int:
    config = resolve_config(config_file, overrides)
    seeds = list(seeds) or [config.seed]
    out = _out_dir(out_dir)
    rows = compare_rows(config, seeds)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    try:
        atomic_write_text(out / "compare.csv", buf.getvalue())
        write_json(out / "manifest.json", manifest("compare", config_file, config, seeds, out))
    except OSError as exc:
        raise CliError(f"cannot write outputs to {out}: {exc}", EXIT_IO) from None
    bad = [r["seed"] for r in rows if r["mode"] == Mode.ANCHORPLAY.value and r["violations"]]
    if bad:
        print(f"invariant breach: AnchorPlay exclusion violated on seeds {bad}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_trace_check(events_file: Path, metrics_file: Optional[Path] = None) -> int:
    try:
        report = check_trace(events_file, metrics_file)
    except LogFormatError as exc:
        print(f"malformed event log {events_file}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read {events_file}: {exc}", file=sys.stderr)
        return EXIT_IO
    if not report.ok:
        print(f"trace check failed: {report.first_problem} ({len(report.problems)} problem(s))", file=sys.stderr)
        return EXIT_INVARIANT
    print(f"trace ok: {report.lines} lines")
    return EXIT_OK


def _seed_list(values: Sequence[str]) -> list[int]:
    seeds: list[int] = []
    for v in values:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            lo, dash, hi = part.partition("-")
            if dash and lo:
                seeds.extend(range(int(lo), int(hi) + 1))
            else:
                seeds.append(int(part))
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anchorplay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    run.add_argument("--seed", type=int)
    run.add_argument("--mode", choices=[m.value for m in Mode])
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    cmp_ = sub.add_parser("compare", help="run AnchorPlay and baseline over several seeds")
    cmp_.add_argument("--config", required=True, type=Path)
    cmp_.add_argument("--out")
    cmp_.add_argument("--seed", dest="seeds", action="append", default=[],
                      help="seed, comma list or range like 1-20; repeatable")
    cmp_.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    chk = sub.add_parser("trace-check", help="audit an events.jsonl file")
    chk.add_argument("events", type=Path)
    chk.add_argument("--metrics", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.overrides, args.out, args.seed, args.mode)
        if args.command == "compare":
            try:
                seeds = _seed_list(args.seeds)
            except ValueError:
                raise CliError(f"bad --seed value in {args.seeds}", EXIT_CONFIG) from None
            return cmd_compare(args.config, seeds, args.out, args.overrides)
        return cmd_trace_check(args.events, args.metrics)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
