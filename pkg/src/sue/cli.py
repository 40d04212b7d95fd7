"""Command-line entry point.

Subcommands:
  serve    run the live gateway (`/ingest` + `/console`)
  replay   replay a scenario file, optionally serving consoles
  validate check a scenario file and report diagnostics
  check    parse a rule file and report diagnostics
  dump     run a scenario offline and export analytics summaries as JSON

Log level comes from the SUE_LOG environment variable (default INFO).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
import time
from pathlib import Path

from .gateway import Hub, ScenarioError, create_app, load_scenario, replay
from .model import BeliefThresholds, DEFAULT_THRESHOLDS, canonical_json
from .rules import RuleParseError, parse_rules

logger = logging.getLogger(__name__)


def _setup_logging() -> None:
    level = os.environ.get("SUE_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _load_ruleset(path: str):
    try:
        return parse_rules(Path(path).read_text(encoding="utf-8"))
    except RuleParseError as exc:
        for d in exc.diagnostics:
            print(f"{path}:{d}", file=sys.stderr)
        raise SystemExit(1)


def _thresholds(arg: str | None) -> BeliefThresholds:
    if not arg:
        return DEFAULT_THRESHOLDS
    try:
        s, m, w = (float(x) for x in arg.split(","))
        return BeliefThresholds(strong=s, medium=m, weak=w)
    except ValueError as exc:
        print(f"bad --thresholds value: {exc}", file=sys.stderr)
        raise SystemExit(1)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    ruleset = _load_ruleset(args.rules)
    hub = Hub(
        ruleset,
        thresholds=_thresholds(args.thresholds),
        tick_ms=args.tick_ms,
        epoch_ms=int(time.time() * 1000),
    )
    app = create_app(hub, mode="live")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    ruleset = _load_ruleset(args.rules)
    try:
        scenario = load_scenario(Path(args.scenario))
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"{args.scenario}: {d}", file=sys.stderr)
        return 1
    hub = Hub(
        ruleset,
        thresholds=_thresholds(args.thresholds),
        tick_ms=args.tick_ms,
        epoch_ms=scenario.epoch_ms,
    )
    speed = float("inf") if args.fast else args.speed

    if args.port is None:
        collected = asyncio.run(
            replay(hub, scenario, speed=1.0 if args.fast else args.speed, fast=args.fast,
                   emit=lambda e: print(e.to_json()))
        )
        logger.info("replayed %d entries, %d broadcasts", len(scenario.entries), len(collected))
        return 0

    import uvicorn

    app = create_app(hub, mode="replay")

    async def _run() -> None:
        config = uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
        server = uvicorn.Server(config)
        server_task = asyncio.create_task(server.serve())
        while not server.started:
            await asyncio.sleep(0.05)
        broadcaster = app.state.broadcaster
        await replay(hub, scenario, speed=args.speed, fast=args.fast,
                     emit=lambda e: broadcaster.publish(e.to_json()))
        logger.info("replay finished; consoles stay connected (ctrl-c to stop)")
        await server_task

    asyncio.run(_run())
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(Path(args.scenario))
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"{args.scenario}: {d}")
        return 1
    print(f"{args.scenario}: ok ({len(scenario.entries)} entries)")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    try:
        rs = parse_rules(Path(args.rules).read_text(encoding="utf-8"))
    except RuleParseError as exc:
        for d in exc.diagnostics:
            print(f"{args.rules}:{d}")
        return 1
    print(f"{args.rules}: ok ({len(rs.fluents)} fluents, {len(rs.rules)} rules)")
    return 0


def cmd_dump(args: argparse.Namespace) -> int:
    from .gateway import replay_collect

    ruleset = _load_ruleset(args.rules) if args.rules else parse_rules("")
    try:
        scenario = load_scenario(Path(args.scenario))
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"{args.scenario}: {d}", file=sys.stderr)
        return 1
    hub = Hub(ruleset, thresholds=_thresholds(args.thresholds), tick_ms=args.tick_ms, epoch_ms=scenario.epoch_ms)
    replay_collect(hub, scenario)
    times = [e.time for e in hub.engine.events.values()]
    t0 = min(times, default=scenario.epoch_ms)
    t1 = max(times, default=scenario.epoch_ms) + 1
    out = {
        "scenario": scenario.name,
        "range": [t0, t1],
        "summary": hub.analytics.summary(t0, t1).to_dict(),
        "timeline": [b.to_dict() for b in hub.analytics.timeline(t0, t1, args.bucket_ms)],
        "complex_events": [ce.to_dict() for ce in hub.engine.complex_events.values()],
    }
    Path(args.out).write_text(canonical_json(out) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sue", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the live gateway")
    p.add_argument("--rules", required=True)
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--thresholds", help="strong,medium,weak (default 0.8,0.5,0.2)")
    p.add_argument("--tick-ms", type=int, default=1000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="replay a scenario file")
    p.add_argument("--rules", required=True)
    p.add_argument("--scenario", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--speed", type=float, default=1.0)
    group.add_argument("--fast", action="store_true", help="as fast as possible")
    p.add_argument("--port", type=int, help="also serve consoles on this port")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--thresholds")
    p.add_argument("--tick-ms", type=int, default=1000)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("validate", help="validate a scenario file")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="check a rule file")
    p.add_argument("--rules", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("dump", help="export analytics for a scenario as JSON")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rules")
    p.add_argument("--thresholds")
    p.add_argument("--tick-ms", type=int, default=1000)
    p.add_argument("--bucket-ms", type=int, default=60_000)
    p.set_defaults(func=cmd_dump)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
