"""Command-line entry points: run evaluation tasks, serve the gateway,
and replay saved event logs.

    townsim run --task buy_chicken.task.json --backend scripted-v1
    townsim serve --port 8765 --config-dir ./config --ui frontend/dist
    townsim replay --log out/buy-chicken_seed1.events.jsonl
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine
from .backends import ScriptedBackend
from .errors import TownError
from .evaluation import backend_from_config, build_registry, load_task, run_task
from .world import build_world_map, load_world_config


def _add_run_parser(subparsers):
    p = subparsers.add_parser("run", help="run an evaluation task and write a pass-rate report")
    p.add_argument("--task", required=True, help="task JSON file")
    p.add_argument("--config-dir", help="directory world document paths resolve against (default: the task file's directory)")
    p.add_argument("--backend", help="override the subject agent's backend id")
    p.add_argument("--backends", help="extra backend definitions, JSON file {id: {type, ...}}")
    p.add_argument("--support-backend", help="backend id for model-backed equipment")
    p.add_argument("--seed-base", type=int, help="replace task seeds with base..base+episodes-1")
    p.add_argument("--report", help="report file path (default <task_id>.report.json)")
    p.add_argument("--parallel", type=int, default=1, help="episodes to run in parallel")
    p.add_argument("--logs", help="directory to write per-episode event logs into")


def _add_serve_parser(subparsers):
    p = subparsers.add_parser("serve", help="start the websocket gateway")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--config-dir", required=True, help="directory with equipment.json, economy.json, buildings.json and optional map.json")
    p.add_argument("--backends", help="backend definitions, JSON file {id: {type, ...}}")
    p.add_argument("--token", help="static auth token required from sessions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speed", type=float, default=2.0, help="initial ticks per second")
    p.add_argument("--ui", help="directory of a built browser client to serve at /")


def _add_replay_parser(subparsers):
    p = subparsers.add_parser("replay", help="re-print a saved event log")
    p.add_argument("--log", required=True, help="events JSONL file")


def _cmd_run(args) -> int:
    task = load_task(args.task, args.config_dir)
    if args.seed_base is not None:
        task.seeds = [args.seed_base + i for i in range(task.episodes)]
    if args.backend:
        task.subject().profile.backend_id = args.backend
    extra = {}
    if args.backends:
        extra = json.loads(Path(args.backends).read_text())
    registry = build_registry(task, extra)
    report = run_task(
        task,
        registry,
        support_backend_id=args.support_backend,
        parallel=max(1, args.parallel),
        logs_dir=args.logs,
    )
    for episode in report.episodes:
        status = "PASS" if episode.passed else "FAIL"
        print(
            f"[{status}] {task.task_id} seed={episode.seed} "
            f"ticks={episode.ticks_used} backend_calls={episode.backend_calls}"
        )
    print(f"pass_rate {report.pass_rate} ({report.passes}/{len(report.episodes)})")
    report_path = Path(args.report) if args.report else Path(f"{task.task_id}.report.json")
    report_path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
    print(f"report written to {report_path}")
    return 0


def _load_serve_world(config_dir: Path):
    texts = []
    for name in ("equipment.json", "economy.json", "buildings.json"):
        path = config_dir / name
        if not path.exists():
            raise TownError(f"missing config document: {path}")
        texts.append(path.read_text())
    config = load_world_config(*texts)
    map_path = config_dir / "map.json"
    if map_path.exists():
        map_doc = json.loads(map_path.read_text())
        placements = [
            (p["building_id"], tuple(p["origin"])) for p in map_doc.get("placements", [])
        ]
        world_map = build_world_map(config, map_doc["width"], map_doc["height"], placements)
    else:
        world_map = build_world_map(config, 16, 16, [])
    return config, world_map


def _cmd_serve(args) -> int:
    import uvicorn

    from .gateway import GatewayServer

    config, world_map = _load_serve_world(Path(args.config_dir))
    state = engine.new_sim_state(config, world_map, seed=args.seed)
    runtime = engine.default_runtime()
    if args.backends:
        for backend_id, raw in json.loads(Path(args.backends).read_text()).items():
            runtime.backends.register(backend_id, backend_from_config(raw))
    if "scripted-v1" not in runtime.backends:
        # an out-of-the-box default so UI demos can create agents immediately
        runtime.backends.register("scripted-v1", ScriptedBackend(default_response="ACTION: idle"))
    server = GatewayServer(
        state,
        runtime,
        token=args.token,
        ticks_per_sec=args.speed,
        ui_dir=args.ui,
    )
    print(f"gateway on ws://{args.host}:{args.port}/ws")
    uvicorn.run(server.app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_replay(args) -> int:
    path = Path(args.log)
    if not path.exists():
        raise TownError(f"no such log file: {path}")
    events = engine.events_from_jsonl(path.read_text())
    for event in events:
        payload = json.dumps(event.payload, separators=(",", ":"))
        print(f"[tick {event.tick} #{event.seq}] {event.actor} {event.kind} {payload}")
    print(f"{len(events)} events", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="townsim", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(subparsers)
    _add_serve_parser(subparsers)
    _add_replay_parser(subparsers)
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "replay":
            return _cmd_replay(args)
    except TownError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
