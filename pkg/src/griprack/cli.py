"""Command-line entry points.

    griprack rack --config rack.yaml            run a rack until SIGINT
    griprack cell --config rack.yaml --index 3  run one cell (process mode)
    bench stress --rack rack.yaml --fps 10 --phase-secs 30 --out DIR
    bench repeat --rack rack.yaml --axis xy --robots 23 --waypoints 5 --reps 10 --out DIR
    collect --rack rack.yaml --robots 4 --episodes 3 --out DIR
    validate DIR
    replay --dataset DIR --episode EP --rack rack.yaml

`bench`, `collect`, `validate` and `replay` are also installed as
standalone scripts; exit codes are nonzero when a run's embedded
assertions fail.
"""

from __future__ import annotations

import argparse
import signal
import sys
import threading

from griprack.config import load_rack_config


def _cmd_rack(args) -> int:
    from griprack.rack import spawn_rack

    cfg = load_rack_config(args.config)
    rack = spawn_rack(cfg)
    stop = threading.Event()

    def handle(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, handle)
    signal.signal(signal.SIGTERM, handle)
    print(f"rack up: {cfg.robotCount} robots on {cfg.host}:{cfg.basePort}.."
          f"{cfg.basePort + cfg.robotCount - 1}, registry http://{rack.registry_endpoint}/registry",
          flush=True)
    stop.wait()
    rack.stop()
    print("rack stopped", flush=True)
    return 0


def _cmd_cell(args) -> int:
    import copy
    from griprack.server import RobotServer

    cfg = load_rack_config(args.config)
    index = args.index
    per = copy.deepcopy(cfg.perRobot)
    per.kinematics.seed = cfg.robot_seed(index)
    server = RobotServer(cfg.robot_id(index), per, cfg.token,
                         host=cfg.host, port=cfg.robot_port(index))
    server.start()
    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    stop.wait()
    server.stop()
    return 0


def _cmd_bench_stress(args) -> int:
    from griprack.bench.stress import run_stress_cli

    return run_stress_cli(
        rack_config=args.rack,
        registry=args.registry,
        fps=args.fps,
        phase_secs=args.phase_secs,
        min_robots=args.min_robots,
        out_dir=args.out,
    )


def _cmd_bench_repeat(args) -> int:
    from griprack.bench.repeatability import run_repeatability_cli

    return run_repeatability_cli(
        rack_config=args.rack,
        registry=args.registry,
        axis=args.axis,
        robots=args.robots,
        waypoint_sets=args.waypoints,
        reps=args.reps,
        seed=args.seed,
        out_dir=args.out,
    )


def _cmd_collect(args) -> int:
    from griprack.dataset.collect import run_collection_cli

    return run_collection_cli(
        rack_config=args.rack,
        robots=args.robots,
        episodes=args.episodes,
        pushes=args.pushes,
        out_dir=args.out,
        mode=args.mode,
    )


def _cmd_validate(args) -> int:
    from griprack.dataset.validate import validate_cli

    return validate_cli(args.root)


def _cmd_replay(args) -> int:
    from griprack.dataset.replay import replay_cli

    return replay_cli(dataset=args.dataset, episode=args.episode, rack_config=args.rack)


def _add_bench_subparsers(sub):
    stress = sub.add_parser("stress", help="incremental fleet image-load test")
    stress.add_argument("--rack", help="rack config to spawn for the run")
    stress.add_argument("--registry", help="host:port of a running rack registry")
    stress.add_argument("--fps", type=float, default=10.0, help="per-camera request rate")
    stress.add_argument("--phase-secs", type=float, default=30.0)
    stress.add_argument("--min-robots", type=int, default=1,
                        help="first phase size (set to the fleet size to run only the final phase)")
    stress.add_argument("--out", required=True)
    stress.set_defaults(func=_cmd_bench_stress)

    repeat = sub.add_parser("repeat", help="repeatability protocol")
    repeat.add_argument("--rack", help="rack config to spawn for the run")
    repeat.add_argument("--registry", help="host:port of a running rack registry")
    repeat.add_argument("--axis", choices=["xy", "z"], required=True)
    repeat.add_argument("--robots", type=int, default=23)
    repeat.add_argument("--waypoints", type=int, default=5)
    repeat.add_argument("--reps", type=int, default=10)
    repeat.add_argument("--seed", type=int, default=0)
    repeat.add_argument("--out", required=True)
    repeat.set_defaults(func=_cmd_bench_repeat)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="griprack")
    sub = parser.add_subparsers(required=True)

    rack = sub.add_parser("rack", help="run a rack of simulated cells")
    rack.add_argument("--config", required=True)
    rack.set_defaults(func=_cmd_rack)

    cell = sub.add_parser("cell", help="run a single cell (process-per-cell mode)")
    cell.add_argument("--config", required=True)
    cell.add_argument("--index", type=int, required=True)
    cell.set_defaults(func=_cmd_cell)

    bench = sub.add_parser("bench", help="benchmark harnesses")
    _add_bench_subparsers(bench.add_subparsers(required=True))

    collect = sub.add_parser("collect", help="collect a rope-pushing dataset")
    _add_collect_args(collect)

    validate = sub.add_parser("validate", help="validate a dataset directory")
    validate.add_argument("root")
    validate.set_defaults(func=_cmd_validate)

    replay = sub.add_parser("replay", help="replay dataset actions on a fresh rack")
    _add_replay_args(replay)
    return parser


def _add_collect_args(parser):
    parser.add_argument("--rack", default=None,
                        help="rack config; omit to use the built-in collection preset")
    parser.add_argument("--robots", type=int, default=4)
    parser.add_argument("--episodes", type=int, default=3)
    parser.add_argument("--pushes", type=int, default=10)
    parser.add_argument("--mode", choices=["mask", "geometric"], default="mask")
    parser.add_argument("--out", required=True)
    parser.set_defaults(func=_cmd_collect)


def _add_replay_args(parser):
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--episode", default=None, help="episode id; default replays all")
    parser.add_argument("--rack", required=True)
    parser.set_defaults(func=_cmd_replay)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


def bench_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bench")
    _add_bench_subparsers(parser.add_subparsers(required=True))
    args = parser.parse_args(argv)
    return args.func(args)


def collect_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="collect")
    _add_collect_args(parser)
    args = parser.parse_args(argv)
    return args.func(args)


def validate_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="validate")
    parser.add_argument("root")
    parser.set_defaults(func=_cmd_validate)
    args = parser.parse_args(argv)
    return args.func(args)


def replay_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="replay")
    _add_replay_args(parser)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
