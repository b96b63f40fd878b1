"""Action-log replay.

Replays each robot's recorded motion commands, in order, against a
freshly spawned rack built from the same config (seed-identical cells),
and compares the rope particle positions after each episode's commands
with the recorded checkpoint.  Replay runs with time_scale 0: motion
outcomes are independent of wall pacing by construction, so the match
must be bit-exact.

Episodes of one robot form a causal chain (the noise stream advances
across episodes), so replaying episode k replays the log from the
robot's first episode up through k.
"""

from __future__ import annotations

import copy
import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

from griprack.bench.client import RobotClient
from griprack.config import RackConfig
from griprack.dataset.storage import load_actions, load_manifest
from griprack.rack.subproc import RackSubprocess


@dataclass
class ReplayResult:
    robot_id: str
    episode_id: str
    match: bool
    detail: str = ""


def _episodes_of(manifest: dict, robot_id: str) -> list[dict]:
    return [e for e in manifest["episodes"] if e["robotId"] == robot_id]


def replay_dataset(root: str | Path, rack_cfg: RackConfig,
                   episode: str | None = None) -> list[ReplayResult]:
    """Replay and verify checkpoints; `episode` limits to one episode id."""
    root = Path(root)
    manifest = load_manifest(root)
    replay_cfg = copy.deepcopy(rack_cfg)
    replay_cfg.perRobot.kinematics.time_scale = 0.0
    results: list[ReplayResult] = []
    with tempfile.TemporaryDirectory() as tmp:
        with RackSubprocess(replay_cfg, Path(tmp) / "rack.yaml") as rack:
            entries = {e["robotId"]: e for e in rack.registry.list()}
            for robot_id in manifest["robotIdentifiers"]:
                if robot_id not in entries:
                    results.append(ReplayResult(robot_id, "*", False,
                                                "robot missing from replay rack"))
                    continue
                client = RobotClient(entries[robot_id]["endpoint"], replay_cfg.token,
                                     timeout=60.0)
                try:
                    for ep in _episodes_of(manifest, robot_id):
                        episode_id = ep["episodeId"]
                        for action in load_actions(root, robot_id, episode_id):
                            client.run_command(action["kind"], action.get("params"),
                                               action.get("waypoints"), timeout=60.0)
                        checkpoint_path = root / robot_id / episode_id / "rope_final.json"
                        if ep["aborted"] or not checkpoint_path.exists():
                            continue
                        recorded = json.loads(checkpoint_path.read_text())["particles"]
                        replayed = client.rope()["particles"]
                        match = replayed == recorded
                        detail = "" if match else _first_diff(recorded, replayed)
                        if episode is None or episode_id == episode:
                            results.append(ReplayResult(robot_id, episode_id, match, detail))
                        if episode is not None and episode_id == episode:
                            break
                finally:
                    client.close()
    return results


def _first_diff(a: list, b: list) -> str:
    for i, (pa, pb) in enumerate(zip(a, b)):
        if pa != pb:
            return f"particle {i}: recorded {pa}, replayed {pb}"
    return f"length mismatch: {len(a)} vs {len(b)}"


def replay_cli(dataset: str, episode: str | None, rack_config: str) -> int:
    from griprack.config import load_rack_config

    cfg = load_rack_config(rack_config)
    results = replay_dataset(dataset, cfg, episode)
    failures = [r for r in results if not r.match]
    for r in results:
        status = "OK " if r.match else "FAIL"
        print(f"{status} {r.robot_id}/{r.episode_id} {r.detail}", flush=True)
    print(f"replay: {len(results) - len(failures)}/{len(results)} episodes bit-exact", flush=True)
    return 1 if failures or not results else 0
