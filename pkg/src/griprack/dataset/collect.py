"""Episodic rope-pushing collection over the fleet API.

One collection context per robot: a control loop samples candidate
pushes, rejects those predicted to miss the rope, executes accepted
ones as single waypoint commands (the acceptance receipt timestamps the
push), and paces acceptances into the configured gap window.  Two
recorder threads per robot consume the camera live streams at 10 fps
and write every frame.  Episodes end with the combing reset procedure
and a rope checkpoint for replay validation.
"""

from __future__ import annotations

import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from griprack.bench.client import ApiError, RobotClient
from griprack.config import RackConfig
from griprack.dataset.sampling import accept_candidate, mask_from_frame, sample_push
from griprack.dataset.storage import (
    EpisodeWriter,
    PushAction,
    camera_intrinsics,
    write_manifest,
)
from griprack.workcell.rope import RopeState, plan_reset_sweeps

GAP_LO_MS = 1600.0        # pacing floor between accepted pushes (budget 1500)
MAX_REJECTIONS = 500      # per push slot, then the episode aborts
RESET_COMMAND_BUDGET = 12


class EpisodeAborted(RuntimeError):
    pass


@dataclass
class CollectionParams:
    episodes: int = 3
    pushes: int = 10
    mode: str = "mask"     # "mask" | "geometric"
    seed: int = 0


def dataset_rack_config(robots: int = 4, base_port: int = 9400, seed_base: int = 7000,
                        token: str = "collect-token") -> RackConfig:
    """Rack preset for collection runs.

    The XY profile is raised so a transit plus a sweep always fits the
    push cadence window; everything else is the stock cell.
    """
    cfg = RackConfig(
        robotCount=robots,
        basePort=base_port,
        orchestratorPort=base_port - 1,
        seedBase=seed_base,
        token=token,
    )
    cfg.perRobot.kinematics.v_max = 400.0
    cfg.perRobot.kinematics.a_max = 2000.0
    return cfg


class _Recorder:
    """Pulls one camera's live stream into the episode writer.

    Keeps the most recent frame around so the control loop can reuse it
    (an extra /image request would render under the camera lock and
    jitter the stream cadence).
    """

    def __init__(self, endpoint: str, token: str, view: str, writer: EpisodeWriter):
        self.client = RobotClient(endpoint, token, timeout=10.0)
        self.view = view
        self.writer = writer
        self.stop = threading.Event()
        self.error: Exception | None = None
        self.latest: tuple[float, bytes] | None = None
        self.thread = threading.Thread(target=self._run, name=f"rec-{view}", daemon=True)

    def _run(self):
        try:
            for data, _seq, ts in self.client.stream(self.view):
                self.writer.add_frame(self.view, ts, data)
                self.latest = (ts, data)
                if self.stop.is_set():
                    break
        except Exception as exc:
            self.error = exc

    def frame_after(self, ts_ms: float, timeout: float = 3.0) -> bytes:
        """Newest frame captured at or after ts_ms (waits for the stream)."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            latest = self.latest
            if latest is not None and latest[0] >= ts_ms:
                return latest[1]
            time.sleep(0.01)
        raise EpisodeAborted(f"no {self.view} frame after {ts_ms:.0f} ms")

    def start(self):
        self.thread.start()

    def join(self):
        self.stop.set()
        self.thread.join(timeout=10.0)
        self.client.close()


class RobotCollector:
    def __init__(self, entry: dict, rack_cfg: RackConfig, root: Path,
                 params: CollectionParams, robot_index: int):
        self.entry = entry
        self.robot_id = entry["robotId"]
        self.cfg = rack_cfg
        self.kin = rack_cfg.perRobot.kinematics
        self.cell_cfg = rack_cfg.perRobot.workcell
        self.root = root
        self.params = params
        self.rng = np.random.default_rng([params.seed, robot_index])
        self.client = RobotClient(entry["endpoint"], rack_cfg.token, timeout=60.0)
        self.workspace = tuple(self.kin.workspace_mm)
        self.records: list[dict] = []

    # -- rope state access ---------------------------------------------------

    def _rope_state(self) -> RopeState:
        doc = self.client.rope()
        return RopeState(
            particles=np.asarray(doc["particles"], dtype=float),
            rest_length=doc["restLength"],
            rope_radius=doc["ropeRadius"],
            bounds=self.workspace,
            anchor_index=doc["anchorIndex"],
        )

    def _acceptance_basis(self, top_recorder: "_Recorder | None" = None):
        if self.params.mode == "geometric":
            return self._rope_state()
        if top_recorder is not None:
            data = top_recorder.frame_after(time.monotonic() * 1000.0 - 1.0)
        else:
            data, _ = self.client.image("top")
        frame = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_COLOR)
        if frame is None:
            raise EpisodeAborted("camera frame failed to decode")
        return mask_from_frame(frame, self.cell_cfg)

    # -- motion helpers --------------------------------------------------------

    def _norm(self, point_mm) -> list[float]:
        return [point_mm[0] / self.workspace[0], point_mm[1] / self.workspace[1]]

    def _issue_path(self, writer: EpisodeWriter, path_mm: list) -> dict:
        waypoints = [self._norm(p) for p in path_mm]
        receipt = self.client.run_command("move_xy", waypoints=waypoints, timeout=60.0)
        writer.add_command(receipt["timestamp"], "move_xy", waypoints=waypoints)
        return receipt

    def _reset_rope(self, writer: EpisodeWriter) -> None:
        budget = RESET_COMMAND_BUDGET
        while budget > 0:
            state = self._rope_state()
            _, rakes = plan_reset_sweeps(state, self.cell_cfg.footprint_radius_mm,
                                         max_sweeps=1)
            if not rakes:
                return
            self._issue_path(writer, rakes[0])
            budget -= 1

    # -- episodes -----------------------------------------------------------

    def run_episode(self, episode_index: int) -> dict:
        episode_id = f"episode_{episode_index:03d}"
        writer = EpisodeWriter(self.root, self.robot_id, episode_id)
        recorders = [
            _Recorder(self.entry["endpoint"], self.cfg.token, view, writer)
            for view in ("top", "bottom")
        ]
        top_recorder = recorders[0]
        start_ts = time.monotonic() * 1000.0
        aborted = False
        try:
            for rec in recorders:
                rec.start()
            receipt = self.client.run_command("move_z", {"z": 0.0}, timeout=60.0)
            writer.add_command(receipt["timestamp"], "move_z", {"z": 0.0})
            prev_accept_ts: float | None = None
            for push_idx in range(self.params.pushes):
                basis = self._acceptance_basis(top_recorder)
                sweep = None
                for _ in range(MAX_REJECTIONS):
                    candidate = sample_push(self.rng, self.workspace)
                    if accept_candidate(basis, candidate, self.cell_cfg.footprint_radius_mm,
                                        self.params.mode, workspace_mm=self.workspace):
                        sweep = candidate
                        break
                    writer.add_rejected(time.monotonic() * 1000.0, candidate,
                                        "no_predicted_intersection")
                if sweep is None:
                    raise EpisodeAborted(
                        f"no accepted candidate within {MAX_REJECTIONS} rejections")
                if prev_accept_ts is not None:
                    wait_ms = prev_accept_ts + GAP_LO_MS - time.monotonic() * 1000.0
                    if wait_ms > 0:
                        time.sleep(wait_ms / 1000.0)
                receipt = self._issue_path(writer, [sweep[0], sweep[1]])
                prev_accept_ts = receipt["timestamp"]
                writer.add_push(PushAction(
                    robotId=self.robot_id,
                    episodeId=episode_id,
                    indexInEpisode=push_idx,
                    startXY=tuple(self._norm(sweep[0])),
                    endXY=tuple(self._norm(sweep[1])),
                    acceptedTs=receipt["timestamp"],
                    predictedIntersection=True,
                ))
                self.client.wait_idle(timeout=60.0)
            self._reset_rope(writer)
            writer.set_rope_final(self.client.rope()["particles"])
        except (EpisodeAborted, ApiError, TimeoutError):
            aborted = True
        except OSError:
            for rec in recorders:
                rec.join()
            writer.discard()
            raise
        finally:
            for rec in recorders:
                rec.join()
        io_error = next((rec.error for rec in recorders if isinstance(rec.error, OSError)), None)
        if io_error is not None:
            writer.discard()
            raise io_error
        end_ts = time.monotonic() * 1000.0
        record = writer.commit(start_ts, end_ts, aborted=aborted)
        self.records.append(record)
        return record

    def run(self) -> list[dict]:
        try:
            for episode_index in range(self.params.episodes):
                self.run_episode(episode_index)
        finally:
            self.client.close()
        return self.records


def run_collection(entries: list[dict], rack_cfg: RackConfig, out_dir: str | Path,
                   robots: int, params: CollectionParams) -> dict:
    """Collect episodes on `robots` cells in parallel and write the manifest."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    entries = sorted(entries, key=lambda e: e["robotId"])[:robots]
    if len(entries) < robots:
        raise ValueError(f"need {robots} robots, registry has {len(entries)}")
    collectors = [
        RobotCollector(entry, rack_cfg, root, params, robot_index=i)
        for i, entry in enumerate(entries)
    ]
    threads = [threading.Thread(target=c.run, name=f"collect-{c.robot_id}", daemon=True)
               for c in collectors]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    episodes = [record for c in collectors for record in c.records]
    kin = rack_cfg.perRobot.kinematics
    cell = rack_cfg.perRobot.workcell
    environment = {
        "description": "enclosed work cell, rope anchored at the left workspace edge, "
                       "gripper lowered to the floor plate for planar pushing",
        "workspace_mm": list(kin.workspace_mm),
        "floor_mode": cell.floor_mode,
        "rope_color": list(cell.rope_color),
        "floor_color": list(cell.floor_color),
        "gripper_color": list(cell.gripper_color),
        "lighting": cell.lighting,
        "rope_radius_mm": cell.rope_radius_mm,
        "footprint_radius_mm": cell.footprint_radius_mm,
        "rope_particles": cell.rope_particles,
        "rope_length_mm": cell.rope_length_mm,
        "seed_base": rack_cfg.seedBase,
    }
    return write_manifest(
        root, episodes,
        environment=environment,
        intrinsics=camera_intrinsics(tuple(kin.workspace_mm)),
        extra={
            "collection": {
                "mode": params.mode,
                "episodesPerRobot": params.episodes,
                "pushesPerEpisode": params.pushes,
                "seed": params.seed,
                "acceptGapWindowMs": [1500.0, 3000.0],
            },
        },
    )


def run_collection_cli(rack_config: str | None, robots: int, episodes: int,
                       pushes: int, out_dir: str, mode: str) -> int:
    from griprack.config import load_rack_config
    from griprack.rack.subproc import RackSubprocess

    cfg = load_rack_config(rack_config) if rack_config else dataset_rack_config(robots)
    params = CollectionParams(episodes=episodes, pushes=pushes, mode=mode)
    with tempfile.TemporaryDirectory() as tmp:
        with RackSubprocess(cfg, Path(tmp) / "rack.yaml") as rack:
            manifest = run_collection(rack.registry.list(), cfg, out_dir, robots, params)
    aborted = [e for e in manifest["episodes"] if e["aborted"]]
    print(f"collected {len(manifest['episodes'])} episodes "
          f"({len(aborted)} aborted), {manifest['cumulativeMotionCommands']} commands, "
          f"{manifest['datasetSizeBytes'] / 1e6:.1f} MB", flush=True)
    return 1 if aborted else 0
