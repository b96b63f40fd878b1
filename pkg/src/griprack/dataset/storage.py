"""On-disk dataset layout.

    root/
      manifest.json
      <robotId>/<episodeId>/
        episode.json     episode record: pushes, frame index, rope checkpoint ref
        actions.jsonl    every accepted motion command, one JSON per line
        rejected.jsonl   rejected candidates (sidecar; not robot actions)
        rope_final.json  simulator rope particles at episode end (replay oracle)
        top/000001.jpg serial-numbered frames, lexicographic == time order
        bottom/000001.jpg

Frame payloads are stored exactly as served.  Episodes are written into
a hidden temp directory and renamed on commit, so interrupted episodes
never leave a partial directory behind.  The manifest's size field
counts every byte under root except manifest.json itself.
"""

from __future__ import annotations

import json
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1


@dataclass
class PushAction:
    robotId: str
    episodeId: str
    indexInEpisode: int
    startXY: tuple[float, float]       # normalized workspace coordinates
    endXY: tuple[float, float]
    acceptedTs: float                  # server receipt, monotonic ms
    predictedIntersection: bool

    def as_dict(self) -> dict:
        return {
            "robotId": self.robotId,
            "episodeId": self.episodeId,
            "indexInEpisode": self.indexInEpisode,
            "startXY": list(self.startXY),
            "endXY": list(self.endXY),
            "acceptedTs": self.acceptedTs,
            "predictedIntersection": self.predictedIntersection,
        }


class EpisodeWriter:
    """Writes one episode directory; commit renames it into place."""

    def __init__(self, root: Path, robot_id: str, episode_id: str):
        self.robot_id = robot_id
        self.episode_id = episode_id
        self.final_dir = root / robot_id / episode_id
        self.tmp_dir = root / robot_id / f".tmp_{episode_id}"
        if self.final_dir.exists():
            raise FileExistsError(f"episode {self.final_dir} already exists")
        shutil.rmtree(self.tmp_dir, ignore_errors=True)
        (self.tmp_dir / "top").mkdir(parents=True)
        (self.tmp_dir / "bottom").mkdir(parents=True)
        self._frame_index: dict[str, list] = {"top": [], "bottom": []}
        self._frame_counter = {"top": 0, "bottom": 0}
        self._actions_fh = (self.tmp_dir / "actions.jsonl").open("w")
        self._rejected_fh = (self.tmp_dir / "rejected.jsonl").open("w")
        self._pushes: list[PushAction] = []
        self._command_count = 0
        self.committed = False

    def add_frame(self, view: str, ts_ms: float, payload: bytes) -> str:
        self._frame_counter[view] += 1
        name = f"{view}/{self._frame_counter[view]:06d}.jpg"
        (self.tmp_dir / name).write_bytes(payload)
        self._frame_index[view].append([ts_ms, name])
        return name

    def add_command(self, ts_ms: float, kind: str, params: dict | None = None,
                    waypoints: list | None = None) -> None:
        record = {"ts": ts_ms, "kind": kind, "params": params or {}}
        if waypoints is not None:
            record["waypoints"] = [list(p) for p in waypoints]
        self._actions_fh.write(json.dumps(record) + "\n")
        self._command_count += 1

    def add_push(self, push: PushAction) -> None:
        self._pushes.append(push)

    def add_rejected(self, ts_ms: float, sweep, reason: str) -> None:
        self._rejected_fh.write(json.dumps({
            "ts": ts_ms,
            "start": list(sweep[0]),
            "end": list(sweep[1]),
            "reason": reason,
        }) + "\n")

    def set_rope_final(self, particles: list) -> None:
        (self.tmp_dir / "rope_final.json").write_text(json.dumps({"particles": particles}))

    @property
    def command_count(self) -> int:
        return self._command_count

    def commit(self, start_ts: float, end_ts: float, aborted: bool = False) -> dict:
        record = {
            "episodeId": self.episode_id,
            "robotId": self.robot_id,
            "startTs": start_ts,
            "endTs": end_ts,
            "aborted": aborted,
            "actions": [p.as_dict() for p in self._pushes],
            "commandCount": self._command_count,
            "frameIndex": self._frame_index,
        }
        (self.tmp_dir / "episode.json").write_text(json.dumps(record, indent=1))
        self._actions_fh.close()
        self._rejected_fh.close()
        self.tmp_dir.rename(self.final_dir)
        self.committed = True
        return record

    def discard(self) -> None:
        """Remove the partial directory (I/O failure or hard abort)."""
        self._actions_fh.close()
        self._rejected_fh.close()
        shutil.rmtree(self.tmp_dir, ignore_errors=True)


def tree_size_bytes(root: Path, exclude: tuple[str, ...] = ("manifest.json",)) -> int:
    total = 0
    for path in Path(root).rglob("*"):
        if path.is_file() and path.name not in exclude:
            total += path.stat().st_size
    return total


def write_manifest(root: Path, episodes: list[dict], *, environment: dict,
                   intrinsics: dict, extra: dict | None = None) -> dict:
    """Write manifest.json from committed episode records."""
    root = Path(root)
    live = [e for e in episodes if not e.get("aborted")]
    manifest = {
        "schemaVersion": SCHEMA_VERSION,
        "robotIdentifiers": sorted({e["robotId"] for e in live}),
        "environmentDescription": environment,
        "totalDurationSeconds": sum((e["endTs"] - e["startTs"]) / 1000.0 for e in live),
        "datasetSizeBytes": tree_size_bytes(root),
        "cumulativeMotionCommands": sum(e["commandCount"] for e in live),
        "cameraIntrinsics": intrinsics,
        "episodes": [
            {"robotId": e["robotId"], "episodeId": e["episodeId"], "aborted": bool(e.get("aborted"))}
            for e in episodes
        ],
    }
    if extra:
        manifest.update(extra)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def camera_intrinsics(workspace_mm: tuple[float, float]) -> dict:
    """Synthetic pinhole-style matrices for the orthographic cameras."""
    from griprack.workcell.render import resolution, view_transform

    out = {}
    for view in ("top", "bottom"):
        scale, (off_x, off_y), _ = view_transform(view, workspace_mm)
        width, height = resolution(view)
        out[view] = [
            [scale, 0.0, off_x + workspace_mm[0] * scale / 2.0],
            [0.0, scale, off_y + workspace_mm[1] * scale / 2.0],
            [0.0, 0.0, 1.0],
        ]
    return out


def load_manifest(root: str | Path) -> dict:
    return json.loads((Path(root) / "manifest.json").read_text())


def load_episode(root: str | Path, robot_id: str, episode_id: str) -> dict:
    return json.loads((Path(root) / robot_id / episode_id / "episode.json").read_text())


def load_actions(root: str | Path, robot_id: str, episode_id: str) -> list[dict]:
    path = Path(root) / robot_id / episode_id / "actions.jsonl"
    return [json.loads(line) for line in path.read_text().splitlines() if line]
