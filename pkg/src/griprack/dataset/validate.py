"""Dataset validator.

Checks every recorded invariant of a collection: directory layout,
frame resolutions (from the JPEG headers), per-camera frame spacing,
push pacing, action-log monotonicity, that every executed push's swept
band overlaps the rope mask of the frame nearest its acceptance, and
that the manifest aggregates are recomputable from the episodes.
Violations come back as an itemized list; an empty list means the
dataset is clean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from griprack.config import WorkcellConfig
from griprack.dataset.sampling import mask_from_frame
from griprack.dataset.storage import load_actions, load_episode, load_manifest, tree_size_bytes
from griprack.workcell.render import sweep_band_mask

FRAME_SPACING_MS = (90.0, 110.0)
PUSH_GAP_MS = (1500.0, 3000.0)
RESOLUTIONS = {"top": (1280, 720), "bottom": (640, 480)}


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.path}: {self.message}"


def jpeg_dimensions(path: Path) -> tuple[int, int] | None:
    """(width, height) from the JPEG SOF header, without decoding."""
    data = path.read_bytes()
    if len(data) < 4 or data[:2] != b"\xff\xd8":
        return None
    i = 2
    while i + 4 <= len(data):
        if data[i] != 0xFF:
            return None
        marker = data[i + 1]
        if marker in (0xD8, 0x01) or 0xD0 <= marker <= 0xD7:
            i += 2
            continue
        length = int.from_bytes(data[i + 2:i + 4], "big")
        if 0xC0 <= marker <= 0xCF and marker not in (0xC4, 0xC8, 0xCC):
            if i + 9 > len(data):
                return None
            height = int.from_bytes(data[i + 5:i + 7], "big")
            width = int.from_bytes(data[i + 7:i + 9], "big")
            return width, height
        i += 2 + length
    return None


def _workcell_from_manifest(manifest: dict) -> tuple[WorkcellConfig, tuple[float, float]]:
    env = manifest.get("environmentDescription", {})
    cfg = WorkcellConfig(
        floor_mode=env.get("floor_mode", "transparent"),
        lighting=env.get("lighting", 1.0),
        rope_color=tuple(env.get("rope_color", WorkcellConfig.rope_color)),
        floor_color=tuple(env.get("floor_color", WorkcellConfig.floor_color)),
        gripper_color=tuple(env.get("gripper_color", WorkcellConfig.gripper_color)),
        rope_radius_mm=env.get("rope_radius_mm", 2.5),
        footprint_radius_mm=env.get("footprint_radius_mm", 12.0),
    )
    workspace = tuple(env.get("workspace_mm", (190.0, 250.0)))
    return cfg, workspace


def validate_dataset(root: str | Path) -> list[Violation]:
    root = Path(root)
    violations: list[Violation] = []

    def bad(code: str, path, message: str):
        violations.append(Violation(code, str(path), message))

    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        return [Violation("manifest_missing", str(manifest_path), "no manifest.json")]
    try:
        manifest = load_manifest(root)
    except json.JSONDecodeError as exc:
        return [Violation("manifest_unreadable", str(manifest_path), str(exc))]
    for field in ("schemaVersion", "robotIdentifiers", "environmentDescription",
                  "totalDurationSeconds", "datasetSizeBytes",
                  "cumulativeMotionCommands", "cameraIntrinsics", "episodes"):
        if field not in manifest:
            bad("manifest_field_missing", manifest_path, field)
    if violations:
        return violations
    cell_cfg, workspace = _workcell_from_manifest(manifest)
    mask_view = "bottom" if cell_cfg.floor_mode == "transparent" else "top"

    total_commands = 0
    total_duration_ms = 0.0
    for entry in manifest["episodes"]:
        robot_id, episode_id = entry["robotId"], entry["episodeId"]
        ep_dir = root / robot_id / episode_id
        if not ep_dir.is_dir():
            bad("episode_missing", ep_dir, "episode directory not found")
            continue
        try:
            episode = load_episode(root, robot_id, episode_id)
            actions = load_actions(root, robot_id, episode_id)
        except (OSError, json.JSONDecodeError) as exc:
            bad("episode_unreadable", ep_dir, str(exc))
            continue
        if entry["aborted"] or episode.get("aborted"):
            continue  # aborted episodes are excluded from every rate check
        total_commands += episode["commandCount"]
        total_duration_ms += episode["endTs"] - episode["startTs"]

        if episode["commandCount"] != len(actions):
            bad("action_count_mismatch", ep_dir,
                f"episode.json says {episode['commandCount']}, log has {len(actions)}")
        ts_list = [a["ts"] for a in actions]
        for a, b in zip(ts_list, ts_list[1:]):
            if b < a:
                bad("action_ts_not_monotonic", ep_dir / "actions.jsonl",
                    f"{b} after {a}")
                break

        _validate_frames(episode, ep_dir, bad)
        _validate_pushes(episode, ep_dir, root, cell_cfg, workspace, mask_view, bad)

    if total_commands != manifest["cumulativeMotionCommands"]:
        bad("manifest_commands_mismatch", manifest_path,
            f"manifest {manifest['cumulativeMotionCommands']}, episodes sum {total_commands}")
    if abs(total_duration_ms / 1000.0 - manifest["totalDurationSeconds"]) > 0.5:
        bad("manifest_duration_mismatch", manifest_path,
            f"manifest {manifest['totalDurationSeconds']:.3f}s, "
            f"episodes sum {total_duration_ms / 1000.0:.3f}s")
    size = tree_size_bytes(root)
    if manifest["datasetSizeBytes"] and \
            abs(size - manifest["datasetSizeBytes"]) > 0.001 * manifest["datasetSizeBytes"]:
        bad("manifest_size_mismatch", manifest_path,
            f"manifest {manifest['datasetSizeBytes']}, tree {size}")
    return violations


def _validate_frames(episode: dict, ep_dir: Path, bad) -> None:
    for view, expected in RESOLUTIONS.items():
        index = episode["frameIndex"].get(view, [])
        if not index:
            bad("no_frames", ep_dir / view, "camera recorded no frames")
            continue
        names = [name for _, name in index]
        if names != sorted(names):
            bad("frame_name_order", ep_dir / view,
                "lexicographic order differs from timestamp order")
        timestamps = [ts for ts, _ in index]
        for a, b in zip(timestamps, timestamps[1:]):
            if b <= a:
                bad("frame_ts_not_increasing", ep_dir / view, f"{b} after {a}")
                break
            gap = b - a
            if not FRAME_SPACING_MS[0] <= gap <= FRAME_SPACING_MS[1]:
                bad("frame_spacing", ep_dir / view,
                    f"gap {gap:.1f} ms outside [{FRAME_SPACING_MS[0]}, {FRAME_SPACING_MS[1]}]")
                break
        start, end = episode["startTs"], episode["endTs"]
        if timestamps[0] < start or timestamps[-1] > end:
            bad("frame_ts_outside_episode", ep_dir / view,
                "frame timestamps outside [startTs, endTs]")
        for ts, name in index:
            fpath = ep_dir / name
            if not fpath.exists():
                bad("frame_missing", fpath, "file referenced by frameIndex not found")
                continue
            dims = jpeg_dimensions(fpath)
            if dims != expected:
                bad("frame_resolution", fpath, f"{dims} != {expected}")


def _validate_pushes(episode: dict, ep_dir: Path, root: Path, cell_cfg: WorkcellConfig,
                     workspace: tuple[float, float], mask_view: str, bad) -> None:
    pushes = episode["actions"]
    collection = load_manifest(root).get("collection", {})
    max_pushes = collection.get("pushesPerEpisode", 10)
    if len(pushes) > max_pushes:
        bad("too_many_pushes", ep_dir, f"{len(pushes)} > {max_pushes}")
    for i, push in enumerate(pushes):
        if push["indexInEpisode"] != i:
            bad("push_index", ep_dir, f"push {i} has indexInEpisode {push['indexInEpisode']}")
        if not push["predictedIntersection"]:
            bad("push_not_predicted", ep_dir, f"push {i} has predictedIntersection false")
    accepted = [p["acceptedTs"] for p in pushes]
    for a, b in zip(accepted, accepted[1:]):
        gap = b - a
        if not PUSH_GAP_MS[0] <= gap <= PUSH_GAP_MS[1]:
            bad("push_gap", ep_dir,
                f"accepted gap {gap:.0f} ms outside [{PUSH_GAP_MS[0]:.0f}, {PUSH_GAP_MS[1]:.0f}]")
    index = episode["frameIndex"].get(mask_view, [])
    if not index:
        return
    timestamps = np.array([ts for ts, _ in index])
    for i, push in enumerate(pushes):
        nearest = int(np.argmin(np.abs(timestamps - push["acceptedTs"])))
        frame_path = ep_dir / index[nearest][1]
        if not frame_path.exists():
            continue  # already reported as frame_missing
        frame = cv2.imdecode(np.frombuffer(frame_path.read_bytes(), np.uint8),
                             cv2.IMREAD_COLOR)
        if frame is None:
            bad("frame_undecodable", frame_path, "cv2 could not decode")
            continue
        mask = mask_from_frame(frame, cell_cfg)
        sweep_mm = (
            (push["startXY"][0] * workspace[0], push["startXY"][1] * workspace[1]),
            (push["endXY"][0] * workspace[0], push["endXY"][1] * workspace[1]),
        )
        band = sweep_band_mask(sweep_mm, cell_cfg.footprint_radius_mm, mask_view, workspace)
        if not (band & mask).any():
            bad("push_misses_rope_mask", ep_dir,
                f"push {i} band does not overlap the rope mask of {index[nearest][1]}")


def validate_cli(root: str) -> int:
    violations = validate_dataset(root)
    if not violations:
        manifest = load_manifest(root)
        print(f"dataset OK: {len(manifest['episodes'])} episodes, "
              f"{manifest['cumulativeMotionCommands']} commands, zero violations", flush=True)
        return 0
    for v in violations:
        print(str(v), flush=True)
    print(f"{len(violations)} violation(s)", flush=True)
    return 1
