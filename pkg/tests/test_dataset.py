import json
import shutil
from pathlib import Path

import numpy as np
import pytest
import scipy.stats

from conftest import free_port_base
from griprack.config import WorkcellConfig
from griprack.dataset.collect import CollectionParams, dataset_rack_config, run_collection
from griprack.dataset.sampling import accept_candidate, mask_from_frame, sample_push
from griprack.dataset.storage import (
    EpisodeWriter,
    PushAction,
    camera_intrinsics,
    load_manifest,
    tree_size_bytes,
    write_manifest,
)
from griprack.dataset.validate import jpeg_dimensions, validate_dataset
from griprack.workcell.render import render, segment_rope
from griprack.workcell.rope import straight_rope

WORKSPACE = (190.0, 250.0)


# -- sampling ---------------------------------------------------------------


def test_sample_uniformity_chi_squared():
    rng = np.random.default_rng(99)
    starts = np.array([sample_push(rng, WORKSPACE)[0] for _ in range(10_000)])
    grid, _, _ = np.histogram2d(starts[:, 0], starts[:, 1], bins=10,
                                range=[[0, WORKSPACE[0]], [0, WORKSPACE[1]]])
    expected = 10_000 / 100
    stat = float(((grid - expected) ** 2 / expected).sum())
    critical = scipy.stats.chi2.ppf(0.99, df=99)
    assert stat < critical, f"chi2 {stat:.1f} >= {critical:.1f}"


def test_sample_determinism():
    a = sample_push(np.random.default_rng(5), WORKSPACE)
    b = sample_push(np.random.default_rng(5), WORKSPACE)
    assert a == b


def test_sample_rejects_zero_length():
    class FakeRng:
        def __init__(self):
            self.calls = 0

        def uniform(self, lo, hi, size):
            self.calls += 1
            if self.calls <= 2:   # first candidate: start == end
                return np.array([50.0, 50.0])
            return np.array([10.0, 120.0])

    start, end = sample_push(FakeRng(), WORKSPACE)
    assert start != end


def test_accept_candidate_modes_agree_on_trivial_cases():
    rope = straight_rope(WORKSPACE)
    cfg = WorkcellConfig()
    img = render("top", None, rope, cfg, WORKSPACE)
    mask = segment_rope(img, cfg)
    crossing = ((80.0, 100.0), (80.0, 160.0))
    far = ((180.0, 240.0), (185.0, 245.0))
    for sweep, expected in ((crossing, True), (far, False)):
        assert accept_candidate(rope, sweep, 12.0, "geometric") is expected
        assert accept_candidate(mask, sweep, 12.0, "mask", workspace_mm=WORKSPACE) is expected


def test_mask_mode_from_encoded_frame():
    # mask survives the JPEG round trip
    import cv2
    rope = straight_rope(WORKSPACE)
    cfg = WorkcellConfig()
    img = render("top", None, rope, cfg, WORKSPACE)
    ok, buf = cv2.imencode(".jpg", img[:, :, ::-1], [cv2.IMWRITE_JPEG_QUALITY, 85])
    frame = cv2.imdecode(buf, cv2.IMREAD_COLOR)
    mask = mask_from_frame(frame, cfg)
    assert accept_candidate(mask, ((80.0, 100.0), (80.0, 160.0)), 12.0, "mask",
                            workspace_mm=WORKSPACE)


# -- storage ------------------------------------------------------------------


def test_episode_writer_layout_and_manifest(tmp_path):
    root = tmp_path / "ds"
    root.mkdir()
    records = []
    for robot in ("robot_00", "robot_01"):
        w = EpisodeWriter(root, robot, "episode_000")
        for i in range(3):
            w.add_frame("top", 1000.0 + i * 100.0, b"\xff\xd8fake")
            w.add_frame("bottom", 1000.0 + i * 100.0, b"\xff\xd8fake")
        for i in range(10):
            w.add_command(1000.0 + i, "move_xy", waypoints=[[0.1, 0.1], [0.2, 0.2]])
            w.add_push(PushAction(robot, "episode_000", i, (0.1, 0.1), (0.2, 0.2),
                                  1000.0 + i, True))
        w.add_command(2000.0, "move_z", {"z": 0.0})
        w.set_rope_final([[1.0, 2.0]])
        records.append(w.commit(900.0, 3000.0))
    manifest = write_manifest(root, records,
                              environment={"workspace_mm": list(WORKSPACE)},
                              intrinsics=camera_intrinsics(WORKSPACE))
    assert (root / "robot_00" / "episode_000" / "top" / "000001.jpg").exists()
    assert (root / "robot_01" / "episode_000" / "actions.jsonl").exists()
    assert manifest["cumulativeMotionCommands"] == 2 * 11
    assert manifest["robotIdentifiers"] == ["robot_00", "robot_01"]
    assert manifest["totalDurationSeconds"] == pytest.approx(2 * 2.1)
    # size excludes the manifest itself
    assert manifest["datasetSizeBytes"] == tree_size_bytes(root)
    names = sorted(p.name for p in (root / "robot_00" / "episode_000" / "top").iterdir())
    assert names == ["000001.jpg", "000002.jpg", "000003.jpg"]


def test_episode_writer_discard_removes_partial(tmp_path):
    root = tmp_path / "ds"
    root.mkdir()
    w = EpisodeWriter(root, "robot_00", "episode_000")
    w.add_frame("top", 1.0, b"x")
    w.discard()
    assert not (root / "robot_00" / "episode_000").exists()
    assert not (root / "robot_00" / ".tmp_episode_000").exists()


def test_jpeg_dimensions_with_padding():
    import cv2
    from griprack.server.encoder import FrameEncoder

    img = np.zeros((720, 1280, 3), dtype=np.uint8)
    enc = FrameEncoder(quality=85, min_bytes=125_000)
    data = enc.encode(img)
    assert len(data) >= 125_000
    tmp = Path("/tmp/_dims_test.jpg")
    tmp.write_bytes(data)
    assert jpeg_dimensions(tmp) == (1280, 720)
    decoded = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_COLOR)
    assert decoded.shape[:2] == (720, 1280)
    tmp.unlink()


# -- end-to-end mini collection ------------------------------------------------


@pytest.fixture(scope="module")
def mini_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("mini") / "ds"
    base = free_port_base(2)
    cfg = dataset_rack_config(robots=2, base_port=base, seed_base=6100)
    cfg.orchestratorPort = base - 1
    from griprack.rack.subproc import RackSubprocess

    with RackSubprocess(cfg, tmp_path_factory.mktemp("cfg") / "rack.yaml") as rack:
        manifest = run_collection(
            rack.registry.list(), cfg, root, robots=2,
            params=CollectionParams(episodes=1, pushes=3, mode="mask", seed=11),
        )
    return root, cfg, manifest


def test_collection_completes(mini_dataset):
    root, cfg, manifest = mini_dataset
    assert len(manifest["episodes"]) == 2
    assert not any(e["aborted"] for e in manifest["episodes"])
    ep = json.loads((root / "robot_00" / "episode_000" / "episode.json").read_text())
    assert len(ep["actions"]) == 3
    assert [p["indexInEpisode"] for p in ep["actions"]] == [0, 1, 2]
    assert all(p["predictedIntersection"] for p in ep["actions"])


def test_collection_validates_clean(mini_dataset):
    root, _, _ = mini_dataset
    violations = validate_dataset(root)
    assert violations == [], "\n".join(str(v) for v in violations)


def test_validator_flags_missing_frame(mini_dataset, tmp_path):
    root, _, _ = mini_dataset
    mutated = tmp_path / "mut1"
    shutil.copytree(root, mutated)
    ep = json.loads((mutated / "robot_00" / "episode_000" / "episode.json").read_text())
    victim = mutated / "robot_00" / "episode_000" / ep["frameIndex"]["top"][5][1]
    victim.unlink()
    # keep the manifest size honest so only the mutation shows up
    manifest = load_manifest(mutated)
    manifest["datasetSizeBytes"] = tree_size_bytes(mutated)
    (mutated / "manifest.json").write_text(json.dumps(manifest))
    violations = validate_dataset(mutated)
    assert [v.code for v in violations] == ["frame_missing"]


def test_validator_flags_action_ts_disorder(mini_dataset, tmp_path):
    root, _, _ = mini_dataset
    mutated = tmp_path / "mut2"
    shutil.copytree(root, mutated)
    log = mutated / "robot_00" / "episode_000" / "actions.jsonl"
    lines = [json.loads(l) for l in log.read_text().splitlines()]
    lines[1]["ts"] = lines[0]["ts"] - 10_000.0
    log.write_text("\n".join(json.dumps(l) for l in lines) + "\n")
    manifest = load_manifest(mutated)
    manifest["datasetSizeBytes"] = tree_size_bytes(mutated)
    (mutated / "manifest.json").write_text(json.dumps(manifest))
    codes = {v.code for v in validate_dataset(mutated)}
    assert "action_ts_not_monotonic" in codes


def test_replay_reproduces_rope_bit_exact(mini_dataset):
    from griprack.dataset.replay import replay_dataset

    root, cfg, _ = mini_dataset
    results = replay_dataset(root, cfg)
    assert len(results) == 2
    for r in results:
        assert r.match, f"{r.robot_id}/{r.episode_id}: {r.detail}"


def test_zero_acceptance_aborts(tmp_path):
    # emulate a removed rope: the segmentation pipeline looks for a color
    # that never appears in the scene, so no candidate is ever accepted
    import copy

    base = free_port_base(1)
    cfg = dataset_rack_config(robots=1, base_port=base, seed_base=6200)
    cfg.orchestratorPort = base - 1
    doctored = copy.deepcopy(cfg)
    doctored.perRobot.workcell.rope_color = (0, 255, 0)
    from griprack.rack.subproc import RackSubprocess

    with RackSubprocess(cfg, tmp_path / "rack.yaml") as rack:
        manifest = run_collection(
            rack.registry.list(), doctored, tmp_path / "ds", robots=1,
            params=CollectionParams(episodes=1, pushes=2, mode="mask", seed=1),
        )
    assert manifest["episodes"][0]["aborted"] is True
    assert manifest["cumulativeMotionCommands"] == 0  # excluded from totals
    rejected = (tmp_path / "ds" / "robot_00" / "episode_000" / "rejected.jsonl")
    assert len(rejected.read_text().splitlines()) == 500
