import io
import threading
import time

import numpy as np
import pytest

from griprack.bench.client import ApiError, RobotClient
from griprack.config import PerRobotConfig, KinematicsConfig, ServerConfig, WorkcellConfig
from griprack.kinematics.robot import PoseSnapshot, RobotPose
from griprack.server import RobotServer

TOKEN = "secret-token"


@pytest.fixture
def server():
    cfg = PerRobotConfig(
        kinematics=KinematicsConfig(seed=42, sigma_xy_mm=0.0, sigma_z_mm=0.0,
                                    sigma_offset_xy_mm=0.0, sigma_offset_z_mm=0.0),
        workcell=WorkcellConfig(),
        server=ServerConfig(),
    )
    srv = RobotServer("robot_00", cfg, TOKEN, port=0)
    srv.start()
    yield srv
    srv.stop()


@pytest.fixture
def client(server):
    c = RobotClient(server.endpoint, TOKEN)
    yield c
    c.close()


def decode(jpeg_bytes):
    import cv2
    arr = np.frombuffer(jpeg_bytes, dtype=np.uint8)
    img = cv2.imdecode(arr, cv2.IMREAD_COLOR)
    assert img is not None
    return img


def test_health_unauthenticated(server):
    c = RobotClient(server.endpoint, "wrong-token")
    assert c.health()["status"] == "ok"
    c.close()


def test_auth_totality(server):
    c = RobotClient(server.endpoint, "wrong-token")
    for call in (c.state, lambda: c.image("top"), lambda: c.command("move_xy", {"x": 0.5, "y": 0.5}),
                 c.calibrate, c.rope, lambda: next(iter(c.stream("top", max_frames=1)))):
        with pytest.raises(ApiError) as ei:
            call()
        assert ei.value.status == 401
    c.close()


def test_initial_state(client):
    st = client.state()
    assert st["robotId"] == "robot_00"
    assert st["pose"] == {"x": 0.0, "y": 0.0, "z": 1.0, "r": 0.0, "d": 1.0}
    assert st["busy"] is False
    assert st["homed"] is True
    assert st["commandCounter"] == 0
    assert st["lastCollision"] is None
    assert st["uptime"] >= 0


def test_snapshot_nonce_consistency(client):
    st = client.state()
    commanded = RobotPose(**st["commanded"])
    actual = RobotPose(**st["pose"])
    expected = PoseSnapshot.compute_nonce(st["stateVersion"], commanded, actual)
    assert st["poseNonce"] == expected


def test_command_and_completion(client):
    receipt = client.command("move_xy", {"x": 0.5, "y": 0.5})
    assert "commandId" in receipt and "timestamp" in receipt
    st = client.wait_idle()
    assert st["pose"]["x"] == pytest.approx(0.5)
    assert st["pose"]["y"] == pytest.approx(0.5)
    assert st["commandCounter"] == 1


def test_receipt_timestamp_in_request_window(client):
    before = time.monotonic() * 1000.0
    receipt = client.command("move_z", {"z": 0.5})
    after = time.monotonic() * 1000.0
    assert before <= receipt["timestamp"] <= after
    client.wait_idle()


def test_validation_names_field(client):
    with pytest.raises(ApiError) as ei:
        client.command("move_xy", {"x": 1.5, "y": 0.5})
    assert ei.value.status == 400
    assert ei.value.payload["field"] == "x"
    with pytest.raises(ApiError) as ei:
        client.command("move_z", {"z": 2.0})
    assert ei.value.payload["field"] == "z"
    st = client.state()
    assert st["commandCounter"] == 0  # rejected commands do not count


def test_unknown_kind_and_view(client):
    with pytest.raises(ApiError) as ei:
        client.command("teleport", {"x": 0.1})
    assert ei.value.status == 400
    with pytest.raises(ApiError) as ei:
        client.image("side")
    assert ei.value.status == 400


def test_busy_rejection_depth_one_queue():
    cfg = PerRobotConfig(kinematics=KinematicsConfig(seed=1, time_scale=1.0))
    srv = RobotServer("robot_01", cfg, TOKEN, port=0)
    srv.start()
    try:
        c = RobotClient(srv.endpoint, TOKEN)
        c.command("move_xy", {"x": 1.0, "y": 1.0})  # ~3 s at default profile
        counter_after_first = c.state()["commandCounter"]
        with pytest.raises(ApiError) as ei:
            c.command("move_xy", {"x": 0.0, "y": 0.0})
        assert ei.value.status == 409
        assert ei.value.payload["error"] == "busy"
        st = c.state()
        assert st["busy"] is True
        assert st["commandCounter"] == counter_after_first
        c.wait_idle()
        c.close()
    finally:
        srv.stop()


def test_state_during_motion_between_endpoints():
    cfg = PerRobotConfig(kinematics=KinematicsConfig(seed=1, time_scale=1.0))
    srv = RobotServer("robot_02", cfg, TOKEN, port=0)
    srv.start()
    try:
        c = RobotClient(srv.endpoint, TOKEN)
        c.command("move_xy", {"x": 1.0, "y": 0.0})  # ~2.1 s
        time.sleep(1.0)
        st = c.state()
        assert st["busy"] is True
        assert 0.05 < st["pose"]["x"] < 0.95
        c.wait_idle()
        c.close()
    finally:
        srv.stop()


def test_image_endpoints_resolutions(client):
    top, meta_top = client.image("top")
    bottom, _ = client.image("bottom")
    img_top = decode(top)
    img_bottom = decode(bottom)
    assert img_top.shape[:2] == (720, 1280)
    assert img_bottom.shape[:2] == (480, 640)
    assert meta_top["seq"] >= 1


def test_image_sequence_strictly_increasing_30rps(client):
    seqs = []
    t0 = time.monotonic()
    n = 0
    while n < 30:
        _, meta = client.image("top")
        seqs.append(meta["seq"])
        n += 1
        # pace to ~30/s
        target = t0 + n / 30.0
        delay = target - time.monotonic()
        if delay > 0:
            time.sleep(delay)
    elapsed = time.monotonic() - t0
    assert elapsed < 2.0  # 30 requests served without error well within budget
    assert all(b > a for a, b in zip(seqs, seqs[1:]))


def test_opaque_inlay_bottom_uniform(server):
    cfg = PerRobotConfig(workcell=WorkcellConfig(floor_mode="opaque_inlay"))
    srv = RobotServer("robot_03", cfg, TOKEN, port=0)
    srv.start()
    try:
        c = RobotClient(srv.endpoint, TOKEN)
        data, _ = c.image("bottom")
        img = decode(data)
        assert img.shape[:2] == (480, 640)
        # uniform raster: JPEG of a constant image decodes nearly constant
        assert int(img.max()) - int(img.min()) <= 2
        c.close()
    finally:
        srv.stop()


def test_stream_rate_and_gaplessness(client):
    t0 = time.monotonic()
    frames = list(client.stream("top", max_frames=15))
    elapsed = time.monotonic() - t0
    assert 1.2 <= elapsed <= 2.2  # 15 frames at 10 fps
    seqs = [seq for _, seq, _ in frames]
    ts = [t for _, _, t in frames]
    assert all(b > a for a, b in zip(seqs, seqs[1:]))
    assert all(b > a for a, b in zip(ts, ts[1:]))
    for data, _, _ in frames[:2]:
        assert decode(data).shape[:2] == (720, 1280)


def test_dual_streams_progress(client):
    results = {}

    def consume(view):
        results[view] = list(client_for(view).stream(view, max_frames=8))

    def client_for(view):
        return RobotClient(client.host + ":" + str(client.port), TOKEN)

    threads = [threading.Thread(target=consume, args=(v,)) for v in ("top", "bottom")]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=10)
    for view in ("top", "bottom"):
        seqs = [s for _, s, _ in results[view]]
        assert len(seqs) == 8
        assert all(b == a + 1 for a, b in zip(seqs, seqs[1:])), view  # per-stream gap 0


def test_stream_shows_motion():
    cfg = PerRobotConfig(kinematics=KinematicsConfig(seed=1, time_scale=1.0))
    srv = RobotServer("robot_04", cfg, TOKEN, port=0)
    srv.start()
    try:
        c = RobotClient(srv.endpoint, TOKEN)
        stream_frames = []

        def consume():
            for item in c.stream("top", max_frames=12):
                stream_frames.append(item)

        t = threading.Thread(target=consume)
        t.start()
        cmd = RobotClient(srv.endpoint, TOKEN)
        cmd.command("move_xy", {"x": 1.0, "y": 1.0})
        t.join(timeout=10)
        cmd.wait_idle()
        # gripper-colored disc centroid must progress; decode() gives BGR
        gripper_bgr = np.array([160, 60, 40], dtype=np.int32)
        centroids = []
        for data, _, _ in stream_frames:
            img = decode(data).astype(np.int32)
            mask = ((img - gripper_bgr) ** 2).sum(axis=2) < 60 * 60
            ys, xs_px = mask.nonzero()
            if len(xs_px):
                centroids.append((xs_px.mean(), ys.mean()))
        assert len(centroids) >= 6
        xs = [cx for cx, _ in centroids]
        assert xs[-1] > xs[0] + 50  # moved across the frame
        assert all(b >= a - 2.0 for a, b in zip(xs, xs[1:]))  # monotone progress
        cmd.close()
        c.close()
    finally:
        srv.stop()


def test_liveness_under_image_load(client, server):
    stop = threading.Event()

    def hammer():
        c = RobotClient(server.endpoint, TOKEN)
        while not stop.is_set():
            try:
                c.image("top")
            except Exception:
                return
        c.close()

    threads = [threading.Thread(target=hammer) for _ in range(4)]
    for t in threads:
        t.start()
    time.sleep(0.3)
    t0 = time.monotonic()
    client.command("move_z", {"z": 0.4})
    accept_latency = time.monotonic() - t0
    stop.set()
    for t in threads:
        t.join(timeout=5)
    assert accept_latency < 1.0
    client.wait_idle()
