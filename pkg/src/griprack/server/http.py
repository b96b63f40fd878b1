"""Token-authenticated REST server for one robot cell.

Endpoints (token in the X-Api-Token header; /healthz is open):

    GET  /healthz                      liveness, no auth
    GET  /api/v1/state                 consistent status snapshot
    GET  /api/v1/image/{top|bottom}    one JPEG frame (seq/ts headers)
    GET  /api/v1/stream/{top|bottom}   multipart MJPEG live stream
    POST /api/v1/command               motion command, depth-1 queue
    POST /api/v1/calibrate             home the XY stage
    GET  /api/v1/debug/rope            simulator rope state (replay support)

Bodies are UTF-8 JSON.  401 bad token, 400 validation (names the
offending field), 409 busy or not homed, 404 unknown path.
"""

from __future__ import annotations

import hmac
import json
import socket
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from griprack.config import PerRobotConfig
from griprack.kinematics.robot import RangeError, NotHomedError
from griprack.server.camera import CameraService
from griprack.server.encoder import FrameEncoder
from griprack.server.executor import BusyError, CommandExecutor
from griprack.workcell.cell import WorkCell

COMMAND_KINDS = ("move_xy", "move_z", "rotate", "gripper", "calibrate")


def _validate_norm(params: dict, field: str, lo: float = 0.0, hi: float = 1.0) -> float:
    value = params.get(field)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise RangeError(field, float("nan"), lo, hi)
    value = float(value)
    if not lo <= value <= hi:
        raise RangeError(field, value, lo, hi)
    return value


class RobotServer:
    """One robot: work cell + executor + HTTP front end."""

    def __init__(self, robot_id: str, cfg: PerRobotConfig, token: str,
                 host: str = "127.0.0.1", port: int = 0):
        self.robot_id = robot_id
        self.cfg = cfg
        self.token = token.encode()
        self.stopping = threading.Event()
        self.cell = WorkCell(cfg.kinematics, cfg.workcell, interrupt=self.stopping)
        self.executor = CommandExecutor(robot_id)
        seed = cfg.kinematics.seed
        self.cameras = {
            view: CameraService(
                self.cell, view,
                FrameEncoder(
                    quality=cfg.server.jpeg_quality,
                    min_bytes=cfg.server.min_frame_bytes,
                    noise_amplitude=cfg.server.sensor_noise,
                    seed=seed,
                    resolution=(1280, 720) if view == "top" else (640, 480),
                ),
                cache_window_s=cfg.server.image_cache_s,
            )
            for view in ("top", "bottom")
        }
        self.start_time = time.monotonic()
        self.cell.arm.home_calibrate()   # cells come up homed, gripper raised
        self.httpd = _HTTPServer((host, port), _Handler, self)
        self.port = self.httpd.server_address[1]
        self.host = host
        self._thread: threading.Thread | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self.httpd.serve_forever, kwargs={"poll_interval": 0.1},
            name=f"http-{self.robot_id}", daemon=True,
        )
        self._thread.start()

    def stop(self) -> None:
        self.stopping.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        self.httpd.close_client_connections()
        self.executor.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    # -- state -------------------------------------------------------------

    def status_dict(self) -> dict:
        snap = self.cell.arm.snapshot()
        last = self.cell.arm.last_collision
        return {
            "robotId": self.robot_id,
            "pose": snap.actual.as_dict(),
            "commanded": snap.commanded.as_dict(),
            "busy": self.executor.busy,
            "homed": snap.homed,
            "lastCollision": None if last is None else {
                "axis": last.axis,
                "currentPeak": last.current_peak,
                "poseAtStop": last.pose_at_stop.as_dict(),
                "timestamp": last.timestamp,
            },
            "commandCounter": self.executor.accepted_count,
            "uptime": time.monotonic() - self.start_time,
            "stateVersion": snap.version,
            "poseNonce": snap.nonce,
        }

    # -- command admission ---------------------------------------------------

    def submit_command(self, body: dict) -> dict:
        kind = body.get("kind")
        if kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {kind!r}")
        params = body.get("params") or {}
        arm = self.cell.arm
        if kind == "move_xy":
            waypoints = body.get("waypoints")
            if waypoints is not None:
                if (not isinstance(waypoints, list) or not waypoints
                        or not all(isinstance(p, list) and len(p) == 2 for p in waypoints)):
                    raise ValueError("waypoints must be a non-empty list of [x, y] pairs")
                pts = []
                for p in waypoints:
                    pts.append((
                        _validate_norm({"x": p[0]}, "x"),
                        _validate_norm({"y": p[1]}, "y"),
                    ))
                fn = lambda: arm.move_xy(waypoints=pts)
            else:
                x = _validate_norm(params, "x")
                y = _validate_norm(params, "y")
                fn = lambda: arm.move_xy(x, y)
        elif kind == "move_z":
            z = _validate_norm(params, "z")
            fn = lambda: arm.move_z(z)
        elif kind == "rotate":
            r = _validate_norm(params, "r", -90.0, 90.0)
            fn = lambda: arm.rotate(r)
        elif kind == "gripper":
            d = _validate_norm(params, "d")
            fn = lambda: arm.gripper(d)
        else:  # calibrate
            fn = arm.home_calibrate
        if kind != "calibrate" and not arm.homed:
            raise NotHomedError("robot is not homed")
        receipt = self.executor.submit(fn)
        return {"commandId": receipt.command_id, "timestamp": receipt.timestamp_ms}


class _HTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    # REUSEADDR lets a restarted robot rebind its port while old
    # connections sit in TIME_WAIT; binding over a live listener still fails.
    allow_reuse_address = True
    # bursts of simultaneous connects (load tests) overflow the default
    # backlog of 5 and stall on SYN retransmits
    request_queue_size = 128

    def __init__(self, addr, handler, robot: RobotServer):
        self.robot = robot
        self._clients_lock = threading.Lock()
        self._clients: set = set()
        super().__init__(addr, handler)

    def track(self, conn) -> None:
        with self._clients_lock:
            self._clients.add(conn)

    def untrack(self, conn) -> None:
        with self._clients_lock:
            self._clients.discard(conn)

    def close_client_connections(self) -> None:
        """Hard-close open keep-alive connections (kill must look dead)."""
        with self._clients_lock:
            clients = list(self._clients)
            self._clients.clear()
        for conn in clients:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                conn.close()
            except OSError:
                pass


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "griprack"
    sys_version = ""

    def setup(self):
        super().setup()
        self.connection.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.server.track(self.connection)

    def finish(self):
        self.server.untrack(self.connection)
        super().finish()

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    # -- helpers -----------------------------------------------------------

    @property
    def robot(self) -> RobotServer:
        return self.server.robot

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")

    def _send_json(self, code: int, payload: dict):
        body = json.dumps(payload).encode()
        self.send_response(code)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _authorized(self) -> bool:
        token = self.headers.get("X-Api-Token", "")
        return hmac.compare_digest(token.encode(), self.robot.token)

    def _reject_auth(self):
        self._send_json(401, {"error": "auth", "message": "missing or invalid token"})

    # -- routes ------------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "X-Api-Token, Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/healthz":
            self._send_json(200, {"status": "ok", "robotId": self.robot.robot_id})
            return
        if not self._authorized():
            self._reject_auth()
            return
        if path == "/api/v1/state":
            self._send_json(200, self.robot.status_dict())
        elif path.startswith("/api/v1/image/"):
            view = path.rsplit("/", 1)[1]
            if view not in self.robot.cameras:
                self._send_json(400, {"error": "bad_request", "message": f"unknown view {view!r}"})
                return
            data, seq, ts = self.robot.cameras[view].grab()
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "image/jpeg")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("X-Frame-Seq", str(seq))
            self.send_header("X-Frame-Ts", f"{ts:.3f}")
            self.end_headers()
            self.wfile.write(data)
        elif path.startswith("/api/v1/stream/"):
            view = path.rsplit("/", 1)[1]
            if view not in self.robot.cameras:
                self._send_json(400, {"error": "bad_request", "message": f"unknown view {view!r}"})
                return
            self._stream(view)
        elif path == "/api/v1/debug/rope":
            rope = self.robot.cell.rope_snapshot()
            self._send_json(200, {
                "particles": rope.particles.tolist(),
                "restLength": rope.rest_length,
                "ropeRadius": rope.rope_radius,
                "anchorIndex": rope.anchor_index,
            })
        else:
            self._send_json(404, {"error": "not_found", "message": self.path})

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        # drain the body before any early response, or keep-alive desyncs
        try:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
        except ValueError:
            raw = b""
        if not self._authorized():
            self._reject_auth()
            return
        if path not in ("/api/v1/command", "/api/v1/calibrate"):
            self._send_json(404, {"error": "not_found", "message": self.path})
            return
        try:
            body = json.loads(raw or b"{}")
        except json.JSONDecodeError:
            self._send_json(400, {"error": "bad_request", "message": "invalid JSON body"})
            return
        if path == "/api/v1/calibrate":
            body = {"kind": "calibrate"}
        try:
            receipt = self.robot.submit_command(body)
        except RangeError as exc:
            self._send_json(400, {"error": "validation", "field": exc.field, "message": str(exc)})
        except BusyError:
            self._send_json(409, {"error": "busy", "message": "a motion is already executing"})
        except NotHomedError as exc:
            self._send_json(409, {"error": "not_homed", "message": str(exc)})
        except ValueError as exc:
            self._send_json(400, {"error": "bad_request", "message": str(exc)})
        else:
            self._send_json(202, receipt)

    # -- streaming -----------------------------------------------------------

    def _stream(self, view: str):
        camera = self.robot.cameras[view]
        fps = self.robot.cfg.server.stream_fps
        period = 1.0 / fps if fps > 0 else 0.1
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", "multipart/x-mixed-replace; boundary=frame")
        self.send_header("Connection", "close")
        self.end_headers()
        self.close_connection = True
        next_t = time.monotonic()
        try:
            while not self.robot.stopping.is_set():
                data, seq, ts = camera.grab(ts_hint_ms=next_t * 1000.0)
                part = (
                    b"--frame\r\n"
                    b"Content-Type: image/jpeg\r\n"
                    + f"Content-Length: {len(data)}\r\n".encode()
                    + f"X-Frame-Seq: {seq}\r\n".encode()
                    + f"X-Frame-Ts: {ts:.3f}\r\n\r\n".encode()
                )
                self.wfile.write(part + data + b"\r\n")
                # pace slightly fast with a hard floor on the gap: serve
                # jitter then stays inside the +-10% spacing contract,
                # with no catch-up bursts after a stall
                next_t = max(next_t + 0.95 * period, ts / 1000.0 + 0.92 * period)
                delay = next_t - time.monotonic()
                if delay > 0.002:
                    time.sleep(delay - 0.002)
                while time.monotonic() < next_t:
                    time.sleep(0.0003)
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
