"""Rack orchestrator.

Spawns one robot server per cell (threads in this process by default,
or one subprocess per cell), assigns ports basePort..basePort+N-1,
sweeps /healthz once per heartbeat interval and serves the registry on
the orchestrator port:

    GET  /registry               registry entries
    GET  /healthz                orchestrator liveness
    POST /admin/kill/{robotId}   stop one cell (fault injection)
    POST /admin/restart/{robotId} bring a killed cell back, same port

A robot is alive iff its last successful probe is within 3 heartbeat
intervals.  Teardown closes every listener; a failed startup tears down
the cells that did start.
"""

from __future__ import annotations

import copy
import dataclasses
import http.client
import json
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from griprack.config import RackConfig, dump_rack_config
from griprack.server import RobotServer


class RackStartupError(RuntimeError):
    pass


@dataclass
class RegistryEntry:
    robotId: str
    endpoint: str
    alive: bool
    lastHeartbeat: float  # monotonic seconds of the last successful probe

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class _Cell:
    """One managed cell: an in-process server or a subprocess."""

    def __init__(self, robot_id: str, port: int):
        self.robot_id = robot_id
        self.port = port
        self.server: Optional[RobotServer] = None
        self.process: Optional[subprocess.Popen] = None

    def stop(self):
        if self.server is not None:
            self.server.stop()
            self.server = None
        if self.process is not None:
            self.process.terminate()
            try:
                self.process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.process.kill()
                self.process.wait(timeout=5)
            self.process = None


class RackOrchestrator:
    def __init__(self, cfg: RackConfig):
        self.cfg = cfg
        self.cells: dict[str, _Cell] = {}
        self._registry: dict[str, RegistryEntry] = {}
        self._registry_lock = threading.Lock()
        self._stop = threading.Event()
        self._heartbeat_thread: Optional[threading.Thread] = None
        self._httpd: Optional[ThreadingHTTPServer] = None
        self._http_thread: Optional[threading.Thread] = None
        self._config_file: Optional[Path] = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "RackOrchestrator":
        cfg = self.cfg
        try:
            self._start_registry_server()
            if cfg.processPerCell:
                tmp = tempfile.NamedTemporaryFile("w", suffix=".yaml", delete=False)
                self._config_file = Path(tmp.name)
                tmp.close()
                dump_rack_config(cfg, self._config_file)
            for i in range(cfg.robotCount):
                robot_id = cfg.robot_id(i)
                cell = _Cell(robot_id, cfg.robot_port(i))
                self._spawn_cell(cell, i)
                self.cells[robot_id] = cell
                with self._registry_lock:
                    self._registry[robot_id] = RegistryEntry(
                        robotId=robot_id,
                        endpoint=f"{cfg.host}:{cell.port}",
                        alive=False,
                        lastHeartbeat=0.0,
                    )
            self._wait_all_healthy(timeout=10.0 if not cfg.processPerCell else 30.0)
        except Exception:
            self.stop()
            raise
        self._heartbeat_thread = threading.Thread(target=self._heartbeat_loop,
                                                  name="rack-heartbeat", daemon=True)
        self._heartbeat_thread.start()
        return self

    def _spawn_cell(self, cell: _Cell, index: int) -> None:
        cfg = self.cfg
        if cfg.processPerCell:
            cell.process = subprocess.Popen(
                [sys.executable, "-m", "griprack.cli", "cell",
                 "--config", str(self._config_file), "--index", str(index)],
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
            )
            return
        per = copy.deepcopy(cfg.perRobot)
        per.kinematics.seed = cfg.robot_seed(index)
        try:
            server = RobotServer(cell.robot_id, per, cfg.token, host=cfg.host, port=cell.port)
        except OSError as exc:
            raise RackStartupError(f"cannot bind port {cell.port} for {cell.robot_id}: {exc}") from exc
        server.start()
        cell.server = server

    def stop(self) -> None:
        self._stop.set()
        if self._heartbeat_thread is not None:
            self._heartbeat_thread.join(timeout=5)
            self._heartbeat_thread = None
        for cell in self.cells.values():
            cell.stop()
        self.cells.clear()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        if self._http_thread is not None:
            self._http_thread.join(timeout=5)
            self._http_thread = None
        if self._config_file is not None:
            self._config_file.unlink(missing_ok=True)
            self._config_file = None

    # -- fault injection -----------------------------------------------------

    def kill(self, robot_id: str) -> None:
        self.cells[robot_id].stop()

    def restart(self, robot_id: str) -> None:
        cell = self.cells[robot_id]
        cell.stop()
        index = int(robot_id.rsplit("_", 1)[1])
        deadline = time.monotonic() + 5.0
        while True:
            try:
                self._spawn_cell(cell, index)
                return
            except RackStartupError:
                if time.monotonic() > deadline:
                    raise
                time.sleep(0.1)

    # -- registry ------------------------------------------------------------

    def registry_list(self) -> list[RegistryEntry]:
        with self._registry_lock:
            return [dataclasses.replace(e) for e in self._registry.values()]

    def health_sweep(self) -> list[RegistryEntry]:
        """Probe every cell once and update the registry."""
        now = time.monotonic()
        window = 3.0 * self.cfg.heartbeatInterval
        for robot_id, cell in list(self.cells.items()):
            ok = self._probe(cell)
            with self._registry_lock:
                entry = self._registry[robot_id]
                if ok:
                    entry.lastHeartbeat = now
                entry.alive = (now - entry.lastHeartbeat) <= window and entry.lastHeartbeat > 0
        return self.registry_list()

    def _probe(self, cell: _Cell) -> bool:
        conn = http.client.HTTPConnection(self.cfg.host, cell.port, timeout=0.5)
        try:
            conn.request("GET", "/healthz")
            resp = conn.getresponse()
            resp.read()
            return resp.status == 200
        except OSError:
            return False
        finally:
            conn.close()

    def _wait_all_healthy(self, timeout: float) -> None:
        deadline = time.monotonic() + timeout
        while True:
            entries = self.health_sweep()
            if all(e.alive for e in entries):
                return
            if time.monotonic() > deadline:
                dead = [e.robotId for e in entries if not e.alive]
                raise RackStartupError(f"cells not healthy after {timeout}s: {dead}")
            time.sleep(0.2)

    def _heartbeat_loop(self) -> None:
        while not self._stop.wait(self.cfg.heartbeatInterval):
            self.health_sweep()

    # -- registry HTTP endpoint ----------------------------------------------

    def _start_registry_server(self) -> None:
        orchestrator = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                pass

            def _json(self, code: int, payload: dict):
                body = json.dumps(payload).encode()
                self.send_response(code)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "X-Api-Token, Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_GET(self):
                if self.path == "/registry":
                    entries = [e.as_dict() for e in orchestrator.registry_list()]
                    self._json(200, {"entries": entries})
                elif self.path == "/healthz":
                    self._json(200, {"status": "ok"})
                else:
                    self._json(404, {"error": "not_found"})

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                self.rfile.read(length)
                parts = self.path.strip("/").split("/")
                if len(parts) == 3 and parts[0] == "admin" and parts[1] in ("kill", "restart"):
                    robot_id = parts[2]
                    if robot_id not in orchestrator.cells:
                        self._json(404, {"error": "not_found", "message": robot_id})
                        return
                    if parts[1] == "kill":
                        orchestrator.kill(robot_id)
                    else:
                        orchestrator.restart(robot_id)
                    self._json(200, {"status": "ok", "robotId": robot_id})
                else:
                    self._json(404, {"error": "not_found"})

        class Server(ThreadingHTTPServer):
            daemon_threads = True
            allow_reuse_address = True

        try:
            self._httpd = Server((self.cfg.host, self.cfg.orchestratorPort), Handler)
        except OSError as exc:
            raise RackStartupError(
                f"cannot bind orchestrator port {self.cfg.orchestratorPort}: {exc}") from exc
        self._http_thread = threading.Thread(target=self._httpd.serve_forever,
                                             kwargs={"poll_interval": 0.1},
                                             name="rack-registry", daemon=True)
        self._http_thread.start()

    @property
    def registry_endpoint(self) -> str:
        return f"{self.cfg.host}:{self.cfg.orchestratorPort}"


def spawn_rack(cfg: RackConfig) -> RackOrchestrator:
    """Start all cells and the registry; raises RackStartupError on failure."""
    return RackOrchestrator(cfg).start()
