"""Minimal keep-alive HTTP client for the robot and orchestrator APIs.

Built on http.client to keep the per-request overhead low enough for
load generation.  A RobotClient owns one connection and is not
thread-safe; use one per issuing thread.
"""

from __future__ import annotations

import http.client
import json
import time
from typing import Iterator, Optional


class ApiError(RuntimeError):
    def __init__(self, status: int, payload: dict):
        self.status = status
        self.payload = payload
        super().__init__(f"HTTP {status}: {payload}")


class _JsonHttp:
    def __init__(self, endpoint: str, timeout: float = 5.0):
        host, port = endpoint.rsplit(":", 1)
        self.host = host
        self.port = int(port)
        self.timeout = timeout
        self._conn: Optional[http.client.HTTPConnection] = None

    def _connection(self) -> http.client.HTTPConnection:
        if self._conn is None:
            self._conn = http.client.HTTPConnection(self.host, self.port, timeout=self.timeout)
        return self._conn

    def close(self):
        if self._conn is not None:
            self._conn.close()
            self._conn = None

    def request(self, method: str, path: str, headers: dict, body: bytes | None = None):
        """One request/response; drops the connection on transport errors."""
        conn = self._connection()
        try:
            conn.request(method, path, body=body, headers=headers)
            resp = conn.getresponse()
            data = resp.read()
            return resp, data
        except Exception:
            self.close()
            raise

    def json_request(self, method: str, path: str, headers: dict, payload: dict | None = None):
        body = None
        hdrs = dict(headers)
        if payload is not None:
            body = json.dumps(payload).encode()
            hdrs["Content-Type"] = "application/json"
        resp, data = self.request(method, path, hdrs, body)
        doc = json.loads(data) if data else {}
        if resp.status >= 400:
            raise ApiError(resp.status, doc)
        return doc


class RobotClient(_JsonHttp):
    """Client for one robot server."""

    def __init__(self, endpoint: str, token: str, timeout: float = 5.0):
        super().__init__(endpoint, timeout)
        self.headers = {"X-Api-Token": token}

    def health(self) -> dict:
        return self.json_request("GET", "/healthz", {})

    def state(self) -> dict:
        return self.json_request("GET", "/api/v1/state", self.headers)

    def image(self, view: str) -> tuple[bytes, dict]:
        resp, data = self.request("GET", f"/api/v1/image/{view}", self.headers)
        if resp.status != 200:
            raise ApiError(resp.status, json.loads(data) if data else {})
        return data, {
            "seq": int(resp.headers["X-Frame-Seq"]),
            "ts": float(resp.headers["X-Frame-Ts"]),
        }

    def command(self, kind: str, params: dict | None = None,
                waypoints: list | None = None) -> dict:
        payload: dict = {"kind": kind, "params": params or {}}
        if waypoints is not None:
            payload["waypoints"] = [list(p) for p in waypoints]
        return self.json_request("POST", "/api/v1/command", self.headers, payload)

    def calibrate(self) -> dict:
        return self.json_request("POST", "/api/v1/calibrate", self.headers, {})

    def rope(self) -> dict:
        return self.json_request("GET", "/api/v1/debug/rope", self.headers)

    def wait_idle(self, timeout: float = 30.0, poll_s: float = 0.01) -> dict:
        """Poll state until the executor reports idle; returns the last state."""
        deadline = time.monotonic() + timeout
        while True:
            st = self.state()
            if not st["busy"]:
                return st
            if time.monotonic() > deadline:
                raise TimeoutError(f"robot still busy after {timeout}s")
            time.sleep(poll_s)

    def run_command(self, kind: str, params: dict | None = None,
                    waypoints: list | None = None, timeout: float = 30.0,
                    retries: int = 3) -> dict:
        """Submit, retrying busy rejections, then wait for completion."""
        for attempt in range(retries + 1):
            try:
                receipt = self.command(kind, params, waypoints)
                break
            except ApiError as exc:
                if exc.status != 409 or attempt == retries:
                    raise
                self.wait_idle(timeout=timeout)
        self.wait_idle(timeout=timeout)
        return receipt

    def stream(self, view: str, max_frames: int = 0) -> Iterator[tuple[bytes, int, float]]:
        """Consume the MJPEG stream; yields (jpeg, seq, ts) per part.

        Uses a dedicated connection; the server keeps sending until the
        client closes.  max_frames 0 streams until disconnect.
        """
        conn = http.client.HTTPConnection(self.host, self.port, timeout=self.timeout)
        try:
            conn.request("GET", f"/api/v1/stream/{view}", headers=self.headers)
            resp = conn.getresponse()
            if resp.status != 200:
                raise ApiError(resp.status, json.loads(resp.read() or b"{}"))
            count = 0
            while max_frames == 0 or count < max_frames:
                line = resp.fp.readline()
                if not line:
                    return
                if line.strip() != b"--frame":
                    continue
                headers = {}
                while True:
                    hline = resp.fp.readline()
                    if hline in (b"\r\n", b"\n", b""):
                        break
                    key, _, value = hline.decode().partition(":")
                    headers[key.strip().lower()] = value.strip()
                length = int(headers["content-length"])
                data = resp.fp.read(length)
                resp.fp.readline()  # trailing CRLF
                yield data, int(headers["x-frame-seq"]), float(headers["x-frame-ts"])
                count += 1
        finally:
            conn.close()


class RegistryClient(_JsonHttp):
    """Client for the rack orchestrator."""

    def list(self) -> list[dict]:
        return self.json_request("GET", "/registry", {})["entries"]

    def wait_alive(self, count: int, timeout: float = 15.0) -> list[dict]:
        deadline = time.monotonic() + timeout
        last_err: Exception | None = None
        while time.monotonic() < deadline:
            try:
                entries = self.list()
                if sum(e["alive"] for e in entries) >= count:
                    return entries
            except Exception as exc:  # registry not up yet
                last_err = exc
                self.close()
            time.sleep(0.1)
        raise TimeoutError(f"rack not healthy after {timeout}s: {last_err}")

    def kill(self, robot_id: str) -> dict:
        return self.json_request("POST", f"/admin/kill/{robot_id}", {})

    def restart(self, robot_id: str) -> dict:
        return self.json_request("POST", f"/admin/restart/{robot_id}", {})
