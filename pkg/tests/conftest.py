import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

from griprack.config import RackConfig, dump_rack_config
from griprack.bench.client import RegistryClient

_next_base = [21000]


def free_port_base(count: int) -> int:
    """A base port with `count`+1 consecutive free ports (orchestrator uses base-1)."""
    while True:
        base = _next_base[0]
        _next_base[0] += count + 8
        ok = True
        for port in range(base - 1, base + count):
            with socket.socket() as s:
                try:
                    s.bind(("127.0.0.1", port))
                except OSError:
                    ok = False
                    break
        if ok:
            return base


@pytest.fixture
def rack_config_factory(tmp_path):
    def make(robot_count=2, **overrides) -> RackConfig:
        base = free_port_base(robot_count)
        cfg = RackConfig(
            robotCount=robot_count,
            basePort=base,
            orchestratorPort=base - 1,
            token="test-token",
            seedBase=4000,
            **overrides,
        )
        return cfg

    return make


class RackProcess:
    """A rack running in a child process (client-side measurements stay clean)."""

    def __init__(self, cfg: RackConfig, config_path: Path):
        dump_rack_config(cfg, config_path)
        self.cfg = cfg
        self.config_path = config_path
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "griprack.cli", "rack", "--config", str(config_path)],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        self.registry = RegistryClient(f"{cfg.host}:{cfg.orchestratorPort}")

    def wait_ready(self, timeout=30.0):
        try:
            self.registry.wait_alive(self.cfg.robotCount, timeout=timeout)
        except Exception:
            self.stop()
            raise
        return self

    def stop(self):
        self.registry.close()
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=5)


@pytest.fixture
def rack_process_factory(tmp_path):
    racks = []

    def make(cfg: RackConfig) -> RackProcess:
        rack = RackProcess(cfg, tmp_path / f"rack-{len(racks)}.yaml")
        racks.append(rack)
        return rack.wait_ready()

    yield make
    for rack in racks:
        rack.stop()


def wait_until(predicate, timeout: float, interval: float = 0.1, message: str = "condition"):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return
        time.sleep(interval)
    raise TimeoutError(f"timed out waiting for {message}")
