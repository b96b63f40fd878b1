"""Run a rack in a child process.

Load generators measure client-side latency; keeping the rack out of
the measuring process avoids sharing its interpreter lock.
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

from griprack.bench.client import RegistryClient
from griprack.config import RackConfig, dump_rack_config


class RackSubprocess:
    def __init__(self, cfg: RackConfig, config_path: str | Path):
        self.cfg = cfg
        self.config_path = Path(config_path)
        dump_rack_config(cfg, self.config_path)
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "griprack.cli", "rack", "--config", str(self.config_path)],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        self.registry = RegistryClient(f"{cfg.host}:{cfg.orchestratorPort}")

    def wait_ready(self, timeout: float = 60.0) -> "RackSubprocess":
        try:
            self.registry.wait_alive(self.cfg.robotCount, timeout=timeout)
        except Exception:
            self.stop()
            raise
        return self

    def stop(self) -> None:
        self.registry.close()
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=5)

    def __enter__(self):
        return self.wait_ready()

    def __exit__(self, *exc):
        self.stop()
