"""Single-writer command executor with a depth-1 admission gate.

A command is accepted only while no other motion is executing; the busy
window spans acceptance to completion, so clients implement their own
pacing against explicit busy rejections.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional


class BusyError(RuntimeError):
    pass


@dataclass(frozen=True)
class Receipt:
    command_id: str
    timestamp_ms: float


class CommandExecutor:
    def __init__(self, robot_id: str):
        self.robot_id = robot_id
        self._lock = threading.Lock()
        self._work = threading.Condition(self._lock)
        self._busy = False
        self._pending: Optional[Callable[[], None]] = None
        self._accepted = 0
        self._stop = False
        self._thread = threading.Thread(target=self._run, name=f"exec-{robot_id}", daemon=True)
        self._thread.start()

    @property
    def busy(self) -> bool:
        with self._lock:
            return self._busy

    @property
    def accepted_count(self) -> int:
        with self._lock:
            return self._accepted

    def submit(self, fn: Callable[[], None]) -> Receipt:
        """Admit a command or raise BusyError; never blocks on execution."""
        with self._lock:
            if self._stop:
                raise RuntimeError("executor stopped")
            if self._busy:
                raise BusyError("a motion is already executing")
            self._busy = True
            self._accepted += 1
            receipt = Receipt(
                command_id=f"{self.robot_id}-cmd-{self._accepted:06d}",
                timestamp_ms=time.monotonic() * 1000.0,
            )
            self._pending = fn
            self._work.notify()
        return receipt

    def _run(self) -> None:
        while True:
            with self._lock:
                while self._pending is None and not self._stop:
                    self._work.wait()
                if self._stop and self._pending is None:
                    return
                fn = self._pending
                self._pending = None
            try:
                fn()
            except Exception:
                pass  # the wrapper stores its own error state
            finally:
                with self._lock:
                    self._busy = False

    def shutdown(self, timeout: float = 5.0) -> None:
        with self._lock:
            self._stop = True
            self._work.notify()
        self._thread.join(timeout=timeout)
