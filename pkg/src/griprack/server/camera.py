"""Camera service: render-on-demand with a scene-keyed encode cache.

A grab serves the cached encoding when the scene has not changed since
the last render (renders are deterministic, so re-rendering would
produce identical bytes) or when the cache is younger than the
configured window, which bounds the render rate per camera.  Every
serve gets a fresh, strictly increasing sequence number and a
monotonic, strictly increasing timestamp.
"""

from __future__ import annotations

import threading
import time

from griprack.server.encoder import FrameEncoder
from griprack.workcell.cell import WorkCell

STALL_GUARD_MS = 40.0   # late grabs beyond this report their real time


class CameraService:
    def __init__(self, cell: WorkCell, view: str, encoder: FrameEncoder,
                 cache_window_s: float = 1.0 / 30.0):
        self.cell = cell
        self.view = view
        self.encoder = encoder
        self.cache_window_s = cache_window_s
        self._lock = threading.Lock()
        self._seq = 0
        self._last_ts = 0.0
        self._cache_key = None
        self._cache_bytes = None
        self._cache_time = 0.0

    def grab(self, ts_hint_ms: float | None = None) -> tuple[bytes, int, float]:
        """Return (jpeg bytes, sequence, timestamp in monotonic ms).

        The timestamp is taken at capture entry, before the encode, so
        frame cadence is independent of encode cost.  A paced caller
        (the live stream) passes its shutter schedule as ts_hint_ms and
        the stamp follows that device clock while the grab runs within
        the stall guard of it; later grabs report their real entry time
        so genuine stalls stay visible.
        """
        with self._lock:
            now = time.monotonic()
            ts = now * 1000.0
            if ts_hint_ms is not None and 0.0 <= ts - ts_hint_ms <= STALL_GUARD_MS:
                ts = ts_hint_ms
            ts = max(ts, self._last_ts + 1e-3)
            self._last_ts = ts
            key = self.cell.scene_version()
            fresh = self._cache_bytes is not None and (
                key == self._cache_key or (now - self._cache_time) < self.cache_window_s
            )
            if not fresh:
                raster = self.cell.render_view(self.view)
                self._cache_bytes = self.encoder.encode(raster)
                self._cache_key = key
                self._cache_time = now
            self._seq += 1
            return self._cache_bytes, self._seq, ts
