"""JPEG encoding of rendered frames.

Rendered scenes are flat-shaded and compress far below what a real
camera produces, so two knobs emulate realistic payloads: a fixed
per-camera sensor-noise texture (raises entropy; drawn once per camera
from the cell seed so renders stay deterministic) and a padding floor
that grows each encoded frame to a minimum size with JPEG comment
segments (decoders skip them).  Padding gives exact control of the
per-frame network payload for bandwidth experiments.
"""

from __future__ import annotations

import cv2
import numpy as np

_COM_MARKER = b"\xff\xfe"
_COM_MAX_PAYLOAD = 65531  # segment length field covers itself (2 bytes)


def _pad_jpeg(data: bytes, min_bytes: int) -> bytes:
    """Pad a JPEG to at least min_bytes using comment segments after SOI."""
    deficit = min_bytes - len(data)
    if deficit <= 0:
        return data
    segments = []
    while deficit > 0:
        payload = min(max(deficit - 4, 0), _COM_MAX_PAYLOAD)
        segments.append(_COM_MARKER + (payload + 2).to_bytes(2, "big") + b"\x00" * payload)
        deficit -= payload + 4
    return data[:2] + b"".join(segments) + data[2:]


class FrameEncoder:
    """Encodes RGB rasters for one camera."""

    def __init__(self, quality: int = 85, min_bytes: int = 0,
                 noise_amplitude: float = 0.0, seed: int = 0,
                 resolution: tuple[int, int] = (1280, 720)):
        self.quality = int(quality)
        self.min_bytes = int(min_bytes)
        self.noise = None
        if noise_amplitude > 0:
            rng = np.random.default_rng([seed, 0xCA11])
            width, height = resolution
            amp = float(noise_amplitude)
            self.noise = rng.uniform(-amp, amp, size=(height, width, 3)).astype(np.float32)

    def encode(self, raster_rgb: np.ndarray) -> bytes:
        img = raster_rgb
        if self.noise is not None:
            img = np.clip(raster_rgb.astype(np.float32) + self.noise, 0, 255).astype(np.uint8)
        # cvtColor instead of a reversed-stride view: the strided copy in
        # the imencode binding would hold the interpreter lock for ~20 ms
        bgr = cv2.cvtColor(img, cv2.COLOR_RGB2BGR)
        ok, buf = cv2.imencode(".jpg", bgr, [cv2.IMWRITE_JPEG_QUALITY, self.quality])
        if not ok:
            raise RuntimeError("JPEG encode failed")
        return _pad_jpeg(buf.tobytes(), self.min_bytes)
