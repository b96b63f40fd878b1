"""Stall detection from simulated motor current.

There is no position feedback on the servo axes, so blocked motion is
recognized from the motor current: free-running current stays at or
below 0.4 (normalized), a stalled axis saturates at 1.0.  A debounce
window of consecutive over-threshold samples rejects single spikes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

FREE_RUN_BASE = 0.25
FREE_RUN_RIPPLE = 0.1   # keeps free current <= 0.35 < 0.4
STALL_CURRENT = 1.0
DEFAULT_THRESHOLD = 0.8
DEFAULT_DEBOUNCE = 3
DEFAULT_SAMPLE_HZ = 1000.0


@dataclass(frozen=True)
class CollisionEvent:
    axis: str                 # "x", "y", "z" or "xy"
    current_peak: float
    pose_at_stop: "object"    # RobotPose; typed loosely to avoid an import cycle
    timestamp: float          # seconds into the trace / simulated motion


def first_sustained_exceedance(
    trace: Sequence[float], threshold: float, debounce: int = DEFAULT_DEBOUNCE
) -> Optional[int]:
    """Index of the sample that completes the first over-threshold run.

    Returns the index of the ``debounce``-th consecutive sample above
    ``threshold``, or None if no run is long enough.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    run = 0
    for i, sample in enumerate(trace):
        if sample > threshold:
            run += 1
            if run >= debounce:
                return i
        else:
            run = 0
    return None


def detect_collision(
    trace: Sequence[float],
    threshold: float,
    *,
    debounce: int = DEFAULT_DEBOUNCE,
    sample_hz: float = DEFAULT_SAMPLE_HZ,
    axis: str = "xy",
    pose_at_stop=None,
) -> Optional[CollisionEvent]:
    """Scan a current trace and report a stall, if any."""
    idx = first_sustained_exceedance(trace, threshold, debounce)
    if idx is None:
        return None
    return CollisionEvent(
        axis=axis,
        current_peak=max(trace[: idx + 1]),
        pose_at_stop=pose_at_stop,
        timestamp=idx / sample_hz,
    )


def synth_current_trace(
    free_s: float, stall_s: float, sample_hz: float = DEFAULT_SAMPLE_HZ
) -> list[float]:
    """Free-running current followed by a stall plateau."""
    n_free = int(round(free_s * sample_hz))
    n_stall = int(round(stall_s * sample_hz))
    trace = [
        FREE_RUN_BASE + FREE_RUN_RIPPLE * abs(math.sin(2 * math.pi * 50.0 * i / sample_hz))
        for i in range(n_free)
    ]
    trace.extend([STALL_CURRENT] * n_stall)
    return trace
