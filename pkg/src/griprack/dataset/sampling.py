"""Candidate push sampling and acceptance.

Candidates are straight planar sweeps whose endpoints are drawn
uniformly and independently over the workspace rectangle, with no bias
toward the rope; zero-length draws are re-drawn.  A candidate is
accepted iff it is predicted to hit the rope, either geometrically
(swept capsule against the particle chain) or from a color-segmented
camera frame (the band swept by the gripper footprint must overlap the
rope mask).  Both modes are available; rejection keeps drawing.
"""

from __future__ import annotations

import numpy as np

from griprack.config import WorkcellConfig
from griprack.workcell.render import segment_rope, sweep_band_mask
from griprack.workcell.rope import RopeState, predict_intersection

Sweep = tuple[tuple[float, float], tuple[float, float]]


def sample_push(rng: np.random.Generator, workspace_mm: tuple[float, float]) -> Sweep:
    """Draw one candidate sweep; start and end are independent uniform points."""
    w, h = workspace_mm
    while True:
        xs = rng.uniform(0.0, w, size=2)
        ys = rng.uniform(0.0, h, size=2)
        start = (float(xs[0]), float(ys[0]))
        end = (float(xs[1]), float(ys[1]))
        if (start[0] - end[0]) ** 2 + (start[1] - end[1]) ** 2 > 1e-18:
            return start, end


def accept_candidate(basis, sweep: Sweep, footprint_radius: float,
                     mode: str = "geometric", *,
                     cfg: WorkcellConfig | None = None,
                     workspace_mm: tuple[float, float] | None = None) -> bool:
    """Predicate used to reject candidates that would miss the rope.

    ``basis`` is a RopeState in geometric mode, or a top-view rope mask
    (bool array) in mask mode.
    """
    if mode == "geometric":
        if not isinstance(basis, RopeState):
            raise TypeError("geometric mode needs a RopeState basis")
        return predict_intersection(basis, sweep, footprint_radius)
    if mode == "mask":
        if workspace_mm is None:
            raise ValueError("mask mode needs workspace_mm")
        band = sweep_band_mask(sweep, footprint_radius, "top", workspace_mm)
        return bool((band & basis).any())
    raise ValueError(f"unknown acceptance mode {mode!r}")


def mask_from_frame(frame_bgr: np.ndarray, cfg: WorkcellConfig) -> np.ndarray:
    """Rope mask from a decoded camera frame (cv2 BGR order)."""
    return segment_rope(frame_bgr[:, :, ::-1], cfg)
