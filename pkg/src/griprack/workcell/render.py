"""Orthographic camera views of the cell.

The top camera delivers 1280x720 frames, the bottom camera 640x480.
Both map the workspace travel rectangle into the frame with a uniform
px/mm scale; the surrounding floor fills the rest of the image.  The
bottom camera looks up through the transparent floor plate, so its view
is mirrored in X and the rope is drawn over the gripper (nothing
occludes the rope from below).  With the opaque inlay installed the
bottom camera sees only the inlay.

Rasterization is flat-shaded without anti-aliasing, so identical scene
state yields bit-identical rasters.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from griprack.config import WorkcellConfig
from griprack.workcell.rope import RopeState

# the internal thread pool causes multi-ms latency spikes on small hosts
# and fights the many python-level threads this package runs
cv2.setNumThreads(1)

TOP_RESOLUTION = (1280, 720)      # (width, height)
BOTTOM_RESOLUTION = (640, 480)
SEGMENT_THRESHOLD = 60.0          # euclidean RGB distance to the rope color


@dataclass(frozen=True)
class Frame:
    view: str                     # "top" | "bottom"
    width: int
    height: int
    pixels: np.ndarray            # (H, W, 3) uint8, RGB
    timestamp_ms: float           # monotonic milliseconds
    sequence: int


def resolution(view: str) -> tuple[int, int]:
    if view == "top":
        return TOP_RESOLUTION
    if view == "bottom":
        return BOTTOM_RESOLUTION
    raise ValueError(f"unknown view {view!r}")


def view_transform(view: str, workspace_mm: tuple[float, float]):
    """Return (scale px/mm, offset px, mirror_x) mapping workspace mm to pixels."""
    width, height = resolution(view)
    w_mm, h_mm = workspace_mm
    scale = min(width / w_mm, height / h_mm)
    off_x = (width - w_mm * scale) / 2.0
    off_y = (height - h_mm * scale) / 2.0
    return scale, (off_x, off_y), view == "bottom"


def project_mm(points_mm: np.ndarray, view: str, workspace_mm) -> np.ndarray:
    """Workspace mm -> integer pixel coordinates for the given view."""
    scale, (off_x, off_y), mirror = view_transform(view, workspace_mm)
    pts = np.atleast_2d(np.asarray(points_mm, dtype=float))
    px = off_x + pts[:, 0] * scale
    py = off_y + pts[:, 1] * scale
    if mirror:
        px = resolution(view)[0] - 1 - px
    return np.column_stack([np.round(px), np.round(py)]).astype(np.int32)


def _shade(color, lighting: float) -> tuple[int, int, int]:
    return tuple(int(np.clip(round(c * lighting), 0, 255)) for c in color)


def _draw_rope(img, rope: RopeState, cfg: WorkcellConfig, view: str, workspace_mm):
    scale, _, _ = view_transform(view, workspace_mm)
    pts = project_mm(rope.particles, view, workspace_mm)
    thickness = max(1, round(2.0 * rope.rope_radius * scale))
    cv2.polylines(img, [pts.reshape(-1, 1, 2)], False,
                  _shade(cfg.rope_color, cfg.lighting), thickness, lineType=cv2.LINE_8)


def _draw_gripper(img, pose_xy_mm, r_deg: float, d: float, cfg: WorkcellConfig,
                  view: str, workspace_mm):
    scale, _, mirror = view_transform(view, workspace_mm)
    center = project_mm(np.array([pose_xy_mm]), view, workspace_mm)[0]
    radius = max(1, round(cfg.footprint_radius_mm * scale))
    color = _shade(cfg.gripper_color, cfg.lighting)
    cv2.circle(img, tuple(center), radius, color, -1, lineType=cv2.LINE_8)
    # orientation tick and jaw marks; the jaw gap scales with the opening d
    angle = np.deg2rad(r_deg)
    direction = np.array([np.cos(angle), np.sin(angle)])
    if mirror:
        direction = np.array([-direction[0], direction[1]])
    tick_color = _shade(tuple(min(255, c + 120) for c in cfg.gripper_color), cfg.lighting)
    tip = (center + direction * radius).astype(np.int32)
    cv2.line(img, tuple(center), tuple(tip), tick_color, 2, lineType=cv2.LINE_8)
    normal = np.array([-direction[1], direction[0]])
    half_gap = (0.25 + 0.6 * d) * radius
    for side in (-1.0, 1.0):
        jaw_c = center + normal * half_gap * side
        j0 = (jaw_c - direction * radius * 0.5).astype(np.int32)
        j1 = (jaw_c + direction * radius * 0.5).astype(np.int32)
        cv2.line(img, tuple(j0), tuple(j1), tick_color, 2, lineType=cv2.LINE_8)


def render(view: str, pose, rope: RopeState | None, cfg: WorkcellConfig,
           workspace_mm: tuple[float, float], pose_xy_mm=None) -> np.ndarray:
    """Rasterize one camera view; returns an (H, W, 3) uint8 RGB array.

    ``pose`` carries r/d for the gripper glyph; ``pose_xy_mm`` is the
    gripper center in workspace mm (computed from pose when omitted).
    """
    width, height = resolution(view)
    floor = _shade(cfg.floor_color, cfg.lighting)
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = floor
    if view == "bottom" and cfg.floor_mode != "transparent":
        return img
    if pose is not None and pose_xy_mm is None:
        pose_xy_mm = (pose.x * workspace_mm[0], pose.y * workspace_mm[1])
    if view == "top":
        if rope is not None:
            _draw_rope(img, rope, cfg, view, workspace_mm)
        if pose is not None:
            _draw_gripper(img, pose_xy_mm, pose.r, pose.d, cfg, view, workspace_mm)
    else:
        if pose is not None:
            _draw_gripper(img, pose_xy_mm, pose.r, pose.d, cfg, view, workspace_mm)
        if rope is not None:
            _draw_rope(img, rope, cfg, view, workspace_mm)
    return img


def segment_rope(pixels: np.ndarray, cfg: WorkcellConfig,
                 threshold: float = SEGMENT_THRESHOLD) -> np.ndarray:
    """Boolean mask of pixels whose color is close to the rope color."""
    target = np.array(_shade(cfg.rope_color, cfg.lighting), dtype=np.int32)
    diff = pixels.astype(np.int32) - target
    return np.einsum("...i,...i->...", diff, diff) < threshold * threshold


def sweep_band_mask(sweep_mm, band_radius_mm: float, view: str,
                    workspace_mm) -> np.ndarray:
    """Rasterize the swept band (sweep segment dilated by band_radius) as a mask."""
    width, height = resolution(view)
    scale, _, _ = view_transform(view, workspace_mm)
    canvas = np.zeros((height, width), dtype=np.uint8)
    pts = project_mm(np.array([sweep_mm[0], sweep_mm[1]]), view, workspace_mm)
    thickness = max(1, round(2.0 * band_radius_mm * scale))
    cv2.line(canvas, tuple(pts[0]), tuple(pts[1]), 1, thickness, lineType=cv2.LINE_8)
    cv2.circle(canvas, tuple(pts[0]), max(1, round(band_radius_mm * scale)), 1, -1)
    cv2.circle(canvas, tuple(pts[1]), max(1, round(band_radius_mm * scale)), 1, -1)
    return canvas.astype(bool)
