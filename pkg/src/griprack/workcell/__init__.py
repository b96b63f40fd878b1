"""Work cell contents: anchored rope, pushing interaction, camera views.

Submodules:
  rope    particle-chain rope under distance constraints, push/reset ops
  render  orthographic rasterizer for the top/bottom cameras, color mask
  cell    composition of one arm + rope + scene, consumed by the server
"""

from griprack.workcell.rope import (
    RopeState,
    predict_intersection,
    reset_rope,
    plan_reset_sweeps,
    simulate_push,
    straight_rope,
)
from griprack.workcell.render import (
    Frame,
    TOP_RESOLUTION,
    BOTTOM_RESOLUTION,
    render,
    segment_rope,
    view_transform,
)
from griprack.workcell.cell import WorkCell

__all__ = [
    "RopeState",
    "predict_intersection",
    "reset_rope",
    "plan_reset_sweeps",
    "simulate_push",
    "straight_rope",
    "Frame",
    "TOP_RESOLUTION",
    "BOTTOM_RESOLUTION",
    "render",
    "segment_rope",
    "view_transform",
    "WorkCell",
]
