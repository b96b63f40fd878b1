"""One work cell: arm + rope scene, shared by the executor and the cameras."""

from __future__ import annotations

import threading
from typing import Optional

import numpy as np

from griprack.config import KinematicsConfig, WorkcellConfig
from griprack.kinematics.robot import RobotArm
from griprack.workcell.render import render as render_frame
from griprack.workcell.rope import RopeState, simulate_push, straight_rope


class WorkCell:
    """Owns the cell state; the arm's XY chunks drive the rope coupling.

    The rope is swept by the gripper footprint whenever the arm moves in
    the plane with the gripper lowered (actual z at or below the contact
    height).  Render snapshots are consistent: pose and rope are read
    under their locks and keyed by a scene version tuple.
    """

    def __init__(self, kin_cfg: KinematicsConfig, cell_cfg: WorkcellConfig,
                 interrupt: Optional[threading.Event] = None):
        self.cfg = cell_cfg
        self.kin_cfg = kin_cfg
        self.arm = RobotArm(kin_cfg, on_xy_segment=self._on_xy_segment, interrupt=interrupt)
        self.workspace = self.arm.workspace
        self._rope_lock = threading.Lock()
        self._rope = straight_rope(
            self.workspace,
            n_particles=cell_cfg.rope_particles,
            length_mm=cell_cfg.rope_length_mm,
            rope_radius_mm=cell_cfg.rope_radius_mm,
        )
        self._rope_version = 0
        # force the compiled rope kernels to load now, not mid-episode
        simulate_push(self._rope, ((0.0, 0.0), (1.0, 0.0)), cell_cfg.footprint_radius_mm)

    # -- rope ------------------------------------------------------------

    def _on_xy_segment(self, seg_a, seg_b) -> None:
        if self.arm.actual_z() > self.cfg.contact_z:
            return
        with self._rope_lock:
            self._rope = simulate_push(self._rope, (seg_a, seg_b), self.cfg.footprint_radius_mm)
            self._rope_version += 1

    def rope_snapshot(self) -> RopeState:
        with self._rope_lock:
            return self._rope.copy()

    def set_rope(self, rope: RopeState) -> None:
        with self._rope_lock:
            self._rope = rope.copy()
            self._rope_version += 1

    # -- scene -----------------------------------------------------------

    def scene_version(self) -> tuple[int, int]:
        with self._rope_lock:
            rope_v = self._rope_version
        return self.arm.version, rope_v

    def render_view(self, view: str) -> np.ndarray:
        snap = self.arm.snapshot()
        with self._rope_lock:
            rope = self._rope
        xy_mm = (snap.actual.x * self.workspace[0], snap.actual.y * self.workspace[1])
        return render_frame(view, snap.actual, rope, self.cfg, self.workspace, pose_xy_mm=xy_mm)
