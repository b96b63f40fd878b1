"""Stateful 5-DOF arm.

Commanded XY position lives in integer belt-motor steps; z, rotation and
gripper opening are servo axes.  The actual (reached) pose is the
commanded pose plus a standing error, replaced on every move by the
per-robot systematic offset plus a fresh noise draw, and clamped to the
configuration ranges.  Homing clears the standing XY error: the
calibration switches define (0, 0) physically.

Motion is executed in geometric chunks (<= 5 mm along the XY path) so
that rope coupling and replay are independent of wall-clock pacing:
running with time_scale 0 produces end states bit-identical to running
in real time.
"""

from __future__ import annotations

import struct
import threading
import time
import zlib
from dataclasses import dataclass
from math import ceil
from typing import Callable, Optional

from griprack.config import KinematicsConfig
from griprack.kinematics import collision as cur
from griprack.kinematics.collision import CollisionEvent
from griprack.kinematics.corexy import MotorSteps, mm_to_steps, steps_to_mm
from griprack.kinematics.noise import NoiseModel, draw_robot_offsets
from griprack.kinematics.trajectory import MotionProfile, plan_trajectory

XY_CHUNK_MM = 5.0       # rope-coupling granularity along the XY path
SERVO_STEP_S = 0.02     # pose-update granularity of servo slews, sim seconds

R_MIN, R_MAX = -90.0, 90.0


class RangeError(ValueError):
    """A commanded value lies outside its configuration range."""

    def __init__(self, field: str, value: float, lo: float, hi: float):
        self.field = field
        super().__init__(f"{field}={value} outside [{lo}, {hi}]")


class NotHomedError(RuntimeError):
    pass


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class RobotPose:
    x: float  # normalized [0, 1]
    y: float  # normalized [0, 1]
    z: float  # normalized [0, 1], 0 = touching the floor plate
    r: float  # degrees [-90, 90]
    d: float  # gripper opening [0, 1], 0 = closed

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "r": self.r, "d": self.d}


@dataclass(frozen=True)
class PoseSnapshot:
    commanded: RobotPose
    actual: RobotPose
    version: int
    nonce: int
    homed: bool

    @staticmethod
    def compute_nonce(version: int, commanded: RobotPose, actual: RobotPose) -> int:
        raw = struct.pack(
            "<q10d",
            version,
            commanded.x, commanded.y, commanded.z, commanded.r, commanded.d,
            actual.x, actual.y, actual.z, actual.r, actual.d,
        )
        return zlib.crc32(raw)


class MotionPacer:
    """Maps simulated motion time onto wall time (scale 0 = run instantly)."""

    def __init__(self, time_scale: float, interrupt: Optional[threading.Event] = None):
        self.scale = time_scale
        self.interrupt = interrupt
        self.t0 = time.monotonic()

    def wait_until(self, sim_t: float) -> None:
        if self.scale <= 0.0:
            return
        deadline = self.t0 + sim_t * self.scale
        while True:
            if self.interrupt is not None and self.interrupt.is_set():
                return
            dt = deadline - time.monotonic()
            if dt <= 0:
                return
            time.sleep(min(dt, 0.05))


class RobotArm:
    """Single arm; exactly one executor may run motions at a time.

    Pose reads are safe from any thread and return a consistent
    snapshot (version plus checksum, taken under the state lock).
    """

    def __init__(
        self,
        cfg: KinematicsConfig,
        on_xy_segment: Optional[Callable[[tuple, tuple], None]] = None,
        interrupt: Optional[threading.Event] = None,
    ):
        self.cfg = cfg
        self.workspace = (float(cfg.workspace_mm[0]), float(cfg.workspace_mm[1]))
        self.profile = MotionProfile(cfg.v_max, cfg.a_max)
        self.noise = NoiseModel(cfg.sigma_xy_mm, cfg.sigma_z_mm, cfg.seed)
        self.offsets = draw_robot_offsets(cfg.seed, cfg.sigma_offset_xy_mm, cfg.sigma_offset_z_mm)
        self.on_xy_segment = on_xy_segment
        self._interrupt = interrupt
        self._lock = threading.Lock()
        self._steps = MotorSteps(0, 0)
        self._cmd_z = 1.0
        self._cmd_r = 0.0
        self._cmd_d = 1.0
        self._xy_err = (0.0, 0.0)     # standing error in mm; replaced per move
        self._z_err = 0.0             # standing error in mm
        self._interp: dict[str, float | tuple] = {}   # in-flight actual positions
        self._version = 0
        self._homed = False
        self.last_collision: Optional[CollisionEvent] = None

    # -- pose reads --------------------------------------------------------

    def _cmd_xy_mm(self) -> tuple[float, float]:
        return steps_to_mm(self._steps, self.cfg.steps_per_mm)

    def _actual_xy_mm_locked(self) -> tuple[float, float]:
        base = self._interp.get("xy") or self._cmd_xy_mm()
        w, h = self.workspace
        return (
            _clamp(base[0] + self._xy_err[0], 0.0, w),
            _clamp(base[1] + self._xy_err[1], 0.0, h),
        )

    def _commanded_locked(self) -> RobotPose:
        cx, cy = self._cmd_xy_mm()
        w, h = self.workspace
        return RobotPose(cx / w, cy / h, self._cmd_z, self._cmd_r, self._cmd_d)

    def _actual_locked(self) -> RobotPose:
        ax, ay = self._actual_xy_mm_locked()
        w, h = self.workspace
        z = self._interp.get("z", self._cmd_z) + self._z_err / self.cfg.z_travel_mm
        return RobotPose(
            ax / w,
            ay / h,
            _clamp(z, 0.0, 1.0),
            _clamp(self._interp.get("r", self._cmd_r), R_MIN, R_MAX),
            _clamp(self._interp.get("d", self._cmd_d), 0.0, 1.0),
        )

    def snapshot(self) -> PoseSnapshot:
        with self._lock:
            commanded = self._commanded_locked()
            actual = self._actual_locked()
            nonce = PoseSnapshot.compute_nonce(self._version, commanded, actual)
            return PoseSnapshot(commanded, actual, self._version, nonce, self._homed)

    def actual_xy_mm(self) -> tuple[float, float]:
        with self._lock:
            return self._actual_xy_mm_locked()

    def actual_z(self) -> float:
        with self._lock:
            return self._actual_locked().z

    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    @property
    def homed(self) -> bool:
        with self._lock:
            return self._homed

    def motor_steps(self) -> MotorSteps:
        with self._lock:
            return self._steps

    # -- calibration ---------------------------------------------------------

    def home_calibrate(self) -> float:
        """Drive to the home corner and zero the belt step counters.

        The calibration switches define (0, 0) physically, so the
        standing XY error is cleared: afterwards commanded == actual ==
        (0, 0) exactly.  z/r/d are untouched.  Returns the motion
        duration in simulated seconds.
        """
        with self._lock:
            start = self._cmd_xy_mm()
        duration = 0.0
        if start != (0.0, 0.0):
            duration = self._run_xy_path([start, (0.0, 0.0)])
        with self._lock:
            self._steps = MotorSteps(0, 0)
            self._xy_err = (0.0, 0.0)
            self._interp.pop("xy", None)
            self._homed = True
            self._version += 1
        return duration

    # -- motion ----------------------------------------------------------

    def _require_homed(self):
        if not self.homed:
            raise NotHomedError("robot is not homed; calibrate first")

    def move_xy(self, x: Optional[float] = None, y: Optional[float] = None,
                waypoints: Optional[list] = None) -> float:
        """Move in the plane to a normalized target or through waypoints.

        Raises RangeError for targets outside [0, 1]; returns the motion
        duration in simulated seconds (0 when already at the target).
        """
        self._require_homed()
        w, h = self.workspace
        if waypoints is not None:
            if not waypoints:
                raise ValueError("waypoint list may not be empty")
            pts_n = [(float(px), float(py)) for px, py in waypoints]
        else:
            with self._lock:
                cx, cy = self._cmd_xy_mm()
            tx = cx / w if x is None else float(x)
            ty = cy / h if y is None else float(y)
            pts_n = [(tx, ty)]
        for px, py in pts_n:
            if not 0.0 <= px <= 1.0:
                raise RangeError("x", px, 0.0, 1.0)
            if not 0.0 <= py <= 1.0:
                raise RangeError("y", py, 0.0, 1.0)
        return self.move_xy_mm([(px * w, py * h) for px, py in pts_n])

    def move_xy_mm(self, points_mm: list) -> float:
        """Raw mm-space move through the given points.

        Points beyond the workspace travel are reachable only until the
        stage hits the end stop: the path is truncated at the wall, the
        stall shows up in the motor current and a CollisionEvent is
        recorded.  Returns the executed motion duration.
        """
        self._require_homed()
        with self._lock:
            start = self._cmd_xy_mm()
        path, clipped_axis = self._clip_path([start, *[(float(x), float(y)) for x, y in points_mm]])
        end = path[-1]
        moved = end != start or len(path) > 2
        duration = 0.0
        if moved:
            duration = self._run_xy_path(path)
            nx, ny = self.noise.draw_xy()
            with self._lock:
                self._steps = mm_to_steps(end[0], end[1], self.cfg.steps_per_mm)
                self._xy_err = (self.offsets[0] + nx, self.offsets[1] + ny)
                self._interp.pop("xy", None)
                self._version += 1
        if clipped_axis is not None:
            self._record_wall_stall(clipped_axis, duration)
        return duration

    def _clip_path(self, pts: list):
        """Truncate a path at the first workspace wall crossing."""
        w, h = self.workspace
        out = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            if 0.0 <= b[0] <= w and 0.0 <= b[1] <= h:
                out.append(b)
                continue
            t_exit = 1.0
            axis = None
            for i, (lo, hi) in enumerate(((0.0, w), (0.0, h))):
                d = b[i] - a[i]
                if d > 0 and b[i] > hi:
                    t = (hi - a[i]) / d
                elif d < 0 and b[i] < lo:
                    t = (lo - a[i]) / d
                else:
                    continue
                if t < t_exit:
                    t_exit = t
                    axis = "x" if i == 0 else "y"
            contact = (
                _clamp(a[0] + (b[0] - a[0]) * t_exit, 0.0, w),
                _clamp(a[1] + (b[1] - a[1]) * t_exit, 0.0, h),
            )
            if contact != out[-1]:
                out.append(contact)
            return out, axis
        return out, None

    def _record_wall_stall(self, axis: str, motion_duration: float) -> None:
        trace = cur.synth_current_trace(free_s=max(motion_duration, 0.001), stall_s=0.01,
                                        sample_hz=self.cfg.current_sample_hz)
        self.last_collision = cur.detect_collision(
            trace,
            self.cfg.current_threshold,
            debounce=self.cfg.current_debounce,
            sample_hz=self.cfg.current_sample_hz,
            axis=axis,
            pose_at_stop=self.snapshot().actual,
        )

    def _run_xy_path(self, path: list) -> float:
        """Execute the path in <= XY_CHUNK_MM geometric chunks.

        The chunk grid depends only on the path geometry, so end states
        are identical at any time_scale.  Each chunk updates the pose
        and feeds the workcell's rope coupling with the actual segment.
        """
        traj = plan_trajectory(path, self.profile)
        pacer = MotionPacer(self.cfg.time_scale, self._interrupt)
        t_leg = 0.0
        for leg in traj.legs:
            n = max(1, ceil(leg.length / XY_CHUNK_MM))
            prev = leg.start
            for i in range(1, n + 1):
                s = leg.length * i / n
                pacer.wait_until(t_leg + _leg_time_at_distance(leg, s))
                point = (leg.start[0] + leg.ux * s, leg.start[1] + leg.uy * s)
                with self._lock:
                    self._interp["xy"] = point
                    self._version += 1
                    err = self._xy_err
                if self.on_xy_segment is not None:
                    self.on_xy_segment(
                        (prev[0] + err[0], prev[1] + err[1]),
                        (point[0] + err[0], point[1] + err[1]),
                    )
                prev = point
            t_leg += leg.duration
        return traj.duration

    def move_z(self, z: float) -> float:
        self._require_homed()
        z = float(z)
        if not 0.0 <= z <= 1.0:
            raise RangeError("z", z, 0.0, 1.0)
        duration = self._slew_axis("z", self._cmd_z, z, abs(z - self._cmd_z) * self.cfg.servo_z_travel_s)
        if duration > 0.0:
            nz = self.noise.draw_z()
            with self._lock:
                self._cmd_z = z
                self._z_err = self.offsets[2] + nz
                self._interp.pop("z", None)
                self._version += 1
        return duration

    def rotate(self, r: float) -> float:
        self._require_homed()
        r = float(r)
        if not R_MIN <= r <= R_MAX:
            raise RangeError("r", r, R_MIN, R_MAX)
        duration = self._slew_axis("r", self._cmd_r, r, abs(r - self._cmd_r) / self.cfg.servo_r_deg_per_s)
        if duration > 0.0:
            with self._lock:
                self._cmd_r = r
                self._interp.pop("r", None)
                self._version += 1
        return duration

    def gripper(self, d: float) -> float:
        self._require_homed()
        d = float(d)
        if not 0.0 <= d <= 1.0:
            raise RangeError("d", d, 0.0, 1.0)
        duration = self._slew_axis("d", self._cmd_d, d, abs(d - self._cmd_d) * self.cfg.servo_d_travel_s)
        if duration > 0.0:
            with self._lock:
                self._cmd_d = d
                self._interp.pop("d", None)
                self._version += 1
        return duration

    def _slew_axis(self, axis: str, start: float, target: float, duration: float) -> float:
        if start == target:
            return 0.0
        pacer = MotionPacer(self.cfg.time_scale, self._interrupt)
        n = max(1, ceil(duration / SERVO_STEP_S))
        for i in range(1, n + 1):
            pacer.wait_until(duration * i / n)
            with self._lock:
                self._interp[axis] = start + (target - start) * i / n
                self._version += 1
        return duration

    def execute_move(self, target: dict) -> float:
        """Execute a partial pose target; axes run sequentially (XY, z, r, d).

        Returns the total simulated duration.
        """
        total = 0.0
        if "x" in target or "y" in target:
            total += self.move_xy(target.get("x"), target.get("y"))
        if "z" in target:
            total += self.move_z(target["z"])
        if "r" in target:
            total += self.rotate(target["r"])
        if "d" in target:
            total += self.gripper(target["d"])
        return total


def _leg_time_at_distance(leg, s: float) -> float:
    if s <= 0.0:
        return 0.0
    if s >= leg.length:
        return leg.duration
    a = leg.v_peak / leg.t_ramp if leg.t_ramp > 0 else 0.0
    d_ramp = 0.5 * leg.v_peak * leg.t_ramp
    if s <= d_ramp:
        return (2.0 * s / a) ** 0.5
    if s <= d_ramp + leg.v_peak * leg.t_cruise:
        return leg.t_ramp + (s - d_ramp) / leg.v_peak
    remaining = leg.length - s
    return leg.duration - (2.0 * remaining / a) ** 0.5
