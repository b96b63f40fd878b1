"""Piecewise-linear XY paths under a trapezoidal speed profile.

Each leg between consecutive waypoints accelerates at a_max to at most
v_max, cruises, and decelerates back to rest (triangular when the leg is
too short to reach v_max).  Stopping at every waypoint keeps the
finite-difference acceleration bounded by a_max across direction
changes.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

Point = tuple[float, float]


@dataclass(frozen=True)
class MotionProfile:
    v_max: float  # mm/s
    a_max: float  # mm/s^2

    def __post_init__(self):
        if self.v_max <= 0 or self.a_max <= 0:
            raise ValueError("v_max and a_max must be positive")


@dataclass(frozen=True)
class _Leg:
    start: Point
    end: Point
    length: float
    ux: float            # unit direction
    uy: float
    v_peak: float
    t_ramp: float        # accel (= decel) duration
    t_cruise: float
    duration: float

    def distance_at(self, tau: float) -> float:
        """Arc distance covered tau seconds into this leg."""
        if tau <= 0.0:
            return 0.0
        if tau >= self.duration:
            return self.length
        a = self.v_peak / self.t_ramp if self.t_ramp > 0 else 0.0
        if tau < self.t_ramp:
            return 0.5 * a * tau * tau
        d_ramp = 0.5 * self.v_peak * self.t_ramp
        if tau < self.t_ramp + self.t_cruise:
            return d_ramp + self.v_peak * (tau - self.t_ramp)
        remaining = self.duration - tau
        return self.length - 0.5 * a * remaining * remaining

    def point_at(self, tau: float) -> Point:
        s = self.distance_at(tau)
        return (self.start[0] + self.ux * s, self.start[1] + self.uy * s)


class Trajectory:
    """Time-parameterized path over the planned waypoints.

    ``sample(0)`` is the first waypoint and ``sample(duration)`` the
    last; the path speed never exceeds v_max and the acceleration
    magnitude never exceeds a_max.
    """

    def __init__(self, waypoints: list[Point], profile: MotionProfile, legs: list[_Leg]):
        self.waypoints = waypoints
        self.profile = profile
        self.legs = legs
        self._leg_start_times = []
        t = 0.0
        for leg in legs:
            self._leg_start_times.append(t)
            t += leg.duration
        self.duration = t

    def sample(self, t: float) -> Point:
        if not self.legs or t <= 0.0:
            return self.waypoints[0]
        if t >= self.duration:
            return self.waypoints[-1]
        i = bisect_right(self._leg_start_times, t) - 1
        leg = self.legs[i]
        return leg.point_at(t - self._leg_start_times[i])

    def arc_length(self) -> float:
        return sum(leg.length for leg in self.legs)


def _plan_leg(start: Point, end: Point, profile: MotionProfile) -> _Leg:
    dx = end[0] - start[0]
    dy = end[1] - start[1]
    length = math.hypot(dx, dy)
    v, a = profile.v_max, profile.a_max
    ramp_dist = v * v / (2.0 * a)
    if length >= 2.0 * ramp_dist:
        v_peak = v
        t_ramp = v / a
        t_cruise = (length - 2.0 * ramp_dist) / v
    else:
        v_peak = math.sqrt(a * length)
        t_ramp = v_peak / a
        t_cruise = 0.0
    return _Leg(
        start=start,
        end=end,
        length=length,
        ux=dx / length,
        uy=dy / length,
        v_peak=v_peak,
        t_ramp=t_ramp,
        t_cruise=t_cruise,
        duration=2.0 * t_ramp + t_cruise,
    )


def plan_trajectory(
    waypoints: list[Point],
    profile: MotionProfile,
    bounds: tuple[float, float] | None = None,
) -> Trajectory:
    """Plan a stop-at-each-waypoint trapezoidal trajectory.

    Args:
        waypoints: at least two XY points in workspace mm.  Consecutive
            duplicates contribute zero-duration legs and are skipped.
        profile: speed/acceleration limits.
        bounds: optional (w, h) of the workspace rectangle; any waypoint
            outside [0, w] x [0, h] raises ``ValueError``.
    """
    if len(waypoints) < 2:
        raise ValueError("a trajectory needs at least 2 waypoints")
    pts = [(float(x), float(y)) for x, y in waypoints]
    if bounds is not None:
        w, h = bounds
        for i, (x, y) in enumerate(pts):
            if not (0.0 <= x <= w and 0.0 <= y <= h):
                raise ValueError(f"waypoint {i} ({x}, {y}) outside workspace {w}x{h} mm")
    legs = []
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            continue
        legs.append(_plan_leg(a, b, profile))
    return Trajectory(pts, profile, legs)
