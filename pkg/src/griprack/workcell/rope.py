"""Anchored rope as a particle chain under distance constraints.

The rope is quasi-static: a push moves a gripper-footprint disc along a
straight sweep in small substeps, projecting any particle out of the
disc and re-solving the adjacent-distance constraints after every
substep (red-black relaxation with the anchor pinned, positions clamped
to the workspace).  Velocities are discarded, which is adequate for the
slow pushes this cell performs.

All operations are deterministic functions of their inputs; substep
grids depend only on sweep geometry, never on wall-clock pacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from griprack.workcell import _solver

Segment = tuple[tuple[float, float], tuple[float, float]]

DEFAULT_SUBSTEP_MM = 0.5
DEFAULT_ITERATIONS = 20
SETTLE_ITERATIONS = 400    # cap of the final settle pass (early exit applies)
SETTLE_TOL = 0.004         # fraction of rest length; well inside the 2% contract
RESET_MAX_SWEEPS = 12
RESET_TOL_MM = 12.5        # worst contacted deviation is the footprint radius


@dataclass
class RopeState:
    particles: np.ndarray          # (N, 2) positions in workspace mm
    rest_length: float             # mm between adjacent particles
    rope_radius: float             # visual / collision half-width, mm
    bounds: tuple[float, float]    # workspace travel (w, h), particles stay inside
    anchor_index: int = 0

    def copy(self) -> "RopeState":
        return RopeState(self.particles.copy(), self.rest_length, self.rope_radius,
                         self.bounds, self.anchor_index)

    @property
    def anchor(self) -> np.ndarray:
        return self.particles[self.anchor_index]

    def max_deviation(self, nominal_y: float | None = None) -> float:
        """Largest perpendicular distance from the nominal straight line."""
        if nominal_y is None:
            nominal_y = float(self.particles[self.anchor_index, 1])
        return float(np.max(np.abs(self.particles[:, 1] - nominal_y)))


def straight_rope(
    bounds: tuple[float, float],
    n_particles: int = 40,
    length_mm: float = 150.0,
    rope_radius_mm: float = 2.5,
    anchor_x_mm: float = 8.0,
) -> RopeState:
    """Rope at rest: anchored at the left side, straight along +x at mid-height."""
    w, h = bounds
    y = h / 2.0
    xs = anchor_x_mm + np.linspace(0.0, length_mm, n_particles)
    if xs[-1] > w:
        raise ValueError(f"rope of {length_mm} mm does not fit the {w} mm workspace")
    particles = np.column_stack([xs, np.full(n_particles, y)])
    return RopeState(particles, length_mm / (n_particles - 1), rope_radius_mm, (float(w), float(h)))


def simulate_push(
    rope: RopeState,
    sweep: Segment,
    footprint_radius: float,
    *,
    substep_mm: float = DEFAULT_SUBSTEP_MM,
    iterations: int = DEFAULT_ITERATIONS,
) -> RopeState:
    """Sweep the gripper-footprint disc along a segment and settle the rope.

    Substeps with no particle inside the disc leave the rope untouched,
    so sweeps that never come near the rope return the input positions
    bit-exactly.  After contact the chain keeps relaxing until every
    edge is within SETTLE_TOL of rest length (or the iteration cap).
    """
    if footprint_radius <= 0:
        raise ValueError("footprint_radius must be positive")
    pts = rope.particles.copy()
    _solver.sweep_disc(
        pts,
        rope.rest_length,
        float(sweep[0][0]), float(sweep[0][1]),
        float(sweep[1][0]), float(sweep[1][1]),
        float(footprint_radius),
        float(substep_mm),
        int(iterations),
        SETTLE_ITERATIONS,
        SETTLE_TOL,
        float(rope.bounds[0]), float(rope.bounds[1]),
        int(rope.anchor_index),
    )
    return RopeState(pts, rope.rest_length, rope.rope_radius, rope.bounds, rope.anchor_index)


def _point_segment_dist(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points p (N, 2) to segment ab."""
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-18:
        return np.hypot(p[:, 0] - a[0], p[:, 1] - a[1])
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(p[:, 0] - proj[:, 0], p[:, 1] - proj[:, 1])


def _segments_cross(a, b, p, q) -> np.ndarray:
    """Proper/improper intersection test of segment ab against edges (p[i], q[i])."""
    def orient(o, s, t):
        return (s[..., 0] - o[..., 0]) * (t[..., 1] - o[..., 1]) - \
               (s[..., 1] - o[..., 1]) * (t[..., 0] - o[..., 0])

    d1 = orient(p, q, a[None, :])
    d2 = orient(p, q, b[None, :])
    d3 = orient(a[None, :], b[None, :], p)
    d4 = orient(a[None, :], b[None, :], q)
    return (d1 * d2 <= 0) & (d3 * d4 <= 0) & ~((d1 == 0) & (d2 == 0) & (d3 == 0) & (d4 == 0))


def sweep_polyline_distance(rope: RopeState, sweep: Segment) -> float:
    """Minimum distance between the sweep segment and the rope polyline."""
    a = np.asarray(sweep[0], dtype=float)
    b = np.asarray(sweep[1], dtype=float)
    pts = rope.particles
    p, q = pts[:-1], pts[1:]
    degenerate = float((b - a) @ (b - a)) < 1e-18
    if not degenerate and bool(_segments_cross(a, b, p, q).any()):
        return 0.0
    d = float(_point_segment_dist(pts, a, b).min())
    for endpoint in (a, b):
        ab = q - p
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(np.einsum("ij,ij->i", endpoint - p, ab) / np.where(denom < 1e-18, 1.0, denom), 0.0, 1.0)
        proj = p + t[:, None] * ab
        d = min(d, float(np.hypot(endpoint[0] - proj[:, 0], endpoint[1] - proj[:, 1]).min()))
    # colinear overlap of degenerate orientation cases is covered by the
    # endpoint distances above
    return d


def predict_intersection(rope: RopeState, sweep: Segment, footprint_radius: float) -> bool:
    """True iff the swept capsule (dilated by footprint + rope radius) reaches the rope."""
    if footprint_radius <= 0:
        raise ValueError("footprint_radius must be positive")
    return sweep_polyline_distance(rope, sweep) <= footprint_radius + rope.rope_radius


def apply_sweep_path(rope: RopeState, path: list, footprint_radius: float,
                     **push_kwargs) -> RopeState:
    """Run simulate_push over each leg of a polyline sweep."""
    state = rope
    for a, b in zip(path[:-1], path[1:]):
        state = simulate_push(state, (a, b), footprint_radius, **push_kwargs)
    return state


def _comb_rake(offender_x: np.ndarray, nominal_y: float, reach: float,
               side: int, bounds, footprint_radius: float) -> list:
    """One comb stroke: descend to the nominal line at stations covering
    the offending x-range, lifting clear of the rope between stations."""
    w, h = bounds
    spacing = 1.5 * footprint_radius
    stations: list[float] = []
    for x in np.sort(offender_x):
        if not stations or x > stations[-1] + spacing:
            stations.append(float(np.clip(x, 1.0, w - 1.0)))
    y_hi = float(np.clip(nominal_y + side * reach, 1.0, h - 1.0))
    path: list = []
    for xs in stations:
        path.extend([(xs, y_hi), (xs, nominal_y), (xs, y_hi)])
    return path


def plan_reset_sweeps(
    rope: RopeState,
    footprint_radius: float,
    *,
    nominal_y: float | None = None,
    max_sweeps: int = RESET_MAX_SWEEPS,
    tol_mm: float = RESET_TOL_MM,
    substep_mm: float = DEFAULT_SUBSTEP_MM,
    iterations: int = DEFAULT_ITERATIONS,
) -> tuple[RopeState, list[list]]:
    """Plan (and simulate) combing sweeps that straighten the rope.

    Each sweep is one continuous comb stroke: a polyline that descends
    onto the nominal line at stations spaced under the footprint
    diameter, anchor-outward, covering the offending span of one side.
    Every contacted particle ends within one footprint radius of the
    line; the sides are raked alternately until every particle is within
    tol_mm or the sweep budget is exhausted.  Returns the settled state
    and the sweep paths used (at most max_sweeps).
    """
    if nominal_y is None:
        nominal_y = float(rope.anchor[1])
    state = rope
    sweeps: list[list] = []
    while len(sweeps) < max_sweeps:
        dev = state.particles[:, 1] - nominal_y
        above = np.flatnonzero(dev > tol_mm)
        below = np.flatnonzero(dev < -tol_mm)
        if len(above) == 0 and len(below) == 0:
            break
        # rake the side with the larger total violation first
        if np.sum(np.abs(dev[above])) >= np.sum(np.abs(dev[below])):
            side, offenders = 1, above
        else:
            side, offenders = -1, below
        reach = float(np.abs(dev[offenders]).max()) + footprint_radius + 4.0
        path = _comb_rake(state.particles[offenders, 0], nominal_y, reach,
                          side, rope.bounds, footprint_radius)
        state = apply_sweep_path(state, path, footprint_radius,
                                 substep_mm=substep_mm, iterations=iterations)
        sweeps.append(path)
    return state, sweeps


def reset_rope(
    rope: RopeState,
    footprint_radius: float,
    **kwargs,
) -> tuple[RopeState, list[list]]:
    """Straighten the rope with the deterministic combing procedure."""
    return plan_reset_sweeps(rope, footprint_radius, **kwargs)
