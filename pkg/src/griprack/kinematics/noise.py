"""Seeded actuation noise.

Each executed move perturbs the reached position by a zero-mean
gaussian draw per affected axis.  A separate stream draws the per-robot
systematic offsets once, so toggling the offset model never shifts the
per-move sequence.  sigma == 0 short-circuits to exactly 0.0, which
makes zero-noise runs bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class NoiseModel:
    sigma_xy_mm: float = 0.0
    sigma_z_mm: float = 0.0
    seed: int = 0
    _moves: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.sigma_xy_mm < 0 or self.sigma_z_mm < 0:
            raise ValueError("sigma must be >= 0")
        self._moves = np.random.default_rng([self.seed, 0])

    def draw_xy(self) -> tuple[float, float]:
        """Per-move XY error in mm (one draw per axis)."""
        if self.sigma_xy_mm == 0.0:
            return 0.0, 0.0
        n = self._moves.normal(0.0, self.sigma_xy_mm, size=2)
        return float(n[0]), float(n[1])

    def draw_z(self) -> float:
        if self.sigma_z_mm == 0.0:
            return 0.0
        return float(self._moves.normal(0.0, self.sigma_z_mm))


def draw_robot_offsets(
    seed: int, sigma_offset_xy_mm: float, sigma_offset_z_mm: float
) -> tuple[float, float, float]:
    """Systematic per-robot (x, y, z) offsets in mm, drawn once at build time."""
    rng = np.random.default_rng([seed, 1])
    ox = oy = oz = 0.0
    if sigma_offset_xy_mm > 0:
        ox, oy = (float(v) for v in rng.normal(0.0, sigma_offset_xy_mm, size=2))
    if sigma_offset_z_mm > 0:
        oz = float(rng.normal(0.0, sigma_offset_z_mm))
    return ox, oy, oz
