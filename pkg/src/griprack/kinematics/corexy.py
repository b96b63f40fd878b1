"""Belt-motor step transforms for the crossed-belt XY stage.

Both stationary motors move for any straight XY translation; with the
standard belt routing the motor deltas are the sum and difference of the
Cartesian deltas:

    dA = (dx + dy) * k        dB = (dx - dy) * k

with k the configured steps-per-mm (default 80, matching a GT2/20T
pulley at 16x microstepping).  Steps are exact integers; positions that
are exact multiples of the step resolution round-trip losslessly.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_STEPS_PER_MM = 80


@dataclass(frozen=True)
class MotorSteps:
    """Signed step counts of the two belt motors."""

    steps_a: int
    steps_b: int

    def __add__(self, other: "MotorSteps") -> "MotorSteps":
        return MotorSteps(self.steps_a + other.steps_a, self.steps_b + other.steps_b)

    def __sub__(self, other: "MotorSteps") -> "MotorSteps":
        return MotorSteps(self.steps_a - other.steps_a, self.steps_b - other.steps_b)


def corexy_forward(dx_mm: float, dy_mm: float, steps_per_mm: int = DEFAULT_STEPS_PER_MM) -> MotorSteps:
    """Convert an XY displacement in mm to belt motor step deltas."""
    return MotorSteps(
        steps_a=round((dx_mm + dy_mm) * steps_per_mm),
        steps_b=round((dx_mm - dy_mm) * steps_per_mm),
    )


def corexy_inverse(steps: MotorSteps, steps_per_mm: int = DEFAULT_STEPS_PER_MM) -> tuple[float, float]:
    """Convert belt motor step deltas back to an XY displacement in mm."""
    dx = (steps.steps_a + steps.steps_b) / (2 * steps_per_mm)
    dy = (steps.steps_a - steps.steps_b) / (2 * steps_per_mm)
    return dx, dy


def mm_to_steps(x_mm: float, y_mm: float, steps_per_mm: int = DEFAULT_STEPS_PER_MM) -> MotorSteps:
    """Absolute variant of :func:`corexy_forward` (origin at the home corner)."""
    return corexy_forward(x_mm, y_mm, steps_per_mm)


def steps_to_mm(steps: MotorSteps, steps_per_mm: int = DEFAULT_STEPS_PER_MM) -> tuple[float, float]:
    """Absolute variant of :func:`corexy_inverse`."""
    return corexy_inverse(steps, steps_per_mm)
