import numpy as np
import pytest
from hypothesis import given, strategies as st

from griprack.kinematics import MotorSteps, corexy_forward, corexy_inverse


def test_identity():
    assert corexy_forward(0, 0) == MotorSteps(0, 0)
    assert corexy_inverse(MotorSteps(0, 0)) == (0.0, 0.0)


def test_unit_x():
    assert corexy_forward(1.0, 0.0, steps_per_mm=80) == MotorSteps(80, 80)
    assert corexy_inverse(MotorSteps(80, 80), steps_per_mm=80) == (1.0, 0.0)


def test_mixed_displacement():
    # dA = (3 + -2) * 80 = 80, dB = (3 - -2) * 80 = 400
    assert corexy_forward(3.0, -2.0, steps_per_mm=80) == MotorSteps(80, 400)


def test_round_trip_seeded_lattice():
    # 1000 random displacements on the step lattice round-trip exactly
    rng = np.random.default_rng(42)
    k = 80
    steps = rng.integers(-20000, 20000, size=(1000, 2))
    for sx, sy in steps:
        dx, dy = sx / k, sy / k
        ms = corexy_forward(dx, dy, k)
        assert corexy_inverse(ms, k) == (dx, dy)


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_round_trip_property(sx, sy):
    k = 80
    dx, dy = sx / k, sy / k
    assert corexy_inverse(corexy_forward(dx, dy, k), k) == (dx, dy)


@given(st.integers(-10**5, 10**5), st.integers(-10**5, 10**5))
def test_steps_are_exact_integers(sa, sb):
    ms = MotorSteps(sa, sb) + MotorSteps(1, -1) - MotorSteps(1, -1)
    assert isinstance(ms.steps_a, int) and isinstance(ms.steps_b, int)
    assert ms == MotorSteps(sa, sb)
