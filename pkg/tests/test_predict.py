import numpy as np
import pytest

from griprack.config import WorkcellConfig
from griprack.workcell.render import render, segment_rope, sweep_band_mask
from griprack.workcell.rope import predict_intersection, simulate_push, straight_rope

WORKSPACE = (190.0, 250.0)
CFG = WorkcellConfig()
FP = CFG.footprint_radius_mm


def pixel_oracle(mask, sweep):
    """Brute-force check: rasterized swept band overlaps the rope mask.

    The band is the area covered by the gripper footprint; the mask
    already extends one rope radius around the centerline, so overlap
    means the footprint touched the rope surface.
    """
    band = sweep_band_mask(sweep, FP, "top", WORKSPACE)
    return bool((band & mask).any())


def agreement_rate(rope, n, seed):
    img = render("top", None, rope, CFG, WORKSPACE)
    mask = segment_rope(img, CFG)
    rng = np.random.default_rng(seed)
    agree = 0
    for _ in range(n):
        a = tuple(rng.uniform((0, 0), WORKSPACE))
        b = tuple(rng.uniform((0, 0), WORKSPACE))
        geometric = predict_intersection(rope, (a, b), FP)
        pixel = pixel_oracle(mask, (a, b))
        agree += geometric == pixel
    return agree / n


def test_agreement_straight_rope():
    assert agreement_rate(straight_rope(WORKSPACE), 2000, seed=1) >= 0.99


def test_agreement_perturbed_rope():
    rng = np.random.default_rng(17)
    state = straight_rope(WORKSPACE)
    for _ in range(6):
        a = tuple(rng.uniform((0, 0), WORKSPACE))
        b = tuple(rng.uniform((0, 0), WORKSPACE))
        state = simulate_push(state, (a, b), FP)
    assert agreement_rate(state, 2000, seed=2) >= 0.99
