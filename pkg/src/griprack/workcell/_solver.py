"""Compiled inner loops of the rope solver.

Sequential Gauss-Seidel over the chain edges with the anchor pinned.
fastmath stays off so the float sequence is reproducible run to run,
which the episode-replay guarantees depend on.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def relax_chain(pts, rest, iterations, bx, by, anchor_idx, tol_frac):
    """Distance-constraint relaxation in place; returns iterations used."""
    n = pts.shape[0]
    ax = pts[anchor_idx, 0]
    ay = pts[anchor_idx, 1]
    tol = tol_frac * rest
    for it in range(iterations):
        worst = 0.0
        for e in range(n - 1):
            dx = pts[e + 1, 0] - pts[e, 0]
            dy = pts[e + 1, 1] - pts[e, 1]
            dist = (dx * dx + dy * dy) ** 0.5
            if dist < 1e-12:
                dist = 1e-12
            diff = dist - rest
            if diff < 0.0:
                if -diff > worst:
                    worst = -diff
            elif diff > worst:
                worst = diff
            corr = diff / dist
            if e == anchor_idx:
                pts[e + 1, 0] -= corr * dx
                pts[e + 1, 1] -= corr * dy
            elif e + 1 == anchor_idx:
                pts[e, 0] += corr * dx
                pts[e, 1] += corr * dy
            else:
                hx = 0.5 * corr * dx
                hy = 0.5 * corr * dy
                pts[e, 0] += hx
                pts[e, 1] += hy
                pts[e + 1, 0] -= hx
                pts[e + 1, 1] -= hy
        for k in range(n):
            if pts[k, 0] < 0.0:
                pts[k, 0] = 0.0
            elif pts[k, 0] > bx:
                pts[k, 0] = bx
            if pts[k, 1] < 0.0:
                pts[k, 1] = 0.0
            elif pts[k, 1] > by:
                pts[k, 1] = by
        pts[anchor_idx, 0] = ax
        pts[anchor_idx, 1] = ay
        if worst <= tol:
            return it + 1
    return iterations


@njit(cache=True)
def sweep_disc(pts, rest, ax_, ay_, bx_, by_, radius, substep, iterations,
               settle_iterations, tol_frac, bound_x, bound_y, anchor_idx):
    """Move the footprint disc from (ax_, ay_) to (bx_, by_); returns True on contact.

    The substep grid depends only on the sweep geometry; no-contact
    substeps are skipped via conservative advancement and leave the
    particle array untouched.
    """
    dx = bx_ - ax_
    dy = by_ - ay_
    length = (dx * dx + dy * dy) ** 0.5
    n_sub = int(np.ceil(length / substep))
    if n_sub < 1:
        n_sub = 1
    adv = length / n_sub
    if length > 0.0:
        ux = dx / length
        uy = dy / length
    else:
        ux = 1.0
        uy = 0.0
    n = pts.shape[0]
    touched = False
    i = 0
    while i <= n_sub:
        cx = ax_ + ux * (adv * i)
        cy = ay_ + uy * (adv * i)
        min_d = 1e30
        any_inside = False
        for k in range(n):
            ddx = pts[k, 0] - cx
            ddy = pts[k, 1] - cy
            d = (ddx * ddx + ddy * ddy) ** 0.5
            if d < min_d:
                min_d = d
            if d < radius:
                any_inside = True
        if any_inside:
            touched = True
            for k in range(n):
                if k == anchor_idx:
                    continue
                ddx = pts[k, 0] - cx
                ddy = pts[k, 1] - cy
                d = (ddx * ddx + ddy * ddy) ** 0.5
                if d < radius:
                    if d < 1e-12:
                        pts[k, 0] = cx + ux * radius
                        pts[k, 1] = cy + uy * radius
                    else:
                        pts[k, 0] = cx + ddx / d * radius
                        pts[k, 1] = cy + ddy / d * radius
            relax_chain(pts, rest, iterations, bound_x, bound_y, anchor_idx, tol_frac)
            i += 1
        else:
            clearance = min_d - radius
            skip = 1
            if adv > 0.0:
                skip = int(clearance / adv)
                if skip < 1:
                    skip = 1
            else:
                skip = n_sub + 1
            i += skip
    if touched:
        relax_chain(pts, rest, settle_iterations, bound_x, bound_y, anchor_idx, tol_frac)
    return touched
