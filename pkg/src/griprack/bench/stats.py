"""Sample statistics used by the benchmark reports.

Latency percentiles use the nearest-rank definition: the p-th
percentile of n sorted samples is the ceil(p/100 * n)-th smallest.
Repeatability quartiles use linear interpolation, matching the usual
box-plot statistics.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def percentile_nearest_rank(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile (p in (0, 100]) of a non-empty sample."""
    if len(values) == 0:
        raise ValueError("empty sample")
    ordered = sorted(values)
    rank = max(1, math.ceil(p / 100.0 * len(ordered)))
    return ordered[rank - 1]


def compute_percentiles(latencies: Sequence[float]) -> tuple[float, float, float]:
    """(p50, p95, max) of a non-empty latency sample, nearest-rank."""
    if len(latencies) == 0:
        raise ValueError("empty sample")
    ordered = sorted(latencies)
    n = len(ordered)
    p50 = ordered[max(1, math.ceil(0.50 * n)) - 1]
    p95 = ordered[max(1, math.ceil(0.95 * n)) - 1]
    return p50, p95, ordered[-1]


def box_stats(values: Sequence[float]) -> dict:
    """Box-plot statistics: range, linear-interpolation quartiles, std."""
    if len(values) == 0:
        raise ValueError("empty sample")
    arr = np.asarray(values, dtype=float)
    return {
        "n": int(arr.size),
        "min": float(arr.min()),
        "q1": float(np.percentile(arr, 25)),
        "median": float(np.percentile(arr, 50)),
        "q3": float(np.percentile(arr, 75)),
        "max": float(arr.max()),
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
    }
