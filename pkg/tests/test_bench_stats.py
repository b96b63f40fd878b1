import numpy as np
import pytest

from griprack.bench.stats import box_stats, compute_percentiles, percentile_nearest_rank


def sort_oracle(values, p):
    """Brute-force nearest-rank reference."""
    import math
    ordered = sorted(values)
    return ordered[max(1, math.ceil(p / 100 * len(ordered))) - 1]


def test_singleton():
    assert compute_percentiles([10.0]) == (10.0, 10.0, 10.0)


def test_one_to_hundred():
    values = list(range(1, 101))
    p50, p95, mx = compute_percentiles(values)
    assert (p50, p95, mx) == (50, 95, 100)


def test_empty_rejected():
    with pytest.raises(ValueError):
        compute_percentiles([])
    with pytest.raises(ValueError):
        percentile_nearest_rank([], 50)
    with pytest.raises(ValueError):
        box_stats([])


def test_exponential_draws_match_sort_oracle():
    rng = np.random.default_rng(123)
    values = rng.exponential(10.0, size=10_000).tolist()
    p50, p95, mx = compute_percentiles(values)
    assert p50 == sort_oracle(values, 50)
    assert p95 == sort_oracle(values, 95)
    assert mx == max(values)
    for p in (1, 25, 50, 75, 90, 95, 99, 100):
        assert percentile_nearest_rank(values, p) == sort_oracle(values, p)


def test_box_stats_match_numpy():
    rng = np.random.default_rng(5)
    values = rng.normal(0, 1, size=500)
    st = box_stats(values)
    assert st["q1"] == pytest.approx(np.percentile(values, 25))
    assert st["median"] == pytest.approx(np.median(values))
    assert st["q3"] == pytest.approx(np.percentile(values, 75))
    assert st["std"] == pytest.approx(values.std(ddof=1))
    assert st["min"] == values.min() and st["max"] == values.max()
