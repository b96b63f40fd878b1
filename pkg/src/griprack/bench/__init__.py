"""Client library and experiment harnesses for the rack API."""

from griprack.bench.client import RobotClient, RegistryClient, ApiError
from griprack.bench.stats import compute_percentiles, percentile_nearest_rank, box_stats

__all__ = [
    "RobotClient",
    "RegistryClient",
    "ApiError",
    "compute_percentiles",
    "percentile_nearest_rank",
    "box_stats",
]
