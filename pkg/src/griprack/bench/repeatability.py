"""Repeatability protocol.

Each robot is driven linearly through a set of uniformly sampled
waypoints and back to the reference pose, where a simulated dial
indicator reads the signed deviation (actual - commanded along the
probed axis, quantized to 0.001 mm).  Each of the waypoint sets is
repeated a fixed number of times; robots run in parallel.
"""

from __future__ import annotations

import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from griprack.bench.client import ApiError, RobotClient
from griprack.bench.stats import box_stats

DIAL_RESOLUTION_MM = 0.001
REFERENCE = {"xy": (0.5, 0.5), "z": 0.5}
POINTS_PER_SET = 5


@dataclass
class RobotSeries:
    robot_id: str
    deviations_mm: list[float] = field(default_factory=list)
    aborted: bool = False

    def stats(self) -> dict:
        return box_stats(self.deviations_mm)


@dataclass
class RepeatabilityReport:
    axis: str
    waypoint_sets: int
    reps: int
    seed: int
    series: list[RobotSeries] = field(default_factory=list)

    def all_deviations(self) -> np.ndarray:
        return np.concatenate([np.asarray(s.deviations_mm) for s in self.series
                               if not s.aborted])

    def aggregate(self) -> dict:
        devs = self.all_deviations()
        agg = box_stats(devs)
        agg["expected_samples"] = self.waypoint_sets * self.reps * len(self.series)
        return agg


def _quantize(value_mm: float) -> float:
    return round(value_mm / DIAL_RESOLUTION_MM) * DIAL_RESOLUTION_MM


def _measure_robot(entry: dict, token: str, axis: str, waypoint_sets: int,
                   reps: int, seed: int, robot_index: int,
                   scale_mm: float, series: RobotSeries) -> None:
    client = RobotClient(entry["endpoint"], token, timeout=30.0)
    try:
        client.run_command("calibrate")
        for set_idx in range(waypoint_sets):
            rng = np.random.default_rng([seed, robot_index, set_idx])
            if axis == "xy":
                waypoints = rng.uniform(0.0, 1.0, size=(POINTS_PER_SET, 2))
            else:
                waypoints = rng.uniform(0.0, 1.0, size=POINTS_PER_SET)
            for _ in range(reps):
                for wp in waypoints:
                    if axis == "xy":
                        client.run_command("move_xy", {"x": float(wp[0]), "y": float(wp[1])})
                    else:
                        client.run_command("move_z", {"z": float(wp)})
                if axis == "xy":
                    rx, ry = REFERENCE["xy"]
                    client.run_command("move_xy", {"x": rx, "y": ry})
                    st = client.state()
                    dev = (st["pose"]["x"] - st["commanded"]["x"]) * scale_mm
                else:
                    client.run_command("move_z", {"z": REFERENCE["z"]})
                    st = client.state()
                    dev = (st["pose"]["z"] - st["commanded"]["z"]) * scale_mm
                series.deviations_mm.append(_quantize(dev))
    except (ApiError, TimeoutError, OSError):
        series.aborted = True
    finally:
        client.close()


def run_repeatability(entries: list[dict], token: str, *, axis: str = "xy",
                      robots: int = 23, waypoint_sets: int = 5, reps: int = 10,
                      seed: int = 0, workspace_mm=(190.0, 250.0),
                      z_travel_mm: float = 50.0) -> RepeatabilityReport:
    if axis not in ("xy", "z"):
        raise ValueError("axis must be 'xy' or 'z'")
    entries = sorted(entries, key=lambda e: e["robotId"])[:robots]
    if len(entries) < robots:
        raise ValueError(f"need {robots} robots, registry has {len(entries)}")
    scale = workspace_mm[0] if axis == "xy" else z_travel_mm
    report = RepeatabilityReport(axis=axis, waypoint_sets=waypoint_sets,
                                 reps=reps, seed=seed)
    threads = []
    for i, entry in enumerate(entries):
        series = RobotSeries(robot_id=entry["robotId"])
        report.series.append(series)
        threads.append(threading.Thread(
            target=_measure_robot,
            args=(entry, token, axis, waypoint_sets, reps, seed, i, scale, series),
            name=f"repeat-{entry['robotId']}",
            daemon=True,
        ))
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return report


def run_repeatability_cli(rack_config: str | None, registry: str | None, axis: str,
                          robots: int, waypoint_sets: int, reps: int, seed: int,
                          out_dir: str, token: str | None = None) -> int:
    from griprack.bench.client import RegistryClient
    from griprack.bench.report import emit_repeatability_report
    from griprack.config import load_rack_config
    from griprack.rack.subproc import RackSubprocess

    if (rack_config is None) == (registry is None):
        print("exactly one of --rack / --registry is required", flush=True)
        return 2
    kwargs = dict(axis=axis, robots=robots, waypoint_sets=waypoint_sets,
                  reps=reps, seed=seed)
    if rack_config is not None:
        cfg = load_rack_config(rack_config)
        kin = cfg.perRobot.kinematics
        with tempfile.TemporaryDirectory() as tmp:
            with RackSubprocess(cfg, Path(tmp) / "rack.yaml") as rack:
                report = run_repeatability(
                    rack.registry.list(), token or cfg.token,
                    workspace_mm=kin.workspace_mm, z_travel_mm=kin.z_travel_mm,
                    **kwargs)
    else:
        reg = RegistryClient(registry)
        entries = reg.list()
        reg.close()
        report = run_repeatability(entries, token or "change-me", **kwargs)
    emit_repeatability_report(report, out_dir)
    aborted = [s.robot_id for s in report.series if s.aborted]
    agg = report.aggregate()
    print(f"{axis} repeatability over {len(report.series)} robots: "
          f"std {agg['std']:.4f} mm, range [{agg['min']:.3f}, {agg['max']:.3f}] mm, "
          f"n {agg['n']}", flush=True)
    if aborted:
        print(f"ABORTED series: {aborted}", flush=True)
    return 1 if aborted else 0
