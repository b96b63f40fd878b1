import threading
import time

import numpy as np
import pytest

from griprack.bench.repeatability import run_repeatability
from griprack.bench.report import emit_repeatability_report, emit_stress_report
from griprack.bench.stress import check_stress_invariants, run_stress
from griprack.config import KinematicsConfig, PerRobotConfig


def fast_kinematics(**kw):
    return KinematicsConfig(time_scale=0.0, **kw)


@pytest.fixture
def small_rack(rack_config_factory, rack_process_factory):
    cfg = rack_config_factory(robot_count=4)
    cfg.perRobot = PerRobotConfig(kinematics=fast_kinematics(sigma_xy_mm=0.0, sigma_z_mm=0.0,
                                                             sigma_offset_xy_mm=0.0,
                                                             sigma_offset_z_mm=0.0))
    rack = rack_process_factory(cfg)
    return cfg, rack


def test_stress_small_ramp(small_rack, tmp_path):
    cfg, rack = small_rack
    entries = rack.registry.list()
    report = run_stress(entries, cfg.token, fps=10.0, phase_duration_s=2.0)
    assert len(report.phases) == 4
    for k, phase in enumerate(report.phases, start=1):
        assert phase.robots == k
        expected = k * 2 * 10.0 * 2.0
        assert abs(phase.requests - expected) <= 0.02 * expected + 2
        assert phase.errors == 0
        # accounting identity
        assert phase.bytes_per_s * phase.duration_s == pytest.approx(phase.bytes_total, rel=0.01)
        assert phase.latency_p95_ms < 70.0
    assert check_stress_invariants(report) == []
    files = emit_stress_report(report, tmp_path / "out")
    csv_lines = files[0].read_text().strip().splitlines()
    assert len(csv_lines) == 1 + 4
    assert len(csv_lines[0].split(",")) == 10
    assert len(csv_lines[1].split(",")) == 10


def test_stress_min_robots_final_phase_only(small_rack):
    cfg, rack = small_rack
    entries = rack.registry.list()
    report = run_stress(entries, cfg.token, fps=10.0, phase_duration_s=2.0, min_robots=4)
    assert len(report.phases) == 1
    assert report.phases[-1].robots == 4


def test_stress_error_injection_isolated_accounting(small_rack):
    cfg, rack = small_rack
    entries = rack.registry.list()

    def killer():
        time.sleep(2.0)
        rack.registry.kill("robot_02")

    t = threading.Thread(target=killer)
    t.start()
    report = run_stress(entries, cfg.token, fps=10.0, phase_duration_s=4.0, min_robots=4)
    t.join()
    by_robot = {}
    for s in report.samples:
        by_robot.setdefault(s.robot_id, []).append(s)
    for robot_id, samples in by_robot.items():
        errors = sum(1 for s in samples if not s.ok)
        if robot_id == "robot_02":
            assert errors > 0
        else:
            assert errors == 0
    rack.registry.restart("robot_02")


def test_stress_empty_report_rejected(tmp_path):
    from griprack.bench.stress import StressReport

    with pytest.raises(ValueError):
        emit_stress_report(StressReport(fps=10, phase_duration_s=1, min_robots=1,
                                        robot_ids=[]), tmp_path)


def test_repeatability_zero_noise(small_rack):
    cfg, rack = small_rack
    entries = rack.registry.list()
    report = run_repeatability(entries, cfg.token, axis="xy", robots=3,
                               waypoint_sets=2, reps=3, seed=1)
    devs = report.all_deviations()
    assert len(devs) == 3 * 2 * 3
    assert np.all(devs == 0.0)


def test_repeatability_recovers_sigma(rack_config_factory, rack_process_factory, tmp_path):
    cfg = rack_config_factory(robot_count=6)
    cfg.perRobot = PerRobotConfig(kinematics=fast_kinematics(
        sigma_xy_mm=0.1, sigma_z_mm=0.2,
        sigma_offset_xy_mm=0.0, sigma_offset_z_mm=0.0))
    rack = rack_process_factory(cfg)
    report = run_repeatability(rack.registry.list(), cfg.token, axis="xy", robots=6,
                               waypoint_sets=3, reps=5, seed=2)
    devs = report.all_deviations()
    assert len(devs) == 6 * 3 * 5
    s = devs.std(ddof=1)
    # 90 samples of sigma=0.1: comfortably inside wide chi-squared bounds
    assert 0.07 <= s <= 0.14
    # quantization to the dial resolution
    assert np.allclose(devs, np.round(devs / 0.001) * 0.001)
    files = emit_repeatability_report(report, tmp_path / "rep")
    header = files[0].read_text().splitlines()[0].split(",")
    assert header == ["robot", "axis", "n", "min_mm", "q1_mm", "median_mm",
                      "q3_mm", "max_mm", "std_mm", "aborted"]


def test_repeatability_z_axis(small_rack):
    cfg, rack = small_rack
    report = run_repeatability(rack.registry.list(), cfg.token, axis="z", robots=2,
                               waypoint_sets=2, reps=2, seed=3)
    assert len(report.all_deviations()) == 2 * 2 * 2
