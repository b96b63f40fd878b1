"""Machine-readable benchmark reports.

stress.csv has exactly one row per phase with the columns

    robots, duration_s, requests, errors, bytes_per_s,
    budget_utilization, latency_mean_ms, latency_p50_ms,
    latency_p95_ms, latency_max_ms

CPU/RSS samples go to stress_telemetry.csv (ts_s, cpu_percent,
rss_bytes, robots_active); run parameters and assumptions to
stress_summary.json.  Repeatability reports emit per-robot box-plot
rows (repeatability.csv), the raw deviations (deviations.csv) and an
aggregate summary JSON.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from griprack.bench.repeatability import RepeatabilityReport
from griprack.bench.stress import StressReport
from griprack.config import GBIT_10_BYTES_PER_S

STRESS_COLUMNS = [
    "robots", "duration_s", "requests", "errors", "bytes_per_s",
    "budget_utilization", "latency_mean_ms", "latency_p50_ms",
    "latency_p95_ms", "latency_max_ms",
]


def emit_stress_report(report: StressReport, out_dir: str | Path,
                       bandwidth_budget: int = GBIT_10_BYTES_PER_S) -> list[Path]:
    if not report.phases:
        raise ValueError("report has no phases")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "stress.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STRESS_COLUMNS)
        for ph in report.phases:
            writer.writerow([
                ph.robots,
                f"{ph.duration_s:.3f}",
                ph.requests,
                ph.errors,
                f"{ph.bytes_per_s:.1f}",
                f"{ph.bytes_per_s / bandwidth_budget:.6f}",
                f"{ph.latency_mean_ms:.3f}",
                f"{ph.latency_p50_ms:.3f}",
                f"{ph.latency_p95_ms:.3f}",
                f"{ph.latency_max_ms:.3f}",
            ])
    tele_path = out / "stress_telemetry.csv"
    with tele_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ts_s", "cpu_percent", "rss_bytes", "robots_active"])
        for t in report.telemetry:
            writer.writerow([f"{t.ts:.3f}", f"{t.cpu_percent:.1f}", t.rss_bytes, t.robots_active])
    summary_path = out / "stress_summary.json"
    summary = {
        "assumptions": report.assumptions(),
        "phases": len(report.phases),
        "robots": len(report.robot_ids),
        "total_requests": sum(p.requests for p in report.phases),
        "total_errors": sum(p.errors for p in report.phases),
        "final_phase": {
            "robots": report.phases[-1].robots,
            "bytes_per_s": report.phases[-1].bytes_per_s,
            "latency_p95_ms": report.phases[-1].latency_p95_ms,
            "latency_max_ms": report.phases[-1].latency_max_ms,
        },
        "bandwidth_budget_bytes_per_s": bandwidth_budget,
    }
    summary_path.write_text(json.dumps(summary, indent=2))
    return [csv_path, tele_path, summary_path]


def emit_repeatability_report(report: RepeatabilityReport, out_dir: str | Path) -> list[Path]:
    if not report.series or all(not s.deviations_mm for s in report.series):
        raise ValueError("report has no measurements")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "repeatability.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["robot", "axis", "n", "min_mm", "q1_mm", "median_mm",
                         "q3_mm", "max_mm", "std_mm", "aborted"])
        for s in report.series:
            if s.deviations_mm:
                st = s.stats()
                writer.writerow([s.robot_id, report.axis, st["n"],
                                 f"{st['min']:.4f}", f"{st['q1']:.4f}",
                                 f"{st['median']:.4f}", f"{st['q3']:.4f}",
                                 f"{st['max']:.4f}", f"{st['std']:.5f}", s.aborted])
            else:
                writer.writerow([s.robot_id, report.axis, 0, "", "", "", "", "", "", s.aborted])
    raw_path = out / "deviations.csv"
    with raw_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["robot", "axis", "deviation_mm"])
        for s in report.series:
            for d in s.deviations_mm:
                writer.writerow([s.robot_id, report.axis, f"{d:.4f}"])
    summary_path = out / "repeatability_summary.json"
    summary = {
        "axis": report.axis,
        "waypoint_sets": report.waypoint_sets,
        "reps": report.reps,
        "seed": report.seed,
        "dial_resolution_mm": 0.001,
        "aggregate": report.aggregate(),
        "robots": len(report.series),
        "aborted": [s.robot_id for s in report.series if s.aborted],
    }
    summary_path.write_text(json.dumps(summary, indent=2))
    return [csv_path, raw_path, summary_path]
