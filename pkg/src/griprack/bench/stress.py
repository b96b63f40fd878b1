"""Fleet image-load stress test.

Phase k queries robots 1..k concurrently, each camera at the configured
request rate from its own issuing thread; every phase lasts equally
long and the final phase covers the whole fleet.  Latency, payload
bytes and errors are recorded per request; client CPU/RSS are sampled
once per second.
"""

from __future__ import annotations

import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import psutil

from griprack.bench.client import RobotClient
from griprack.bench.stats import compute_percentiles


@dataclass(frozen=True)
class LatencySample:
    robot_id: str
    endpoint: str        # "image/top" or "image/bottom"
    send_ts: float       # monotonic ms
    recv_ts: float       # monotonic ms
    bytes: int
    ok: bool

    @property
    def latency_ms(self) -> float:
        return self.recv_ts - self.send_ts


@dataclass(frozen=True)
class TelemetrySample:
    ts: float            # monotonic s
    cpu_percent: float
    rss_bytes: int
    robots_active: int


@dataclass
class PhaseStats:
    robots: int
    duration_s: float
    requests: int
    errors: int
    bytes_total: int
    bytes_per_s: float
    latency_mean_ms: float
    latency_p50_ms: float
    latency_p95_ms: float
    latency_max_ms: float
    cpu_percent_mean: float
    rss_bytes_mean: float


@dataclass
class StressReport:
    fps: float
    phase_duration_s: float
    min_robots: int
    robot_ids: list[str]
    phases: list[PhaseStats] = field(default_factory=list)
    samples: list[LatencySample] = field(default_factory=list)
    telemetry: list[TelemetrySample] = field(default_factory=list)
    t0: float = 0.0      # monotonic s at phase min_robots start

    def assumptions(self) -> dict:
        return {
            "percentile_method": "nearest-rank",
            "phase_duration_s": self.phase_duration_s,
            "per_camera_fps": self.fps,
            "telemetry_source": "client process (this harness)",
        }


class _RunControl:
    """Shared schedule: issuers warm their connection and caches first,
    then the measured windows are anchored once everyone is ready."""

    def __init__(self, n_issuers: int):
        self.n_issuers = n_issuers
        self._warm = 0
        self._lock = threading.Lock()
        self.go = threading.Event()
        self.t0 = 0.0          # set by the coordinator before go
        self.end = 0.0

    def warmed(self):
        with self._lock:
            self._warm += 1

    def wait_warm(self, timeout: float):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if self._warm >= self.n_issuers:
                    return
            time.sleep(0.02)


def _issuer(endpoint: str, token: str, robot_id: str, view: str,
            phase_offset_s: float, period: float,
            sink: list, ctrl: _RunControl, stagger: float = 0.0):
    client = RobotClient(endpoint, token, timeout=5.0)
    try:
        client.image(view)  # connection + render/encode caches, unmeasured
    except Exception:
        pass
    ctrl.warmed()
    ctrl.go.wait()
    start_mono = ctrl.t0 + phase_offset_s + stagger
    end_mono = ctrl.end
    now = time.monotonic()
    if start_mono > now:
        time.sleep(start_mono - now)
    next_t = start_mono
    while True:
        now = time.monotonic()
        if now >= end_mono:
            break
        send = time.monotonic()
        ok = True
        nbytes = 0
        try:
            data, _ = client.image(view)
            nbytes = len(data)
        except Exception:
            ok = False
        recv = time.monotonic()
        sink.append(LatencySample(
            robot_id=robot_id,
            endpoint=f"image/{view}",
            send_ts=send * 1000.0,
            recv_ts=recv * 1000.0,
            bytes=nbytes,
            ok=ok,
        ))
        next_t += period
        delay = next_t - time.monotonic()
        if delay > 0:
            time.sleep(delay)
    client.close()


def run_stress(entries: list[dict], token: str, *, fps: float = 10.0,
               phase_duration_s: float = 30.0, min_robots: int = 1,
               settle_s: float = 0.5) -> StressReport:
    """Run the ramp-up load test against a healthy rack.

    ``entries`` is the registry listing; ``min_robots`` sets the first
    phase size (fleet size = only the final phase runs).
    """
    entries = sorted(entries, key=lambda e: e["robotId"])
    n = len(entries)
    if not 1 <= min_robots <= n:
        raise ValueError("min_robots must be within the fleet size")
    period = 1.0 / fps
    n_phases = n - min_robots + 1
    report = StressReport(fps=fps, phase_duration_s=phase_duration_s,
                          min_robots=min_robots,
                          robot_ids=[e["robotId"] for e in entries])

    ctrl = _RunControl(2 * n)
    sinks: list[list] = []
    threads: list[threading.Thread] = []
    n_issuers = 2 * n
    for i, entry in enumerate(entries):
        phase_of_robot = max(i + 1, min_robots)
        phase_offset = (phase_of_robot - min_robots) * phase_duration_s
        for v, view in enumerate(("top", "bottom")):
            sink: list = []
            sinks.append(sink)
            stagger = ((2 * i + v) / n_issuers) * period
            threads.append(threading.Thread(
                target=_issuer,
                args=(entry["endpoint"], token, entry["robotId"], view,
                      phase_offset, period, sink, ctrl, stagger),
                name=f"stress-{entry['robotId']}-{view}",
                daemon=True,
            ))
    for t in threads:
        t.start()
    ctrl.wait_warm(timeout=20.0)
    # collector pauses show up as multi-ms latency tails; run without it
    gc.collect()
    gc_was_enabled = gc.isenabled()
    gc.disable()
    start_mono = time.monotonic() + settle_s
    end_mono = start_mono + n_phases * phase_duration_s
    ctrl.t0 = start_mono
    ctrl.end = end_mono
    report.t0 = start_mono
    ctrl.go.set()

    try:
        proc = psutil.Process()
        proc.cpu_percent(None)  # prime the sampler
        telemetry: list[TelemetrySample] = []
        while time.monotonic() < end_mono:
            time.sleep(min(1.0, max(0.05, end_mono - time.monotonic())))
            now = time.monotonic()
            active = min(n, min_robots + max(0, int((now - start_mono) / phase_duration_s)))
            telemetry.append(TelemetrySample(
                ts=now,
                cpu_percent=proc.cpu_percent(None),
                rss_bytes=proc.memory_info().rss,
                robots_active=active,
            ))
        for t in threads:
            t.join(timeout=30)
    finally:
        if gc_was_enabled:
            gc.enable()
    for sink in sinks:
        report.samples.extend(sink)
    report.samples.sort(key=lambda s: s.send_ts)
    report.telemetry = telemetry
    report.phases = _phase_stats(report)
    return report


def _phase_stats(report: StressReport) -> list[PhaseStats]:
    t0_ms = report.t0 * 1000.0
    dur_ms = report.phase_duration_s * 1000.0
    n_phases_total = len(report.robot_ids) - report.min_robots + 1
    buckets: dict[int, list[LatencySample]] = {}
    for s in report.samples:
        idx = int((s.send_ts - t0_ms) // dur_ms)
        idx = min(max(idx, 0), n_phases_total - 1)
        buckets.setdefault(idx, []).append(s)
    phases = []
    for idx in range(n_phases_total):
        batch = buckets.get(idx, [])
        k = report.min_robots + idx
        lat = [s.latency_ms for s in batch]
        ok_bytes = sum(s.bytes for s in batch if s.ok)
        errors = sum(1 for s in batch if not s.ok)
        if lat:
            p50, p95, lat_max = compute_percentiles(lat)
            mean = sum(lat) / len(lat)
        else:
            p50 = p95 = lat_max = mean = 0.0
        window = (report.t0 + idx * report.phase_duration_s,
                  report.t0 + (idx + 1) * report.phase_duration_s)
        tele = [t for t in report.telemetry if window[0] < t.ts <= window[1]]
        phases.append(PhaseStats(
            robots=k,
            duration_s=report.phase_duration_s,
            requests=len(batch),
            errors=errors,
            bytes_total=ok_bytes,
            bytes_per_s=ok_bytes / report.phase_duration_s,
            latency_mean_ms=mean,
            latency_p50_ms=p50,
            latency_p95_ms=p95,
            latency_max_ms=lat_max,
            cpu_percent_mean=sum(t.cpu_percent for t in tele) / len(tele) if tele else 0.0,
            rss_bytes_mean=sum(t.rss_bytes for t in tele) / len(tele) if tele else 0.0,
        ))
    return phases


def robot_percentile(report: StressReport, robot_id: str, p: float,
                     t_from_s: float, t_to_s: float) -> float:
    """Nearest-rank percentile of one robot's ok-latencies in a window."""
    from griprack.bench.stats import percentile_nearest_rank

    window = [s.latency_ms for s in report.samples
              if s.robot_id == robot_id and s.ok
              and t_from_s * 1000.0 <= s.send_ts < t_to_s * 1000.0]
    return percentile_nearest_rank(window, p)


def check_stress_invariants(report: StressReport, rel_tol_count: float = 0.02,
                            rel_tol_bytes: float = 0.01) -> list[str]:
    """Embedded run assertions; returns human-readable violations."""
    problems = []
    for phase in report.phases:
        expected = phase.robots * 2 * report.fps * phase.duration_s
        if expected > 0 and abs(phase.requests - expected) > rel_tol_count * expected + 2:
            problems.append(
                f"phase {phase.robots}: request count {phase.requests} "
                f"outside {expected} +- {rel_tol_count:.0%}")
        identity = phase.bytes_per_s * phase.duration_s
        if phase.bytes_total and abs(identity - phase.bytes_total) > rel_tol_bytes * phase.bytes_total:
            problems.append(f"phase {phase.robots}: bandwidth accounting identity violated")
    return problems


def run_stress_cli(rack_config: str | None, registry: str | None, fps: float,
                   phase_secs: float, min_robots: int, out_dir: str,
                   token: str | None = None) -> int:
    from griprack.bench.client import RegistryClient
    from griprack.bench.report import emit_stress_report
    from griprack.config import load_rack_config
    from griprack.rack.subproc import RackSubprocess

    if (rack_config is None) == (registry is None):
        print("exactly one of --rack / --registry is required", flush=True)
        return 2
    rack = None
    try:
        if rack_config is not None:
            cfg = load_rack_config(rack_config)
            with tempfile.TemporaryDirectory() as tmp:
                rack = RackSubprocess(cfg, Path(tmp) / "rack.yaml").wait_ready()
                entries = rack.registry.list()
                report = run_stress(entries, token or cfg.token, fps=fps,
                                    phase_duration_s=phase_secs, min_robots=min_robots)
                rack.stop()
                rack = None
        else:
            reg = RegistryClient(registry)
            entries = reg.list()
            reg.close()
            report = run_stress(entries, token or "change-me", fps=fps,
                                phase_duration_s=phase_secs, min_robots=min_robots)
        emit_stress_report(report, out_dir)
        problems = check_stress_invariants(report)
        for p in problems:
            print(f"ASSERTION FAILED: {p}", flush=True)
        final = report.phases[-1]
        print(f"final phase: {final.robots} robots, {final.requests} requests, "
              f"{final.errors} errors, {final.bytes_per_s / 1e6:.1f} MB/s, "
              f"p95 {final.latency_p95_ms:.1f} ms, max {final.latency_max_ms:.1f} ms", flush=True)
        return 1 if problems else 0
    finally:
        if rack is not None:
            rack.stop()
