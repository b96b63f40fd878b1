"""Rack and per-cell configuration.

The rack config file is YAML.  Top-level keys use the camelCase names of
the rack schema (robotCount, basePort, seedBase, bandwidthBudget,
perRobot, ...); the per-robot blocks use snake_case keys (steps_per_mm,
workspace_mm, ...).  Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

GBIT_10_BYTES_PER_S = 10 * 1_000_000_000 // 8


@dataclass
class KinematicsConfig:
    steps_per_mm: int = 80
    workspace_mm: tuple[float, float] = (190.0, 250.0)
    z_travel_mm: float = 50.0
    v_max: float = 100.0          # mm/s along the XY path
    a_max: float = 500.0          # mm/s^2
    sigma_xy_mm: float = 0.027    # per-move gaussian error, each XY axis
    sigma_z_mm: float = 0.109
    sigma_offset_xy_mm: float = 0.01   # per-robot systematic offset std
    sigma_offset_z_mm: float = 0.05
    current_threshold: float = 0.8
    current_debounce: int = 3
    current_sample_hz: float = 1000.0
    servo_z_travel_s: float = 0.5      # full z stroke duration
    servo_r_deg_per_s: float = 180.0
    servo_d_travel_s: float = 0.3
    time_scale: float = 1.0            # real seconds per simulated second; 0 = run instantly
    seed: int = 0


@dataclass
class WorkcellConfig:
    floor_mode: str = "transparent"    # "transparent" | "opaque_inlay"
    cell_mm: tuple[float, float, float] = (274.0, 356.0, 400.0)
    lighting: float = 1.0
    rope_particles: int = 40
    rope_length_mm: float = 150.0
    rope_radius_mm: float = 2.5
    footprint_radius_mm: float = 12.0
    contact_z: float = 0.15            # gripper sweeps the rope when z <= this
    rope_color: tuple[int, int, int] = (200, 30, 30)
    floor_color: tuple[int, int, int] = (235, 235, 235)
    gripper_color: tuple[int, int, int] = (40, 60, 160)


@dataclass
class ServerConfig:
    jpeg_quality: int = 85
    min_frame_bytes: int = 0       # pad encoded frames up to this size (0 = off)
    sensor_noise: float = 0.0      # amplitude of the fixed per-camera noise texture
    stream_fps: float = 10.0
    image_cache_s: float = 1.0 / 30.0


@dataclass
class PerRobotConfig:
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    workcell: WorkcellConfig = field(default_factory=WorkcellConfig)
    server: ServerConfig = field(default_factory=ServerConfig)


@dataclass
class RackConfig:
    robotCount: int = 32
    basePort: int = 9100
    orchestratorPort: int = 9099
    host: str = "127.0.0.1"
    token: str = "change-me"
    seedBase: int = 1000
    bandwidthBudget: int = GBIT_10_BYTES_PER_S   # advisory, bytes/s
    heartbeatInterval: float = 1.0
    processPerCell: bool = False
    perRobot: PerRobotConfig = field(default_factory=PerRobotConfig)

    def robot_id(self, index: int) -> str:
        return f"robot_{index:02d}"

    def robot_port(self, index: int) -> int:
        return self.basePort + index

    def robot_seed(self, index: int) -> int:
        return self.seedBase + index

    def validate(self) -> None:
        if self.robotCount < 1:
            raise ValueError("robotCount must be >= 1")
        if self.orchestratorPort in range(self.basePort, self.basePort + self.robotCount):
            raise ValueError("orchestratorPort collides with robot port range")
        k = self.perRobot.kinematics
        if k.v_max <= 0 or k.a_max <= 0:
            raise ValueError("v_max and a_max must be positive")
        if k.sigma_xy_mm < 0 or k.sigma_z_mm < 0:
            raise ValueError("sigma values must be >= 0")
        if self.perRobot.workcell.floor_mode not in ("transparent", "opaque_inlay"):
            raise ValueError("floor_mode must be 'transparent' or 'opaque_inlay'")


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {where} key(s): {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if isinstance(value, list):
            value = tuple(value)
        kwargs[f.name] = value
    return cls(**kwargs)


def load_rack_config(path: str | Path) -> RackConfig:
    """Load and validate a rack config file (YAML; JSON is valid YAML)."""
    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ValueError(f"rack config must be a mapping, got {type(raw).__name__}")
    return rack_config_from_dict(raw)


def rack_config_from_dict(raw: dict) -> RackConfig:
    raw = dict(raw)
    per_raw = raw.pop("perRobot", {}) or {}
    cfg = _build(RackConfig, {**raw, "perRobot": PerRobotConfig()}, "rack")
    unknown = set(per_raw) - {"kinematics", "workcell", "server"}
    if unknown:
        raise ValueError(f"unknown perRobot key(s): {sorted(unknown)}")
    cfg.perRobot = PerRobotConfig(
        kinematics=_build(KinematicsConfig, per_raw.get("kinematics", {}) or {}, "kinematics"),
        workcell=_build(WorkcellConfig, per_raw.get("workcell", {}) or {}, "workcell"),
        server=_build(ServerConfig, per_raw.get("server", {}) or {}, "server"),
    )
    cfg.validate()
    return cfg


def dump_rack_config(cfg: RackConfig, path: str | Path) -> None:
    data = dataclasses.asdict(cfg)
    for block in data["perRobot"].values():
        for key, value in block.items():
            if isinstance(value, tuple):
                block[key] = list(value)
    for key, value in data.items():
        if isinstance(value, tuple):
            data[key] = list(value)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
