"""Scenario files: the single source of every knob a run depends on.

Scenarios are YAML with nested keys. Every random quantity is derived from
the scenario's fixed seed — there are no entropy defaults — so a scenario
file plus this package version fully determines a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .ais import build_tracks, load_csv_messages, load_nmea_messages, shift_tracks
from .kinematics import HullParams, TimingBudget
from .sensors import FaultModel

STAGES = ("PATH_SIM", "HIL", "INITIAL_TRIALS", "SMALL_CRAFT", "MEDIUM_SHIP", "IMO")


class ScenarioLoadError(ValueError):
    pass


@dataclass(frozen=True)
class FailureSchedule:
    """Scripted controller faults: windows are [start, end) seconds."""

    heartbeat_stall_windows: tuple[tuple[float, float], ...] = ()
    component_faults: tuple[tuple[str, float, float], ...] = ()  # (component, start, end)


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    rng_seed: int
    start: tuple[float, float]
    goal: tuple[float, float]
    bounds: tuple[float, float, float, float]
    timing: TimingBudget
    hull: HullParams
    faults: FaultModel
    pickup_points: tuple[tuple[float, float], ...]
    stage: str = "PATH_SIM"
    ais_source: Path | None = None
    safe_distance: float = 50.0
    collision_distance: float = 5.0
    nav_accuracy_bound: float = 25.0
    arrival_radius: float = 25.0
    timeout: float = 600.0
    track_split_speed: float = 30.0
    planner_name: str = "grid_astar"
    planner_cruise_speed: float | None = None  # default 0.8 * hull.v_max
    planner_max_time: float | None = None  # default timeout
    cross_verify_threshold: float = 20.0
    kinematic_max_speed: float = 15.0
    recovery_beats: int = 50
    sensor_lidar_range: float = 100.0
    sensor_radar_range: float = 5000.0
    port_polygons: tuple[tuple[tuple[float, float], ...], ...] = ()
    failures: FailureSchedule = field(default_factory=FailureSchedule)
    code_version: str = __version__

    def software_version(self) -> str:
        """Content hash over controller configuration and code identity.

        Any change to the controller's parameters, planner, or declared
        code version yields a new version, which resets campaign ledgers.
        """
        ident = {
            "code_version": self.code_version,
            "planner": self.planner_name,
            "planner_cruise_speed": self.planner_cruise_speed,
            "hull": vars(self.hull).copy(),
            "timing": vars(self.timing).copy(),
            "cross_verify_threshold": self.cross_verify_threshold,
            "kinematic_max_speed": self.kinematic_max_speed,
        }
        blob = json.dumps(ident, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def load_tracks(self):
        """Read and rebase the recorded traffic this scenario replays."""
        if self.ais_source is None:
            return []
        path = self.ais_source
        if not path.exists():
            raise ScenarioLoadError(f"traffic file not found: {path}")
        text = path.read_text().splitlines()
        if path.suffix.lower() == ".csv":
            messages, planar = load_csv_messages(text)
        else:
            messages, planar = load_nmea_messages(text), False
        tracks = build_tracks(messages, max_speed=self.track_split_speed, planar=planar)
        if not tracks:
            return []
        t0 = min(t.start_time for t in tracks)
        if t0 != 0.0:
            tracks = shift_tracks(tracks, -t0)
        return tracks


def _pair(value, name: str) -> tuple[float, float]:
    try:
        a, b = value
        return float(a), float(b)
    except (TypeError, ValueError) as exc:
        raise ScenarioLoadError(f"{name} must be a [x, y] pair, got {value!r}") from exc


def _window(value, name: str) -> tuple[float, float]:
    lo, hi = _pair(value, name)
    if hi < lo:
        raise ScenarioLoadError(f"{name} window is not well-ordered: {value!r}")
    return lo, hi


def scenario_from_dict(data: dict, base_dir: Path | None = None) -> ScenarioSpec:
    try:
        return _scenario_from_dict(data, base_dir or Path.cwd())
    except ScenarioLoadError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioLoadError(f"bad scenario: {exc}") from exc


def _scenario_from_dict(data: dict, base_dir: Path) -> ScenarioSpec:
    for required in ("id", "rng_seed", "start", "goal", "bounds", "timing"):
        if required not in data:
            raise ScenarioLoadError(f"scenario is missing required key {required!r}")
    stage = data.get("stage", "PATH_SIM")
    if stage not in STAGES:
        raise ScenarioLoadError(f"unknown stage {stage!r}; expected one of {STAGES}")

    timing = TimingBudget(**data["timing"])
    hull_cfg = data.get("hull", {})
    hull = HullParams.from_budget(timing, **hull_cfg)

    faults_cfg = dict(data.get("faults", {}))
    faults_cfg.setdefault("rng_seed", data["rng_seed"])
    for key in ("gps_spoof_window", "gps_jam_window"):
        if faults_cfg.get(key) is not None:
            faults_cfg[key] = _window(faults_cfg[key], key)
    if faults_cfg.get("gps_spoof_offset") is not None:
        faults_cfg["gps_spoof_offset"] = _pair(
            faults_cfg["gps_spoof_offset"], "gps_spoof_offset"
        )
    faults = FaultModel(**faults_cfg)

    failures_cfg = data.get("failures", {})
    stalls = tuple(
        _window(w, "heartbeat_stall") for w in failures_cfg.get("heartbeat_stall_windows", [])
    )
    comp = []
    for name, windows in failures_cfg.get("component_faults", {}).items():
        for w in windows:
            lo, hi = _window(w, f"component_faults[{name}]")
            comp.append((str(name), lo, hi))
    failures = FailureSchedule(
        heartbeat_stall_windows=stalls, component_faults=tuple(sorted(comp))
    )

    bounds = tuple(float(v) for v in data["bounds"])
    if len(bounds) != 4 or bounds[0] >= bounds[2] or bounds[1] >= bounds[3]:
        raise ScenarioLoadError(f"bounds must be [xmin, ymin, xmax, ymax], got {bounds}")

    planner_cfg = data.get("planner", {})
    source = data.get("ais_source")
    pickup_points = tuple(_pair(p, "pickup_point") for p in data.get("pickup_points", []))
    polygons = tuple(
        tuple(_pair(v, "port_polygon vertex") for v in poly)
        for poly in data.get("port_polygons", [])
    )

    return ScenarioSpec(
        id=str(data["id"]),
        stage=stage,
        rng_seed=int(data["rng_seed"]),
        start=_pair(data["start"], "start"),
        goal=_pair(data["goal"], "goal"),
        bounds=bounds,  # type: ignore[arg-type]
        timing=timing,
        hull=hull,
        faults=faults,
        pickup_points=pickup_points,
        ais_source=(base_dir / source) if source else None,
        safe_distance=float(data.get("safe_distance", 50.0)),
        collision_distance=float(data.get("collision_distance", 5.0)),
        nav_accuracy_bound=float(data.get("nav_accuracy_bound", 25.0)),
        arrival_radius=float(data.get("arrival_radius", 25.0)),
        timeout=float(data.get("timeout", 600.0)),
        track_split_speed=float(data.get("track_split_speed", 30.0)),
        planner_name=str(planner_cfg.get("name", "grid_astar")),
        planner_cruise_speed=planner_cfg.get("cruise_speed"),
        planner_max_time=planner_cfg.get("max_time"),
        cross_verify_threshold=float(data.get("cross_verify_threshold", 20.0)),
        kinematic_max_speed=float(data.get("kinematic_max_speed", 15.0)),
        recovery_beats=int(data.get("recovery_beats", 50)),
        sensor_lidar_range=float(data.get("sensor_lidar_range", 100.0)),
        sensor_radar_range=float(data.get("sensor_radar_range", 5000.0)),
        port_polygons=polygons,
        failures=failures,
        code_version=str(data.get("code_version", __version__)),
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    if not path.exists():
        raise ScenarioLoadError(f"scenario file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ScenarioLoadError(f"unreadable scenario YAML {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioLoadError(f"scenario file {path} is not a mapping")
    return scenario_from_dict(data, base_dir=path.parent)
