"""Simulated GPS/INS with injectable faults, cross-verification, and
range-limited obstacle detection.

All noise is a pure function of (seed, time), so identical scenarios
replay identically regardless of call order or thread count.
"""

from __future__ import annotations

import enum
import math
import random
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .ais import ObstacleTrack, sample_track
from .geometry import METERS_PER_NMI, heading_to_unit, planar_distance
from .kinematics import OwnShipState


class Source(enum.Enum):
    GPS = "GPS"
    INS = "INS"
    DEAD_RECKONING = "DEAD_RECKONING"


class NavFlag(enum.Enum):
    SPOOF_SUSPECT = "SPOOF_SUSPECT"
    INS_DRIFT_SUSPECT = "INS_DRIFT_SUSPECT"
    FALLBACK = "FALLBACK"
    RECALIBRATED = "RECALIBRATED"


@dataclass(frozen=True)
class SensorFix:
    source: Source
    timestamp: float
    available: bool
    x: float | None = None
    y: float | None = None
    quality: str = "nominal"  # nominal | degraded

    def __post_init__(self) -> None:
        if self.available and (self.x is None or self.y is None):
            raise ValueError("available fixes need a position")
        if not self.available and (self.x is not None or self.y is not None):
            raise ValueError("unavailable fixes carry no position")


@dataclass(frozen=True)
class FaultModel:
    """Injectable sensor faults for one scenario; windows are [start, end) seconds."""

    gps_noise_sigma: float = 0.0  # m
    gps_spoof_offset: tuple[float, float] = (0.0, 0.0)
    gps_spoof_window: tuple[float, float] | None = None
    gps_jam_window: tuple[float, float] | None = None
    ins_drift_rate: float = 0.0  # nautical miles per hour
    ins_drift_heading: float = 0.0  # degrees true
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.ins_drift_rate <= 10.0:
            raise ValueError("ins_drift_rate must be in [0, 10] nmi/hr")
        for name in ("gps_spoof_window", "gps_jam_window"):
            win = getattr(self, name)
            if win is not None and win[1] < win[0]:
                raise ValueError(f"{name} must be well-ordered")


def _in_window(window: tuple[float, float] | None, t: float) -> bool:
    return window is not None and window[0] <= t < window[1]


def _noise(seed: int, t: float, sigma: float) -> tuple[float, float]:
    if sigma == 0.0:
        return 0.0, 0.0
    # stable per (seed, t): independent of call order and hash randomization
    key = (seed << 64) ^ int.from_bytes(struct.pack(">d", t), "big")
    rng = random.Random(key)
    return rng.gauss(0.0, sigma), rng.gauss(0.0, sigma)


def gps_read(truth: OwnShipState, faults: FaultModel, t: float) -> SensorFix:
    """GPS fix at time t: jammed windows return no fix, spoof windows shift it."""
    if _in_window(faults.gps_jam_window, t):
        return SensorFix(source=Source.GPS, timestamp=t, available=False)
    nx, ny = _noise(faults.rng_seed, t, faults.gps_noise_sigma)
    x = truth.x + nx
    y = truth.y + ny
    if _in_window(faults.gps_spoof_window, t):
        x += faults.gps_spoof_offset[0]
        y += faults.gps_spoof_offset[1]
    return SensorFix(source=Source.GPS, timestamp=t, available=True, x=x, y=y)


def ins_read(
    truth: OwnShipState,
    faults: FaultModel,
    elapsed_since_calibration: float,
    degraded_threshold: float = 20.0,
) -> SensorFix:
    """INS fix: truth plus drift growing linearly since the last calibration."""
    if elapsed_since_calibration < 0:
        raise ValueError("elapsed_since_calibration must be >= 0")
    magnitude = (
        faults.ins_drift_rate * (elapsed_since_calibration / 3600.0) * METERS_PER_NMI
    )
    ux, uy = heading_to_unit(faults.ins_drift_heading)
    quality = "degraded" if magnitude > degraded_threshold else "nominal"
    return SensorFix(
        source=Source.INS,
        timestamp=truth.time,
        available=True,
        x=truth.x + magnitude * ux,
        y=truth.y + magnitude * uy,
        quality=quality,
    )


@dataclass(frozen=True)
class KinematicLimits:
    max_speed: float = 15.0  # m/s
    max_accel: float | None = None  # m/s^2, None disables the accel check


@dataclass(frozen=True)
class NavSolution:
    x: float
    y: float
    chosen_source: Source
    discrepancy: float  # |gps - ins| when both were available, else 0
    flags: frozenset[NavFlag] = frozenset()

    def __post_init__(self) -> None:
        if self.discrepancy < 0:
            raise ValueError("discrepancy must be >= 0")
        if NavFlag.FALLBACK in self.flags and self.chosen_source is not Source.DEAD_RECKONING:
            raise ValueError("FALLBACK implies dead reckoning")


@dataclass(frozen=True)
class FusionState:
    """Last accepted solution plus the motion estimate used for prediction."""

    solution: NavSolution
    speed: float  # m/s
    heading: float  # degrees true


def cross_verify(
    gps: SensorFix,
    ins: SensorFix,
    last: FusionState,
    dt: float,
    threshold: float,
    limits: KinematicLimits,
) -> NavSolution:
    """Select a navigation position from possibly-disagreeing GPS and INS.

    Agreement within the threshold prefers GPS (and recalibrates INS to
    it); disagreement falls back on a kinematic prediction from the last
    solution; with neither sensor usable the solution dead-reckons and is
    flagged. Degraded outcomes are flags, never exceptions.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    ux, uy = heading_to_unit(last.heading)
    pred_x = last.solution.x + last.speed * ux * dt
    pred_y = last.solution.y + last.speed * uy * dt

    def kinematically_ok(fix: SensorFix) -> bool:
        # the agreement threshold doubles as the position-noise allowance,
        # otherwise ordinary jitter at a short dt reads as impossible speed
        moved = planar_distance(fix.x, fix.y, last.solution.x, last.solution.y)
        implied = max(0.0, moved - threshold) / dt
        if implied > limits.max_speed:
            return False
        if limits.max_accel is not None:
            if abs(implied - last.speed) / dt > limits.max_accel:
                return False
        return True

    if gps.available and ins.available:
        discrepancy = planar_distance(gps.x, gps.y, ins.x, ins.y)
        if discrepancy <= threshold:
            flags = frozenset() if discrepancy == 0.0 else frozenset({NavFlag.RECALIBRATED})
            return NavSolution(
                x=gps.x,
                y=gps.y,
                chosen_source=Source.GPS,
                discrepancy=discrepancy,
                flags=flags,
            )
        candidates = [f for f in (gps, ins) if kinematically_ok(f)]
        if candidates:
            chosen = min(
                candidates,
                key=lambda f: planar_distance(f.x, f.y, pred_x, pred_y),
            )
            rejected_flag = (
                NavFlag.SPOOF_SUSPECT
                if chosen.source is Source.INS
                else NavFlag.INS_DRIFT_SUSPECT
            )
            return NavSolution(
                x=chosen.x,
                y=chosen.y,
                chosen_source=chosen.source,
                discrepancy=discrepancy,
                flags=frozenset({rejected_flag}),
            )
        return _dead_reckon(pred_x, pred_y, discrepancy)

    if gps.available:
        return NavSolution(
            x=gps.x, y=gps.y, chosen_source=Source.GPS, discrepancy=0.0
        )
    if ins.available:
        return NavSolution(
            x=ins.x, y=ins.y, chosen_source=Source.INS, discrepancy=0.0
        )
    return _dead_reckon(pred_x, pred_y, 0.0)


def _dead_reckon(pred_x: float, pred_y: float, discrepancy: float) -> NavSolution:
    return NavSolution(
        x=pred_x,
        y=pred_y,
        chosen_source=Source.DEAD_RECKONING,
        discrepancy=discrepancy,
        flags=frozenset({NavFlag.FALLBACK}),
    )


AlertSink = Callable[[dict], None]


class PositionFuser:
    """Owns the per-vessel cross-verification state across simulation steps.

    Mutated only by the simulation step owner; every above-threshold
    discrepancy is appended to the alert sink as a structured record.
    """

    def __init__(
        self,
        initial: OwnShipState,
        threshold: float = 20.0,
        limits: KinematicLimits | None = None,
        alert_sink: AlertSink | None = None,
    ):
        self.threshold = threshold
        self.limits = limits or KinematicLimits()
        self.alert_sink = alert_sink
        self.state = FusionState(
            solution=NavSolution(
                x=initial.x, y=initial.y, chosen_source=Source.GPS, discrepancy=0.0
            ),
            speed=initial.speed,
            heading=initial.heading,
        )
        self.ins_calibrated_at = initial.time

    def fuse(self, gps: SensorFix, ins: SensorFix, t: float, dt: float) -> NavSolution:
        solution = cross_verify(gps, ins, self.state, dt, self.threshold, self.limits)
        if solution.discrepancy > self.threshold and self.alert_sink:
            self.alert_sink(
                {
                    "time": t,
                    "kind": "nav_discrepancy",
                    "discrepancy": solution.discrepancy,
                    "chosen_source": solution.chosen_source.value,
                    "flags": sorted(f.value for f in solution.flags),
                }
            )
        moved_x = solution.x - self.state.solution.x
        moved_y = solution.y - self.state.solution.y
        speed = math.sqrt(moved_x * moved_x + moved_y * moved_y) / dt
        if moved_x or moved_y:
            heading = math.degrees(math.atan2(moved_x, moved_y)) % 360.0
        else:
            heading = self.state.heading
        self.state = FusionState(solution=solution, speed=speed, heading=heading)
        # rule-1 agreement (and only that) resets the INS drift accumulator
        rule1_agreement = (
            gps.available
            and ins.available
            and solution.flags <= {NavFlag.RECALIBRATED}
        )
        if rule1_agreement:
            self.ins_calibrated_at = t
        return solution


@dataclass(frozen=True)
class SensorSuite:
    """Detection ranges of the perception stack."""

    lidar_range: float = 100.0  # m
    radar_range: float = 5000.0  # m
    ais_range: float = 20.0 * METERS_PER_NMI
    scan_interval: float = 0.2  # s between consecutive scans

    def __post_init__(self) -> None:
        if not self.lidar_range < self.radar_range:
            raise ValueError("lidar_range must be < radar_range")


@dataclass(frozen=True)
class Detection:
    obstacle_id: str
    x: float
    y: float
    range_m: float
    velocity: tuple[float, float] | None = None  # (vx, vy) m/s, close range only
    identified: bool = False  # identity known via AIS


def detect_obstacles(
    tracks: Sequence[ObstacleTrack],
    own: OwnShipState,
    t: float,
    suite: SensorSuite,
) -> list[Detection]:
    """Geometric detection: position within radar range, velocity within
    lidar range (two-scan differencing), identity within AIS range."""
    detections = []
    for track in tracks:
        state = sample_track(track, t)
        rng = planar_distance(own.x, own.y, state.x, state.y)
        if rng > suite.radar_range:
            continue
        velocity = None
        if rng <= suite.lidar_range:
            prev = sample_track(track, t - suite.scan_interval)
            velocity = (
                (state.x - prev.x) / suite.scan_interval,
                (state.y - prev.y) / suite.scan_interval,
            )
        detections.append(
            Detection(
                obstacle_id=track.track_id,
                x=state.x,
                y=state.y,
                range_m=rng,
                velocity=velocity,
                identified=rng <= suite.ais_range,
            )
        )
    return detections
