"""The deterministic fixed-step voyage loop.

Each step, in order: replay obstacle truth, read sensors, cross-verify,
follow the planned path (or the safe-mode/override command), run the
backup watchdog, fold failover transitions, integrate the hull, check
minimum distances against truth, and accumulate metrics. The step period
is the timing budget's reaction margin (1 / min_update_rate). Identical
scenario specs replay to bit-identical results.
"""

from __future__ import annotations

import math
import time as wallclock
from collections import deque
from dataclasses import asdict, dataclass, field, replace

from .ais import ObstacleTrack, sample_track
from .failover import (
    ControlNotification,
    ControlState,
    Controller,
    EventKind,
    FailoverEvent,
    FailoverStatus,
    RecoveryTracker,
    backup_controller_step,
    safe_mode_target,
    transition,
    vet_command,
    watchdog_evaluate,
)
from .geometry import (
    METERS_PER_NMI,
    VesselState,
    heading_error,
    planar_distance,
    point_in_polygon,
    vector_heading,
)
from .kinematics import ActuatorCommand, OwnShipState, min_update_rate, step as hull_step
from .navigation import (
    PlannedPath,
    PlannerConfig,
    SafetyViolation,
    plan_path,
)
from .scenario import ScenarioSpec
from .sensors import (
    Detection,
    NavFlag,
    NavSolution,
    KinematicLimits,
    PositionFuser,
    SensorFix,
    SensorSuite,
    detect_obstacles,
    gps_read,
    ins_read,
)

# Flags that mark a step as a navigation error; RECALIBRATED is routine
# housekeeping, not an error.
NAV_ERROR_FLAGS = frozenset(
    {NavFlag.SPOOF_SUSPECT, NavFlag.INS_DRIFT_SUSPECT, NavFlag.FALLBACK}
)

PURSUIT_GAIN = 1.5
CARROT_LOOKAHEAD = 2.0  # s of path schedule ahead of the tracked progress point
PROGRESS_WINDOW = 8.0  # s of path searched ahead for the nearest-point update
CATCHUP_GAIN = 0.08  # extra speed fraction per second of schedule deficit


@dataclass(frozen=True)
class RunResult:
    """Everything a certification ledger needs from one simulated voyage."""

    scenario_id: str
    software_version: str
    outcome: str  # ARRIVED | TIMEOUT | COLLISION | PICKUP_REACHED
    miles: float  # nautical miles traveled
    violations: tuple[SafetyViolation, ...]
    failover_events: tuple[ControlNotification, ...]
    nav_error_steps: int
    total_steps: int
    critical_downtime: float  # s
    duration: float  # simulated s
    port_operations: int
    final_x: float
    final_y: float

    def as_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "software_version": self.software_version,
            "outcome": self.outcome,
            "miles": self.miles,
            "violations": [asdict(v) for v in self.violations],
            "failover_events": [n.as_record() for n in self.failover_events],
            "nav_error_steps": self.nav_error_steps,
            "total_steps": self.total_steps,
            "critical_downtime": self.critical_downtime,
            "duration": self.duration,
            "port_operations": self.port_operations,
            "final_x": self.final_x,
            "final_y": self.final_y,
        }

    @property
    def had_failure_event(self) -> bool:
        return any(
            n.new_state in (ControlState.DEGRADED_L1, ControlState.BACKUP_CONTROL_L2)
            for n in self.failover_events
        )


@dataclass(frozen=True)
class StatusSnapshot:
    """One internally-consistent view of a simulation step for the console."""

    time: float
    own: OwnShipState
    obstacles: tuple[VesselState, ...]
    obstacle_ids: tuple[str, ...]
    detections: tuple[Detection, ...]
    gps: SensorFix | None
    ins: SensorFix | None
    nav: NavSolution | None
    status: FailoverStatus
    path: PlannedPath | None
    miles: float
    nav_error_rate: float
    loop_ms: float
    safe_distance: float
    pickup_points: tuple[tuple[float, float], ...]

    def as_dict(self) -> dict:
        return {
            "time": self.time,
            "environment": {
                "own": {
                    "x": self.own.x,
                    "y": self.own.y,
                    "speed": self.own.speed,
                    "heading": self.own.heading,
                    "thrust": self.own.achieved_thrust,
                    "rudder": self.own.achieved_rudder,
                },
                "obstacles": [
                    {
                        "id": oid,
                        "x": s.x,
                        "y": s.y,
                        "speed": s.speed,
                        "heading": s.heading,
                    }
                    for oid, s in zip(self.obstacle_ids, self.obstacles)
                ],
                "detections": [
                    {
                        "id": d.obstacle_id,
                        "x": d.x,
                        "y": d.y,
                        "range": d.range_m,
                        "velocity": list(d.velocity) if d.velocity else None,
                        "identified": d.identified,
                    }
                    for d in self.detections
                ],
            },
            "sensors": {
                "gps": _fix_dict(self.gps),
                "ins": _fix_dict(self.ins),
                "solution": None
                if self.nav is None
                else {
                    "x": self.nav.x,
                    "y": self.nav.y,
                    "source": self.nav.chosen_source.value,
                    "discrepancy": self.nav.discrepancy,
                    "flags": sorted(f.value for f in self.nav.flags),
                },
            },
            "equipment": {
                "state": self.status.state.value,
                "primary_power": self.status.primary_power,
                "active_controller": self.status.active_controller.value,
                "heartbeat_age": self.time - self.status.last_primary_heartbeat,
                "degraded": sorted(self.status.degraded_components),
            },
            "path": None
            if self.path is None
            else {
                "waypoints": [
                    {"t": w.time, "x": w.x, "y": w.y, "speed": w.speed}
                    for w in self.path.waypoints
                ],
                "total_length_nmi": self.path.total_length,
            },
            "metrics": {
                "miles": self.miles,
                "nav_error_rate": self.nav_error_rate,
                "loop_ms": self.loop_ms,
            },
            "safe_distance": self.safe_distance,
            "pickup_points": [list(p) for p in self.pickup_points],
        }


def _fix_dict(fix: SensorFix | None) -> dict | None:
    if fix is None:
        return None
    return {
        "source": fix.source.value,
        "available": fix.available,
        "x": fix.x,
        "y": fix.y,
        "quality": fix.quality,
    }


class Simulation:
    """Owns all mutable state of one voyage; single-threaded by design."""

    def __init__(
        self,
        spec: ScenarioSpec,
        tracks: list[ObstacleTrack] | None = None,
    ):
        self.spec = spec
        self.tracks = spec.load_tracks() if tracks is None else tracks
        timing = min_update_rate(spec.timing)
        self.timing = timing
        self.dt = timing.margin
        self.required_rate = timing.min_update_rate
        self.hull = spec.hull
        self.suite = SensorSuite(
            lidar_range=spec.sensor_lidar_range,
            radar_range=spec.sensor_radar_range,
        )
        cruise = (
            spec.planner_cruise_speed
            if spec.planner_cruise_speed is not None
            else 0.8 * spec.hull.v_max
        )
        self.planner_config = PlannerConfig(
            bounds=spec.bounds,
            safe_distance=spec.safe_distance,
            time_step=self.dt,
            cruise_speed=cruise,
            max_time=spec.planner_max_time or spec.timeout,
            name=spec.planner_name,
        )
        self.path: PlannedPath = plan_path(
            spec.start, spec.goal, self.tracks, self.planner_config
        )

        initial_heading = (
            vector_heading(spec.goal[0] - spec.start[0], spec.goal[1] - spec.start[1])
            if spec.goal != spec.start
            else 0.0
        )
        self.own = OwnShipState(
            x=spec.start[0], y=spec.start[1], heading=initial_heading
        )
        self.alerts: list[dict] = []
        self.fuser = PositionFuser(
            self.own,
            threshold=spec.cross_verify_threshold,
            limits=KinematicLimits(max_speed=spec.kinematic_max_speed),
            alert_sink=self.alerts.append,
        )
        self.status = FailoverStatus()
        self.notifications: list[ControlNotification] = []
        self.recovery = RecoveryTracker(required_beats=spec.recovery_beats)
        self.heartbeats: list[float] = [0.0]
        self.primary_command = ActuatorCommand()
        self.override_queue: deque[FailoverEvent] = deque()
        self.helm_command: ActuatorCommand | None = None
        self.safe_target: tuple[float, float] | None = None

        self._progress = 0.0

        self.violations: list[SafetyViolation] = []
        self.miles = 0.0
        self.nav_error_steps = 0
        self.total_steps = 0
        self.critical_downtime = 0.0
        self.outcome: str | None = None
        self.collision = False

        self.last_gps: SensorFix | None = None
        self.last_ins: SensorFix | None = None
        self.last_nav: NavSolution | None = None
        self.last_detections: tuple[Detection, ...] = ()
        self.obstacle_states: tuple[VesselState, ...] = ()
        self.loop_ms = 0.0

    # -- per-step pieces --------------------------------------------------

    def _primary_alive(self, t: float) -> bool:
        return not any(
            lo <= t < hi for lo, hi in self.spec.failures.heartbeat_stall_windows
        )

    def _component_events(self, t: float, t_prev: float) -> list[FailoverEvent]:
        """Fault/restore edges crossed in (t_prev, t]."""
        events = []
        for component, lo, hi in self.spec.failures.component_faults:
            if t_prev < lo <= t:
                events.append(
                    FailoverEvent(
                        kind=EventKind.COMPONENT_FAULT, time=t, component=component
                    )
                )
            if t_prev < hi <= t:
                events.append(
                    FailoverEvent(
                        kind=EventKind.COMPONENT_RESTORED, time=t, component=component
                    )
                )
        return events

    def _advance_progress(self, est: OwnShipState) -> float:
        """Monotone nearest-point tracking of the ship's progress along the path."""
        end = self.path.end_time
        if self._progress >= end:
            return end
        best_u = self._progress
        best_d = math.inf
        steps = int(PROGRESS_WINDOW / self.dt)
        for k in range(steps + 1):
            u = self._progress + k * self.dt
            if u > end:
                u = end
            px, py = self.path.position_at(u)
            d = planar_distance(est.x, est.y, px, py)
            if d < best_d:
                best_d = d
                best_u = u
            if u == end:
                break
        self._progress = best_u
        return best_u

    def _follow_path(self, est: OwnShipState, t: float) -> ActuatorCommand:
        """Pure pursuit of a carrot ahead of the ship's own progress point.

        Anchoring to progress rather than the wall schedule keeps the ship
        on the planned corridor even while it lags the schedule; a bounded
        catch-up term closes the deficit gradually.
        """
        u = self._advance_progress(est)
        carrot_t = min(u + CARROT_LOOKAHEAD, self.path.end_time)
        cx, cy = self.path.position_at(carrot_t)
        gap = planar_distance(est.x, est.y, cx, cy)
        if gap > 1e-9:
            bearing = vector_heading(cx - est.x, cy - est.y)
            err = heading_error(bearing, est.heading)
        else:
            err = 0.0
        rudder = max(
            -self.hull.rudder_limit, min(self.hull.rudder_limit, PURSUIT_GAIN * err)
        )
        if u >= self.path.end_time:
            desired = gap / CARROT_LOOKAHEAD  # brake into the goal
        else:
            deficit = max(0.0, t - u)
            desired = self.path.speed_at(u) * (1.0 + CATCHUP_GAIN * min(deficit, 5.0))
            desired = min(desired, 0.95 * self.hull.v_max)
        thrust = max(0.0, min(1.0, desired / self.hull.v_max))
        return ActuatorCommand(thrust=thrust, rudder=rudder)

    def submit_override(self, event: FailoverEvent) -> None:
        """Queue an operator event; folded in at the next step boundary."""
        self.override_queue.append(event)

    def set_helm(self, command: ActuatorCommand) -> None:
        self.helm_command = command

    # -- the step ----------------------------------------------------------

    def step(self) -> None:
        started = wallclock.perf_counter()
        t = self.own.time
        dt = self.dt
        spec = self.spec

        self.obstacle_states = tuple(sample_track(tr, t) for tr in self.tracks)

        gps = gps_read(self.own, spec.faults, t)
        elapsed = max(0.0, t - self.fuser.ins_calibrated_at)
        ins = ins_read(
            self.own,
            spec.faults,
            elapsed,
            degraded_threshold=spec.cross_verify_threshold,
        )
        nav = self.fuser.fuse(gps, ins, t, dt)
        detections = detect_obstacles(self.tracks, self.own, t, self.suite)

        est = replace(self.own, x=nav.x, y=nav.y)
        alive = self._primary_alive(t)
        primary_in_control = self.status.state in (
            ControlState.NORMAL,
            ControlState.DEGRADED_L1,
        )
        if alive:
            # during L2 the primary's probe beats ride the separate channel,
            # so the history stays fresh for the recovery hysteresis
            self.heartbeats.append(t)
            if len(self.heartbeats) > 8:
                del self.heartbeats[:-8]
            if primary_in_control:
                self.primary_command = self._follow_path(est, t)

        events = self._component_events(t, t - dt)
        events += watchdog_evaluate(
            self.heartbeats,
            self.primary_command if (alive and primary_in_control) else None,
            est,
            detections,
            self.required_rate,
            t,
            safe_distance=spec.safe_distance,
            params=self.hull,
            vet_dt=dt,
        )
        in_l2 = self.status.state is ControlState.BACKUP_CONTROL_L2
        primary_healthy = alive
        if in_l2 and alive:
            # probation: the primary's would-be command must also vet clean
            # before control returns
            probe = self._follow_path(est, t)
            primary_healthy = (
                vet_command(
                    probe,
                    est,
                    detections,
                    safe_distance=spec.safe_distance,
                    horizon=30.0,
                    params=self.hull,
                    dt=dt,
                )
                is None
            )
        recovered = self.recovery.observe(
            primary_healthy=primary_healthy,
            in_backup_control=in_l2,
            t=t,
        )
        if recovered is not None:
            events.append(recovered)
        while self.override_queue:
            events.append(self.override_queue.popleft())

        was_l2 = self.status.state is ControlState.BACKUP_CONTROL_L2
        for event in events:
            self.status = transition(self.status, event, notify=self.notifications.append)
        self.status = replace(self.status, last_primary_heartbeat=self.heartbeats[-1])

        if self.status.state is ControlState.BACKUP_CONTROL_L2 and (
            not was_l2 or self.safe_target is None
        ):
            self.safe_target = safe_mode_target((nav.x, nav.y), spec.pickup_points)

        if self.status.state is ControlState.MANUAL_OVERRIDE:
            command = self.helm_command or ActuatorCommand()
        elif self.status.state is ControlState.BACKUP_CONTROL_L2:
            command = backup_controller_step(
                est,
                nav,
                detections,
                self.safe_target,
                self.hull,
                safe_distance=spec.safe_distance,
            )
        else:
            command = self.primary_command

        prev = self.own
        self.own = hull_step(self.own, command, dt, self.hull)
        t_next = self.own.time

        for track in self.tracks:
            state = sample_track(track, t_next)
            d = planar_distance(self.own.x, self.own.y, state.x, state.y)
            if d < spec.safe_distance:
                self.violations.append(
                    SafetyViolation(
                        time=t_next,
                        obstacle_id=track.track_id,
                        distance=d,
                        threshold=spec.safe_distance,
                    )
                )
                if d < spec.collision_distance:
                    self.collision = True

        self.miles += planar_distance(prev.x, prev.y, self.own.x, self.own.y) / METERS_PER_NMI
        nav_err = bool(NAV_ERROR_FLAGS & nav.flags) or (
            planar_distance(nav.x, nav.y, prev.x, prev.y) > spec.nav_accuracy_bound
        )
        if nav_err:
            self.nav_error_steps += 1
        sensors_out = {"lidar", "radar"} <= self.status.degraded_components
        if NavFlag.FALLBACK in nav.flags or sensors_out:
            self.critical_downtime += dt
        self.total_steps += 1

        self.last_gps, self.last_ins, self.last_nav = gps, ins, nav
        self.last_detections = tuple(detections)

        if self.collision:
            self.outcome = "COLLISION"
        elif (
            self.status.state is ControlState.BACKUP_CONTROL_L2
            and self.safe_target is not None
            and planar_distance(
                self.own.x, self.own.y, self.safe_target[0], self.safe_target[1]
            )
            <= spec.arrival_radius
        ):
            self.outcome = "PICKUP_REACHED"
        elif (
            planar_distance(self.own.x, self.own.y, spec.goal[0], spec.goal[1])
            <= spec.arrival_radius
            and self.status.state is not ControlState.BACKUP_CONTROL_L2
        ):
            self.outcome = "ARRIVED"
        elif t_next >= spec.timeout:
            self.outcome = "TIMEOUT"

        self.loop_ms = (wallclock.perf_counter() - started) * 1000.0

    @property
    def done(self) -> bool:
        return self.outcome is not None

    def run(self) -> RunResult:
        while not self.done:
            self.step()
        return self.result()

    def result(self) -> RunResult:
        if self.outcome is None:
            raise RuntimeError("simulation has not terminated")
        spec = self.spec
        departures = int(
            any(point_in_polygon(spec.start[0], spec.start[1], list(p)) for p in spec.port_polygons)
        )
        arrivals = int(
            self.outcome == "ARRIVED"
            and any(
                point_in_polygon(spec.goal[0], spec.goal[1], list(p))
                for p in spec.port_polygons
            )
        )
        return RunResult(
            scenario_id=spec.id,
            software_version=spec.software_version(),
            outcome=self.outcome,
            miles=self.miles,
            violations=tuple(self.violations),
            failover_events=tuple(self.notifications),
            nav_error_steps=self.nav_error_steps,
            total_steps=self.total_steps,
            critical_downtime=self.critical_downtime,
            duration=self.own.time,
            port_operations=departures + arrivals,
            final_x=self.own.x,
            final_y=self.own.y,
        )

    def snapshot(self) -> StatusSnapshot:
        rate = self.nav_error_steps / self.total_steps if self.total_steps else 0.0
        return StatusSnapshot(
            time=self.own.time,
            own=self.own,
            obstacles=self.obstacle_states,
            obstacle_ids=tuple(tr.track_id for tr in self.tracks),
            detections=self.last_detections,
            gps=self.last_gps,
            ins=self.last_ins,
            nav=self.last_nav,
            status=self.status,
            path=self.path,
            miles=self.miles,
            nav_error_rate=rate,
            loop_ms=self.loop_ms,
            safe_distance=self.spec.safe_distance,
            pickup_points=self.spec.pickup_points,
        )
