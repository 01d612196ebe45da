"""Dual-controller redundancy: watchdog, command vetting, power disconnect,
safe-mode navigation, and manual override.

The backup watches the primary's heartbeat cadence and vets its actuator
orders by forward simulation. A stalled or dangerous primary loses power
and the backup steers for the nearest pickup point at reduced speed until
a human or a recovered primary takes over. Human override preempts
everything and is never preempted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from . import _kernels
from .geometry import heading_error, planar_distance, vector_heading
from .kinematics import ActuatorCommand, HullParams, OwnShipState
from .sensors import Detection, NavSolution

DEFAULT_MISSED_BEAT_TOLERANCE = 3
DEFAULT_RECOVERY_BEATS = 50
DEFAULT_VET_HORIZON = 30.0  # s
BACKUP_SPEED_FRACTION = 0.3


class NoPickupPoints(ValueError):
    """The scenario must define at least one safe pickup point."""


class ControlState(enum.Enum):
    NORMAL = "NORMAL"
    DEGRADED_L1 = "DEGRADED_L1"
    BACKUP_CONTROL_L2 = "BACKUP_CONTROL_L2"
    MANUAL_OVERRIDE = "MANUAL_OVERRIDE"


class Controller(enum.Enum):
    PRIMARY = "primary"
    BACKUP = "backup"
    HUMAN = "human"


class EventKind(enum.Enum):
    HEARTBEAT_STALL = "HeartbeatStall"
    DANGEROUS_COMMAND = "DangerousCommand"
    COMPONENT_FAULT = "ComponentFault"
    COMPONENT_RESTORED = "ComponentRestored"
    PRIMARY_HEALTHY_CONFIRMED = "PrimaryHealthyConfirmed"
    OVERRIDE_ENGAGED = "OverrideEngaged"
    OVERRIDE_RELEASED = "OverrideReleased"


@dataclass(frozen=True)
class VettingRecord:
    """Why a primary command was judged dangerous."""

    t_cpa: float
    d_cpa: float
    obstacle_id: str
    safe_distance: float
    horizon: float


@dataclass(frozen=True)
class FailoverEvent:
    kind: EventKind
    time: float
    component: str | None = None
    evidence: VettingRecord | None = None

    def __post_init__(self) -> None:
        if (self.evidence is not None) != (self.kind is EventKind.DANGEROUS_COMMAND):
            raise ValueError("evidence present iff kind is DangerousCommand")


@dataclass(frozen=True)
class FailoverStatus:
    state: ControlState = ControlState.NORMAL
    primary_power: bool = True
    active_controller: Controller = Controller.PRIMARY
    last_primary_heartbeat: float = 0.0
    degraded_components: frozenset[str] = frozenset()
    time: float = 0.0

    def __post_init__(self) -> None:
        s = self.state
        if s is ControlState.BACKUP_CONTROL_L2:
            if self.primary_power or self.active_controller is not Controller.BACKUP:
                raise ValueError("L2 requires primary power off and backup in control")
        elif s is ControlState.MANUAL_OVERRIDE:
            if self.active_controller is not Controller.HUMAN:
                raise ValueError("manual override requires human control")
        elif s is ControlState.NORMAL:
            if not self.primary_power or self.active_controller is not Controller.PRIMARY:
                raise ValueError("NORMAL requires a powered primary in control")


@dataclass(frozen=True)
class ControlNotification:
    """Record pushed to the control station on every state change."""

    time: float
    old_state: ControlState
    new_state: ControlState
    cause: str

    def as_record(self) -> dict:
        return {
            "time": self.time,
            "kind": "failover_transition",
            "old_state": self.old_state.value,
            "new_state": self.new_state.value,
            "cause": self.cause,
        }


NotifySink = Callable[[ControlNotification], None]


def transition(
    status: FailoverStatus,
    event: FailoverEvent,
    notify: NotifySink | None = None,
) -> FailoverStatus:
    """Total transition function of the redundancy state machine.

    Unhandled (state, event) pairs return the status unchanged. Manual
    override absorbs every machine-originated event until released.
    """
    if event.time < status.time:
        raise ValueError("event time precedes status time")
    s = status.state
    k = event.kind
    new = status

    if k is EventKind.OVERRIDE_ENGAGED:
        new = replace(
            status,
            state=ControlState.MANUAL_OVERRIDE,
            active_controller=Controller.HUMAN,
            time=event.time,
        )
    elif s is ControlState.MANUAL_OVERRIDE:
        if k is EventKind.OVERRIDE_RELEASED:
            new = replace(
                status,
                state=ControlState.NORMAL,
                active_controller=Controller.PRIMARY,
                primary_power=True,
                time=event.time,
            )
    elif k is EventKind.COMPONENT_FAULT and s in (
        ControlState.NORMAL,
        ControlState.DEGRADED_L1,
    ):
        new = replace(
            status,
            state=ControlState.DEGRADED_L1,
            degraded_components=status.degraded_components | {event.component or "?"},
            time=event.time,
        )
    elif k is EventKind.COMPONENT_RESTORED and s is ControlState.DEGRADED_L1:
        remaining = status.degraded_components - {event.component or "?"}
        new = replace(
            status,
            state=ControlState.DEGRADED_L1 if remaining else ControlState.NORMAL,
            degraded_components=remaining,
            time=event.time,
        )
    elif k in (EventKind.HEARTBEAT_STALL, EventKind.DANGEROUS_COMMAND) and s in (
        ControlState.NORMAL,
        ControlState.DEGRADED_L1,
    ):
        new = replace(
            status,
            state=ControlState.BACKUP_CONTROL_L2,
            primary_power=False,
            active_controller=Controller.BACKUP,
            time=event.time,
        )
    elif k is EventKind.PRIMARY_HEALTHY_CONFIRMED and s is ControlState.BACKUP_CONTROL_L2:
        new = replace(
            status,
            state=ControlState.NORMAL,
            primary_power=True,
            active_controller=Controller.PRIMARY,
            time=event.time,
        )

    if notify is not None and new.state is not status.state:
        cause = k.value if event.component is None else f"{k.value}({event.component})"
        notify(
            ControlNotification(
                time=event.time,
                old_state=status.state,
                new_state=new.state,
                cause=cause,
            )
        )
    return new


def watchdog_evaluate(
    heartbeat_times: Sequence[float],
    latest_command: ActuatorCommand | None,
    own: OwnShipState,
    detections: Sequence[Detection],
    required_rate: float,
    t: float,
    *,
    safe_distance: float,
    params: HullParams,
    missed_beat_tolerance: int = DEFAULT_MISSED_BEAT_TOLERANCE,
    horizon: float = DEFAULT_VET_HORIZON,
    vet_dt: float = 0.1,
) -> list[FailoverEvent]:
    """Backup-side checks on the primary: cadence and command safety.

    Emits HeartbeatStall when the primary has been silent longer than
    missed_beat_tolerance update periods, and DangerousCommand when its
    latest order forward-simulates below the safe distance.
    """
    if required_rate <= 0:
        raise ValueError("required_rate must be > 0")
    events = []
    last_beat = heartbeat_times[-1] if heartbeat_times else 0.0
    if t - last_beat > missed_beat_tolerance / required_rate:
        events.append(FailoverEvent(kind=EventKind.HEARTBEAT_STALL, time=t))
    if latest_command is not None:
        record = vet_command(
            latest_command,
            own,
            detections,
            safe_distance=safe_distance,
            horizon=horizon,
            params=params,
            dt=vet_dt,
        )
        if record is not None:
            events.append(
                FailoverEvent(
                    kind=EventKind.DANGEROUS_COMMAND, time=t, evidence=record
                )
            )
    return events


def vet_command(
    command: ActuatorCommand,
    own: OwnShipState,
    detections: Sequence[Detection],
    *,
    safe_distance: float,
    horizon: float,
    params: HullParams,
    dt: float = 0.1,
) -> VettingRecord | None:
    """Forward-simulate a held command against constant-velocity detections.

    Returns None when the predicted minimum distance stays at or above the
    safe distance, otherwise the offending CPA as evidence.
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if not detections:
        return None
    obs_x = [d.x for d in detections]
    obs_y = [d.y for d in detections]
    obs_vx = [d.velocity[0] if d.velocity else 0.0 for d in detections]
    obs_vy = [d.velocity[1] if d.velocity else 0.0 for d in detections]
    n_steps = max(1, math.ceil(horizon / dt))
    min_d, t_min, idx = _kernels.forward_min_distance(
        (own.x, own.y, own.speed, own.heading, own.achieved_thrust, own.achieved_rudder),
        (command.thrust, command.rudder, 1.0 if command.emergency_stop else 0.0),
        params.as_tuple(),
        obs_x,
        obs_y,
        obs_vx,
        obs_vy,
        dt,
        n_steps,
    )
    if min_d < safe_distance:
        return VettingRecord(
            t_cpa=t_min,
            d_cpa=min_d,
            obstacle_id=detections[idx].obstacle_id,
            safe_distance=safe_distance,
            horizon=horizon,
        )
    return None


def safe_mode_target(
    position: tuple[float, float], pickup_points: Sequence[tuple[float, float]]
) -> tuple[float, float]:
    """Nearest declared pickup point; ties break toward the earliest listed."""
    if not pickup_points:
        raise NoPickupPoints("scenario defines no safe pickup points")
    best = pickup_points[0]
    best_d = planar_distance(position[0], position[1], best[0], best[1])
    for pt in pickup_points[1:]:
        d = planar_distance(position[0], position[1], pt[0], pt[1])
        if d < best_d:
            best, best_d = pt, d
    return best


def backup_controller_step(
    own: OwnShipState,
    nav: NavSolution,
    detections: Sequence[Detection],
    target: tuple[float, float],
    params: HullParams,
    *,
    safe_distance: float,
    speed_fraction: float = BACKUP_SPEED_FRACTION,
    pursuit_gain: float = 1.0,
) -> ActuatorCommand:
    """Simple pure-pursuit toward the safe-mode target at reduced speed.

    Anything detected within twice the safe distance forces an emergency
    stop; there is no path optimization here by design.
    """
    for d in detections:
        if planar_distance(nav.x, nav.y, d.x, d.y) < 2.0 * safe_distance:
            return ActuatorCommand(thrust=0.0, rudder=0.0, emergency_stop=True)
    bearing = vector_heading(target[0] - nav.x, target[1] - nav.y)
    err = heading_error(bearing, own.heading)
    rudder = max(-params.rudder_limit, min(params.rudder_limit, pursuit_gain * err))
    return ActuatorCommand(thrust=speed_fraction, rudder=rudder, emergency_stop=False)


class RecoveryTracker:
    """Counts consecutive healthy primary heartbeats while the backup holds
    control; emits PrimaryHealthyConfirmed once the streak is long enough."""

    def __init__(self, required_beats: int = DEFAULT_RECOVERY_BEATS):
        self.required_beats = required_beats
        self.streak = 0

    def observe(self, primary_healthy: bool, in_backup_control: bool, t: float) -> FailoverEvent | None:
        if not in_backup_control:
            self.streak = 0
            return None
        if primary_healthy:
            self.streak += 1
            if self.streak >= self.required_beats:
                self.streak = 0
                return FailoverEvent(kind=EventKind.PRIMARY_HEALTHY_CONFIRMED, time=t)
        else:
            self.streak = 0
        return None
