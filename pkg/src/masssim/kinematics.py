"""Own-ship motion model and the control-loop timing budget.

The hull model is deliberately small: first-order actuator lags, quadratic
drag toward a thrust-set speed, turn rate proportional to rudder times
speed, and a constant-deceleration emergency stop. Fixed-step forward
Euler keeps every run bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels


class InfeasibleBudget(ValueError):
    """The reaction margin is not positive; no update rate can satisfy the budget."""


class ZeroRelativeSpeed(ValueError):
    """Own and obstacle speeds are both zero; no closing geometry exists."""


class NegativeDt(ValueError):
    pass


@dataclass(frozen=True)
class TimingBudget:
    """Inputs of the reaction-time budget for a sensor-to-actuator control loop."""

    v_own: float  # m/s
    v_obstacle_max: float  # m/s
    d_sensor: float  # m
    d_emergency_stop: float  # m
    t_emergency_stop: float  # s
    t_sensor_update: float  # s
    t_mech_response: float  # s
    t_eng_response: float  # s
    safety_factor: float = 2.0

    def __post_init__(self) -> None:
        for name in (
            "v_own",
            "v_obstacle_max",
            "d_sensor",
            "d_emergency_stop",
            "t_emergency_stop",
            "t_sensor_update",
            "t_mech_response",
            "t_eng_response",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.safety_factor < 1:
            raise ValueError("safety_factor must be >= 1")
        if self.d_sensor <= 0:
            raise ValueError("d_sensor must be > 0")


@dataclass(frozen=True)
class TimingResult:
    t_sys_response: float  # s
    t_available: float  # s
    margin: float  # s
    min_update_rate: float  # Hz


@dataclass(frozen=True)
class OwnShipState:
    """Own-ship state in the local planar frame (x east, y north, meters)."""

    x: float = 0.0
    y: float = 0.0
    speed: float = 0.0  # m/s
    heading: float = 0.0  # degrees true
    achieved_thrust: float = 0.0  # fraction of full thrust actually delivered
    achieved_rudder: float = 0.0  # degrees actually reached
    time: float = 0.0


@dataclass(frozen=True)
class ActuatorCommand:
    thrust: float = 0.0  # commanded fraction [0, 1]
    rudder: float = 0.0  # commanded degrees, clamped to the hull limit
    emergency_stop: bool = False


@dataclass(frozen=True)
class HullParams:
    v_max: float = 10.0  # m/s at full thrust
    rudder_limit: float = 35.0  # degrees
    t_eng_response: float = 0.5  # thrust lag time constant, s
    t_mech_response: float = 0.5  # rudder lag time constant, s
    emergency_decel: float = 10.0  # m/s^2 under emergency stop
    drag_coeff: float = 0.01  # quadratic drag, 1/m
    turn_rate_gain: float = 0.06  # deg/s per (rudder deg * m/s)

    @classmethod
    def from_budget(cls, budget: TimingBudget, **overrides) -> "HullParams":
        """Derive lags and stopping power from a timing budget.

        The deceleration is sized so a stop from budget.v_own satisfies both
        the stop-distance and stop-time limits.
        """
        decel_candidates = []
        if budget.t_emergency_stop > 0:
            decel_candidates.append(budget.v_own / budget.t_emergency_stop)
        if budget.d_emergency_stop > 0:
            decel_candidates.append(
                budget.v_own * budget.v_own / (2.0 * budget.d_emergency_stop)
            )
        decel = max(decel_candidates) if decel_candidates else 10.0
        params = dict(
            v_max=max(budget.v_own, 1.0),
            t_eng_response=budget.t_eng_response,
            t_mech_response=budget.t_mech_response,
            emergency_decel=decel,
        )
        params.update(overrides)
        return cls(**params)

    def as_tuple(self) -> tuple[float, float, float, float, float, float, float]:
        """Kernel argument layout."""
        return (
            self.v_max,
            self.rudder_limit,
            self.t_eng_response,
            self.t_mech_response,
            self.emergency_decel,
            self.drag_coeff,
            self.turn_rate_gain,
        )


def system_response_time(budget: TimingBudget, scan_count: int = 2) -> float:
    """Total latency from a world change to a completed emergency maneuver.

    scan_count sensor updates are needed to recover a velocity vector from
    successive scans (two by default).
    """
    return (
        scan_count * budget.t_sensor_update
        + budget.t_mech_response
        + budget.t_eng_response
        + budget.t_emergency_stop
    )


def min_update_rate(budget: TimingBudget, scan_count: int = 2) -> TimingResult:
    """Reaction margin and the controller update rate it demands.

    Head-on closing at v_own + v_obstacle_max across the sensor range,
    derated by the safety factor, must leave a positive margin after the
    system response time; the controller must tick at least once per
    margin.
    """
    v_rel = budget.v_own + budget.v_obstacle_max
    if v_rel == 0.0:
        raise ZeroRelativeSpeed("v_own + v_obstacle_max must be > 0")
    t_sys = system_response_time(budget, scan_count)
    t_available = (budget.d_sensor / v_rel) / budget.safety_factor
    margin = t_available - t_sys
    if margin <= 0.0:
        raise InfeasibleBudget(
            f"margin {margin:.3f}s <= 0 (available {t_available:.3f}s, "
            f"response {t_sys:.3f}s)"
        )
    return TimingResult(
        t_sys_response=t_sys,
        t_available=t_available,
        margin=margin,
        min_update_rate=1.0 / margin,
    )


def required_capacity(max_recorded_obstacles: int, safety_factor: float) -> int:
    """Obstacle-processing headroom: recorded peak times the safety factor, rounded up."""
    if max_recorded_obstacles < 0:
        raise ValueError("max_recorded_obstacles must be >= 0")
    if safety_factor < 1:
        raise ValueError("safety_factor must be >= 1")
    return math.ceil(max_recorded_obstacles * safety_factor)


def step(
    state: OwnShipState,
    command: ActuatorCommand,
    dt: float,
    params: HullParams,
) -> OwnShipState:
    """Advance the own ship by dt under a held actuator command.

    Deterministic explicit Euler; identical inputs give bit-identical
    outputs on either kernel backend.
    """
    if dt < 0:
        raise NegativeDt(f"dt must be >= 0, got {dt}")
    x, y, speed, heading, ath, ard = _kernels.step_once(
        state.x,
        state.y,
        state.speed,
        state.heading,
        state.achieved_thrust,
        state.achieved_rudder,
        command.thrust,
        command.rudder,
        command.emergency_stop,
        dt,
        *params.as_tuple(),
    )
    return OwnShipState(
        x=x,
        y=y,
        speed=speed,
        heading=heading,
        achieved_thrust=ath,
        achieved_rudder=ard,
        time=state.time + dt,
    )
