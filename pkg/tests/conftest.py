"""Shared scenario fixtures built directly (no YAML) for engine-level tests."""

from __future__ import annotations

import pytest

from masssim.kinematics import HullParams, TimingBudget
from masssim.scenario import FailureSchedule, ScenarioSpec
from masssim.sensors import FaultModel

REPRESENTATIVE_BUDGET = TimingBudget(
    v_own=10.0,
    v_obstacle_max=10.0,
    d_sensor=100.0,
    d_emergency_stop=10.0,
    t_emergency_stop=1.0,
    t_sensor_update=0.2,
    t_mech_response=0.5,
    t_eng_response=0.5,
    safety_factor=2.0,
)


def make_spec(**overrides) -> ScenarioSpec:
    base = dict(
        id="test",
        rng_seed=42,
        start=(0.0, 0.0),
        goal=(100.0, 0.0),
        bounds=(-300.0, -300.0, 1200.0, 300.0),
        timing=REPRESENTATIVE_BUDGET,
        hull=HullParams.from_budget(REPRESENTATIVE_BUDGET),
        faults=FaultModel(rng_seed=42),
        pickup_points=((0.0, -100.0),),
        timeout=200.0,
        failures=FailureSchedule(),
    )
    base.update(overrides)
    return ScenarioSpec(**base)


@pytest.fixture
def spec_factory():
    return make_spec
