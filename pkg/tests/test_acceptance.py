"""Acceptance suite: one test per release criterion, each printing a
pass line with its criterion number. Tolerances are pinned here and
nowhere else."""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import random
from pathlib import Path

import pytest

from masssim.ais import decode_sentence
from masssim.certification import (
    BUILTIN_CRITERIA,
    evaluate_stage,
    load_campaign,
    run_campaign,
    record_run,
    CampaignLedger,
)
from masssim.failover import (
    ControlState,
    Controller,
    EventKind,
    FailoverStatus,
    transition,
)
from masssim.geometry import KNOTS_TO_MPS
from masssim.kinematics import OwnShipState, TimingBudget, min_update_rate, system_response_time
from masssim.navigation import PlannedPath, Waypoint, check_path_safety, closest_approach
from masssim.scenario import FailureSchedule
from masssim.sensors import (
    FaultModel,
    NavFlag,
    PositionFuser,
    Source,
    gps_read,
    ins_read,
)
from masssim.simulation import Simulation

from .conftest import REPRESENTATIVE_BUDGET, make_spec
from .helpers import path_safety_oracle, random_position_report
from .test_ais import (
    SENTENCE_T1_MOORED,
    SENTENCE_T1_UNDERWAY,
    SENTENCE_T18,
    SENTENCE_T5_SINGLE,
)
from .test_certification import ledger_of, make_run
from .test_failover import make_event, status_in
from .test_navigation import track_from

DATA = Path(__file__).parent / "data"
REL = 1e-9


def done(n: int, name: str) -> None:
    print(f"ACCEPTANCE {n:02d} {name}: PASS")


def test_01_timing_worked_example():
    """Reaction-budget arithmetic reproduces the worked example exactly."""
    assert system_response_time(REPRESENTATIVE_BUDGET) == pytest.approx(2.4, rel=REL)
    result = min_update_rate(REPRESENTATIVE_BUDGET)
    assert result.t_sys_response == pytest.approx(2.4, rel=REL)
    assert result.t_available == pytest.approx(2.5, rel=REL)
    assert result.margin == pytest.approx(0.1, rel=REL)
    assert result.min_update_rate == pytest.approx(10.0, rel=REL)
    done(1, "timing worked example")


def test_02_cpa_head_on():
    """100 m head-on closure at 10 m/s each gives 5 s to closest approach."""
    track = track_from([(0.0, 100.0, 0.0), (20.0, -100.0, 0.0)])
    t_cpa, d_cpa = closest_approach(((0.0, 0.0), (10.0, 0.0)), track, 0.0, 20.0)
    assert t_cpa == pytest.approx(5.0, abs=1e-6)
    assert d_cpa == pytest.approx(0.0, abs=1e-6)
    done(2, "head-on CPA")


def test_03_ins_drift_endpoints():
    """Drift magnitudes at the quoted rate-range endpoints."""
    origin = OwnShipState()
    hi = ins_read(origin, FaultModel(ins_drift_rate=1.0, ins_drift_heading=90.0), 3600.0)
    assert math.dist((hi.x, hi.y), (0.0, 0.0)) == 1852.0  # exact
    lo = ins_read(origin, FaultModel(ins_drift_rate=0.1, ins_drift_heading=90.0), 3600.0)
    assert math.dist((lo.x, lo.y), (0.0, 0.0)) == pytest.approx(185.2, rel=REL)
    done(3, "INS drift endpoints")


def test_04_spoof_rejection_and_clean_preference():
    """A 100 m spoof is rejected for INS at every spoofed step; without the
    spoof, GPS wins at 99.99%+ of a ten-minute seeded run."""
    dt = 0.1
    steps = 6000  # 10 minutes at 10 Hz
    window = (60.0, 120.0)

    def run(spoofed: bool):
        faults = FaultModel(
            gps_noise_sigma=2.0,
            gps_spoof_offset=(100.0, 0.0) if spoofed else (0.0, 0.0),
            gps_spoof_window=window if spoofed else None,
            ins_drift_rate=0.3,
            ins_drift_heading=45.0,
            rng_seed=1,
        )
        fuser = PositionFuser(OwnShipState(), threshold=20.0)
        chosen = []
        for k in range(steps):
            t = k * dt
            truth = OwnShipState(x=5.0 * t, y=0.0, speed=5.0, heading=90.0, time=t)
            gps = gps_read(truth, faults, t)
            ins = ins_read(truth, faults, max(0.0, t - fuser.ins_calibrated_at))
            nav = fuser.fuse(gps, ins, t, dt)
            chosen.append((t, nav))
        return chosen

    spoofed = run(spoofed=True)
    in_window = [(t, nav) for t, nav in spoofed if window[0] <= t < window[1]]
    assert in_window
    for t, nav in in_window:
        assert nav.chosen_source is Source.INS, f"GPS accepted at spoofed t={t}"
        assert NavFlag.SPOOF_SUSPECT in nav.flags

    clean = run(spoofed=False)
    gps_share = sum(1 for _, nav in clean if nav.chosen_source is Source.GPS) / steps
    assert gps_share >= 0.9999
    done(4, "spoof rejection")


def test_05_failover_latency_and_safe_mode():
    """A stalled primary loses control within 0.4 s and the backup makes the
    nearest pickup point before timeout."""
    spec = make_spec(
        goal=(600.0, 0.0),
        pickup_points=((50.0, -150.0), (500.0, 200.0)),
        timeout=300.0,
        failures=FailureSchedule(heartbeat_stall_windows=((10.0, 300.0),)),
    )
    result = Simulation(spec, tracks=[]).run()
    takeovers = [
        n for n in result.failover_events if n.new_state is ControlState.BACKUP_CONTROL_L2
    ]
    assert takeovers, "backup never took over"
    assert takeovers[0].time - 10.0 <= 0.4 + 1e-9
    assert result.outcome == "PICKUP_REACHED"
    # the backup picked the nearest pickup point at takeover
    nearest = (50.0, -150.0)
    assert math.dist((result.final_x, result.final_y), nearest) <= spec.arrival_radius + 1e-9
    assert result.duration < spec.timeout
    done(5, "failover latency and safe mode")


def test_06_state_machine_totality():
    """Exhaustive (state x event) sweep keeps every invariant; manual
    override absorbs machine events."""
    machine_kinds = (
        EventKind.HEARTBEAT_STALL,
        EventKind.DANGEROUS_COMMAND,
        EventKind.COMPONENT_FAULT,
        EventKind.COMPONENT_RESTORED,
        EventKind.PRIMARY_HEALTHY_CONFIRMED,
    )
    for state, kind in itertools.product(ControlState, EventKind):
        out = transition(status_in(state), make_event(kind))
        assert isinstance(out, FailoverStatus)  # invariants checked on build
        if state is ControlState.MANUAL_OVERRIDE and kind in machine_kinds:
            assert out.state is ControlState.MANUAL_OVERRIDE
            assert out.active_controller is Controller.HUMAN
    done(6, "state machine totality")


def test_07_safety_checker_oracle_equivalence():
    """100 random small scenarios: checker matches the 10x-dense oracle."""
    rng = random.Random(777)
    for case in range(100):
        dt_check = rng.choice([0.25, 0.5, 1.0])
        t = 0.0
        wps = [(0.0, rng.uniform(-50, 50), rng.uniform(-50, 50))]
        for _ in range(rng.randrange(1, 4)):
            t += rng.uniform(5.0, 25.0)
            wps.append((t, rng.uniform(-150, 350), rng.uniform(-150, 350)))
        t = min(t, 60.0 if t > 60.0 else t)
        path = PlannedPath([Waypoint(wt, wx, wy, 0.0) for wt, wx, wy in wps])
        tracks, oracle_tracks = [], []
        for i in range(rng.randrange(0, 4)):
            pts = [(0.0, rng.uniform(-150, 350), rng.uniform(-150, 350))]
            pts.append(
                (
                    wps[-1][0] + 1.0,
                    pts[0][1] + rng.uniform(-100, 100),
                    pts[0][2] + rng.uniform(-100, 100),
                )
            )
            tracks.append(track_from(pts, mmsi=i))
            oracle_tracks.append(pts)
        threshold = rng.uniform(20.0, 90.0)
        got = check_path_safety(path, tracks, threshold, dt_check)
        want = path_safety_oracle(wps, oracle_tracks, threshold, dt_check)
        got_keys = sorted((round(v.time, 9), int(v.obstacle_id)) for v in got)
        want_keys = sorted((round(tv, 9), idx) for tv, idx in want)
        assert got_keys == want_keys, f"scenario {case} diverged"
    done(7, "safety checker vs dense oracle")


def test_08_stage_gate_boundary_table():
    """Every stage bound passes inclusively and flips on one-unit perturbation."""
    # simulation/HIL: mileage floor and zero fails
    for stage in ("PATH_SIM", "HIL"):
        crit = BUILTIN_CRITERIA[stage]
        assert evaluate_stage(ledger_of(make_run(miles=5000.0)), crit).passed
        assert not evaluate_stage(ledger_of(make_run(miles=4999.0)), crit).passed
        assert not evaluate_stage(
            ledger_of(make_run(miles=5000.0, collision_violations=1)), crit
        ).passed

    crit = BUILTIN_CRITERIA["INITIAL_TRIALS"]
    assert evaluate_stage(ledger_of(make_run(miles=15000.0)), crit).passed
    assert not evaluate_stage(ledger_of(make_run(miles=14999.0)), crit).passed

    # small craft: all six bounds exactly, then each perturbed by one unit
    def small_craft(**kw):
        runs = []
        for i in range(100):
            args = dict(
                miles=150.0,
                ports=2 if i < 75 else 0,
                nav_error_steps=10,
                total_steps=10_000,
                downtime=1.0,
                duration=1000.0,
                failed=(i == 0),
            )
            if i == 0:
                args.update(kw)
            runs.append(make_run(**args))
        return ledger_of(*runs)

    crit = BUILTIN_CRITERIA["SMALL_CRAFT"]
    assert evaluate_stage(small_craft(), crit).passed
    assert not evaluate_stage(small_craft(miles=149.0), crit).passed
    assert not evaluate_stage(small_craft(ports=1), crit).passed
    assert not evaluate_stage(small_craft(collision_violations=1), crit).passed
    assert not evaluate_stage(small_craft(nav_error_steps=11), crit).passed
    assert not evaluate_stage(small_craft(downtime=2.0), crit).passed
    two_failures = ledger_of(
        *[
            make_run(miles=150.0, ports=2, total_steps=10_000, duration=1000.0, failed=(i < 2))
            for i in range(100)
        ]
    )
    assert not evaluate_stage(two_failures, crit).passed

    # medium ship: rates an order tighter, port operations floor
    def medium(nav_steps, downtime, failures, ports_scale=2):
        runs = [
            make_run(
                ports=ports_scale if i < 75 else 0,
                nav_error_steps=nav_steps if i == 0 else 0,
                total_steps=10_000,
                downtime=downtime if i == 0 else 0.0,
                duration=1000.0,
                failed=(i < failures),
            )
            for i in range(1000)
        ]
        return ledger_of(*runs)

    crit = BUILTIN_CRITERIA["MEDIUM_SHIP"]
    assert evaluate_stage(medium(1000, 100.0, 1), crit).passed
    assert not evaluate_stage(medium(1001, 100.0, 1), crit).passed
    assert not evaluate_stage(medium(1000, 101.0, 1), crit).passed
    assert not evaluate_stage(medium(1000, 100.0, 2), crit).passed

    # IMO: 50,000 nmi and the tightest rates
    def imo(nav_steps, downtime, failures, miles=25.0):
        runs = [
            make_run(
                miles=miles,
                nav_error_steps=nav_steps if i == 0 else 0,
                total_steps=10_000,
                downtime=downtime if i == 0 else 0.0,
                duration=1000.0,
                failed=(i < failures),
            )
            for i in range(2000)
        ]
        return ledger_of(*runs)

    crit = BUILTIN_CRITERIA["IMO"]
    assert evaluate_stage(imo(200, 20.0, 1), crit).passed
    assert not evaluate_stage(imo(201, 20.0, 1), crit).passed
    assert not evaluate_stage(imo(200, 21.0, 1), crit).passed
    assert not evaluate_stage(imo(200, 20.0, 2), crit).passed
    assert not evaluate_stage(imo(200, 20.0, 1, miles=24.9995), crit).passed
    done(8, "stage gate boundary table")


def test_09_version_reset_rule():
    """A run from a modified build resets the accumulated ledger."""
    ledger = CampaignLedger()
    for _ in range(40):
        ledger = record_run(ledger, make_run(miles=100.0, version="vA"))
    assert ledger.total_miles == pytest.approx(4000.0)
    ledger = record_run(ledger, make_run(miles=10.0, version="vB"))
    assert ledger.total_miles == pytest.approx(10.0)
    assert len(ledger.runs) == 1
    assert [e.software_version for e in ledger.epochs] == ["vA", "vB"]
    done(9, "version reset rule")


def test_10_campaign_determinism_golden(tmp_path):
    """The canned mini-campaign reproduces the pinned report byte for byte."""
    plan = load_campaign(DATA / "campaign" / "campaign.yaml")
    plan = dataclasses.replace(
        plan,
        ledger_path=tmp_path / "ledger.jsonl",
        report_path=tmp_path / "report.json",
        log_path=tmp_path / "campaign.log",
    )
    run_campaign(plan)
    got = (tmp_path / "report.json").read_bytes()
    golden = (DATA / "golden_report.json").read_bytes()
    assert got == golden
    done(10, "campaign determinism golden")


def test_11_ais_round_trip_and_reference_corpus():
    """1000 randomized supported messages round-trip; public corpus matches
    the pinned reference-decoder fields."""
    rng = random.Random(4242)
    for _ in range(1000):
        sentence, want = random_position_report(rng)
        msg = decode_sentence(sentence)
        assert msg.message_type == want["message_type"]
        assert msg.mmsi == want["mmsi"]
        assert msg.lat == pytest.approx(want["lat"], abs=1e-12)
        assert msg.lon == pytest.approx(want["lon"], abs=1e-12)
        assert msg.speed_over_ground == pytest.approx(want["speed_over_ground"], rel=REL)
        assert msg.course_over_ground == pytest.approx(want["course_over_ground"], rel=REL)

    moored = decode_sentence(SENTENCE_T1_MOORED)
    assert (moored.mmsi, moored.course_over_ground) == (477553000, 51.0)
    assert moored.lat == pytest.approx(47.582833, abs=1e-5)
    assert moored.lon == pytest.approx(-122.345833, abs=1e-5)

    underway = decode_sentence(SENTENCE_T1_UNDERWAY)
    assert underway.mmsi == 265884000
    assert underway.speed_over_ground == pytest.approx(18.2 * KNOTS_TO_MPS)

    classb = decode_sentence(SENTENCE_T18)
    assert classb.mmsi == 338087471
    assert classb.lat == pytest.approx(40.684540, abs=1e-5)

    static = decode_sentence(SENTENCE_T5_SINGLE)
    assert static.static_info.name == "WILSON LEITH"
    assert static.static_info.callsign == "9HII5"
    done(11, "AIS round trip and reference corpus")
