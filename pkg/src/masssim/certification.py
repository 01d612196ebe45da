"""Campaign ledger, stage gates, and reports.

Runs accumulate under one software version; recording a run from a
different version resets the ledger, because a modified controller must
re-earn every mile. Stage gates compare ledger totals against the staged
certification criteria with inclusive bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .failover import ControlNotification, ControlState
from .navigation import SafetyViolation
from .scenario import STAGES, ScenarioLoadError, ScenarioSpec, load_scenario
from .simulation import RunResult, Simulation

REPORT_SCHEMA = "masssim-report/1"
LEDGER_SCHEMA = "masssim-ledger/1"


class EmptyLedger(ValueError):
    pass


class SinkUnavailable(OSError):
    pass


@dataclass(frozen=True)
class StageCriteria:
    """Pass thresholds for one certification stage; all comparisons inclusive."""

    stage: str
    min_miles: float = 0.0
    min_port_operations: int = 0
    max_collisions: int = 0
    max_nav_error_rate: float = 1.0
    max_system_failure_rate: float = 1.0
    min_availability: float = 0.0

    def __post_init__(self) -> None:
        for name in ("max_nav_error_rate", "max_system_failure_rate", "min_availability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


# Stage gate table. Simulation/HIL stages demand zero failed cases over
# 5000 nmi; sea-trial stages add port operations, error/failure rates, and
# availability floors, tightening by an order of magnitude per stage.
BUILTIN_CRITERIA: dict[str, StageCriteria] = {
    "PATH_SIM": StageCriteria(stage="PATH_SIM", min_miles=5000.0),
    "HIL": StageCriteria(stage="HIL", min_miles=5000.0),
    "INITIAL_TRIALS": StageCriteria(stage="INITIAL_TRIALS", min_miles=15000.0),
    "SMALL_CRAFT": StageCriteria(
        stage="SMALL_CRAFT",
        min_miles=15000.0,
        min_port_operations=150,
        max_nav_error_rate=0.001,
        max_system_failure_rate=0.01,
        min_availability=0.999,
    ),
    "MEDIUM_SHIP": StageCriteria(
        stage="MEDIUM_SHIP",
        min_port_operations=150,
        max_nav_error_rate=0.0001,
        max_system_failure_rate=0.001,
        min_availability=0.9999,
    ),
    "IMO": StageCriteria(
        stage="IMO",
        min_miles=50000.0,
        max_nav_error_rate=0.00001,
        max_system_failure_rate=0.0005,
        min_availability=0.99999,
    ),
}

assert set(BUILTIN_CRITERIA) == set(STAGES)


@dataclass(frozen=True)
class LedgerEpoch:
    """One software version's tenure on the ledger."""

    software_version: str
    runs_recorded: int


@dataclass(frozen=True)
class CampaignLedger:
    software_version: str = ""
    runs: tuple[RunResult, ...] = ()
    epochs: tuple[LedgerEpoch, ...] = ()

    @property
    def total_miles(self) -> float:
        return sum(r.miles for r in self.runs)

    @property
    def total_port_operations(self) -> int:
        return sum(r.port_operations for r in self.runs)


def record_run(ledger: CampaignLedger, result: RunResult) -> CampaignLedger:
    """Append a run; a changed software version resets the ledger to this run."""
    if ledger.software_version and result.software_version != ledger.software_version:
        # a modification may affect any part of the program: start over
        return CampaignLedger(
            software_version=result.software_version,
            runs=(result,),
            epochs=ledger.epochs + (LedgerEpoch(result.software_version, 1),),
        )
    if not ledger.software_version:
        epochs = (LedgerEpoch(result.software_version, 1),)
    else:
        last = ledger.epochs[-1]
        epochs = ledger.epochs[:-1] + (
            LedgerEpoch(last.software_version, last.runs_recorded + 1),
        )
    return CampaignLedger(
        software_version=result.software_version,
        runs=ledger.runs + (result,),
        epochs=epochs,
    )


@dataclass(frozen=True)
class CampaignMetrics:
    nav_error_rate: float
    system_failure_rate: float
    availability: float
    collision_count: int
    miles: float
    port_operations: int
    run_count: int


def compute_metrics(ledger: CampaignLedger, collision_distance: float = 5.0) -> CampaignMetrics:
    """Ledger totals folded into the gate metrics.

    A nav-error step carries a cross-verification alert flag or a position
    error beyond the accuracy bound (counted during the run); a failed run
    contains any Level-1/Level-2 event; availability discounts time spent
    dead-reckoning or with detection out; collisions are violations inside
    the collision distance.
    """
    if not ledger.runs:
        raise EmptyLedger("no runs recorded")
    total_steps = sum(r.total_steps for r in ledger.runs)
    if total_steps <= 0:
        raise EmptyLedger("runs contain no steps")
    nav_error_rate = sum(r.nav_error_steps for r in ledger.runs) / total_steps
    system_failure_rate = sum(1 for r in ledger.runs if r.had_failure_event) / len(
        ledger.runs
    )
    total_duration = sum(r.duration for r in ledger.runs)
    downtime = sum(r.critical_downtime for r in ledger.runs)
    availability = 1.0 - downtime / total_duration if total_duration > 0 else 1.0
    collisions = sum(
        1
        for r in ledger.runs
        for v in r.violations
        if v.distance < collision_distance
    )
    return CampaignMetrics(
        nav_error_rate=nav_error_rate,
        system_failure_rate=system_failure_rate,
        availability=availability,
        collision_count=collisions,
        miles=ledger.total_miles,
        port_operations=ledger.total_port_operations,
        run_count=len(ledger.runs),
    )


@dataclass(frozen=True)
class GateDecision:
    stage: str
    passed: bool
    unmet: tuple[str, ...]
    metrics: CampaignMetrics


_EMPTY_METRICS = CampaignMetrics(
    nav_error_rate=0.0,
    system_failure_rate=0.0,
    availability=1.0,
    collision_count=0,
    miles=0.0,
    port_operations=0,
    run_count=0,
)


def evaluate_stage(ledger: CampaignLedger, criteria: StageCriteria) -> GateDecision:
    """Inclusive comparison of ledger totals against one stage's criteria."""
    metrics = _EMPTY_METRICS if not ledger.runs else compute_metrics(ledger)
    unmet = []
    if not metrics.miles >= criteria.min_miles:
        unmet.append("min_miles")
    if not metrics.port_operations >= criteria.min_port_operations:
        unmet.append("min_port_operations")
    if not metrics.collision_count <= criteria.max_collisions:
        unmet.append("max_collisions")
    if not metrics.nav_error_rate <= criteria.max_nav_error_rate:
        unmet.append("max_nav_error_rate")
    if not metrics.system_failure_rate <= criteria.max_system_failure_rate:
        unmet.append("max_system_failure_rate")
    if not metrics.availability >= criteria.min_availability:
        unmet.append("min_availability")
    return GateDecision(
        stage=criteria.stage,
        passed=not unmet,
        unmet=tuple(unmet),
        metrics=metrics,
    )


def run_scenario(spec: ScenarioSpec) -> RunResult:
    """One deterministic voyage; identical specs give bit-identical results."""
    return Simulation(spec).run()


@dataclass(frozen=True)
class CapacityResult:
    obstacle_count: int
    cycle_seconds: float  # measured wall time of one control cycle
    budget_seconds: float  # 1 / min_update_rate
    ok: bool


def capacity_check(
    budget: "TimingBudget",
    max_recorded_obstacles: int,
    safety_factor: float | None = None,
    repeats: int = 3,
) -> CapacityResult:
    """Assert one control cycle handles the port's safety-factored obstacle
    peak inside the update period.

    Measures the per-step hot path (detection sweep, command vetting,
    minimum-distance checks) against synthetic traffic at the required
    count; wall time only, never part of any recorded result.
    """
    import time

    from .ais import ObstacleTrack
    from .failover import vet_command
    from .geometry import VesselState, planar_distance
    from .kinematics import ActuatorCommand, HullParams, OwnShipState, min_update_rate, required_capacity
    from .sensors import SensorSuite, detect_obstacles

    count = required_capacity(
        max_recorded_obstacles,
        budget.safety_factor if safety_factor is None else safety_factor,
    )
    period = 1.0 / min_update_rate(budget).min_update_rate
    hull = HullParams.from_budget(budget)
    suite = SensorSuite()
    own = OwnShipState(speed=budget.v_own, heading=0.0, achieved_thrust=1.0)
    # synthetic ring of slow movers around the own ship, all within radar range
    tracks = []
    for i in range(count):
        angle = 2.0 * math.pi * i / max(count, 1)
        r = 300.0 + (i % 7) * 250.0
        x, y = r * math.cos(angle), r * math.sin(angle)
        tracks.append(
            ObstacleTrack(
                mmsi=100_000_000 + i,
                samples=[
                    VesselState(x, y, 1.0, 0.0, 0.0),
                    VesselState(x + 60.0, y, 1.0, 90.0, 60.0),
                ],
                track_id=str(i),
            )
        )
    command = ActuatorCommand(thrust=0.8)
    best = math.inf
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        detections = detect_obstacles(tracks, own, 1.0, suite)
        vet_command(
            command,
            own,
            detections,
            safe_distance=50.0,
            horizon=30.0,
            params=hull,
            dt=period,
        )
        for track in tracks:
            s = track.samples[0]
            planar_distance(own.x, own.y, s.x, s.y)
        best = min(best, time.perf_counter() - start)
    return CapacityResult(
        obstacle_count=count,
        cycle_seconds=best,
        budget_seconds=period,
        ok=best <= period,
    )


# --- ledger persistence -----------------------------------------------------


class LedgerWriter:
    """Append-only ledger file: one JSON record per run plus reset markers.

    The file keeps the whole history across version resets; loading replays
    it through record_run, which re-applies the reset rule.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._last_version: str | None = None
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record.get("kind") == "run":
                    self._last_version = record["software_version"]
        else:
            self._append(json.dumps({"kind": "schema", "schema": LEDGER_SCHEMA}))

    def _append(self, line: str) -> None:
        try:
            with self.path.open("a") as fh:
                fh.write(line + "\n")
        except OSError as exc:
            raise SinkUnavailable(f"cannot write ledger to {self.path}: {exc}") from exc

    def record(self, result: RunResult) -> None:
        if self._last_version is not None and result.software_version != self._last_version:
            self._append(
                json.dumps(
                    {
                        "kind": "reset",
                        "from_version": self._last_version,
                        "to_version": result.software_version,
                    }
                )
            )
        self._append(json.dumps({"kind": "run", **result.as_dict()}))
        self._last_version = result.software_version


def save_ledger(ledger: CampaignLedger, path: str | Path) -> None:
    """Snapshot the ledger's current epoch to a fresh record file."""
    path = Path(path)
    if path.exists():
        path.unlink()
    writer = LedgerWriter(path)
    for run in ledger.runs:
        writer.record(run)


def load_ledger(path: str | Path) -> CampaignLedger:
    path = Path(path)
    if not path.exists():
        raise ScenarioLoadError(f"ledger file not found: {path}")
    ledger = CampaignLedger()
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        kind = record.get("kind")
        if kind in ("schema", "reset"):
            continue
        if kind != "run":
            raise ValueError(f"{path}:{lineno}: unknown record kind {kind!r}")
        ledger = record_run(ledger, _run_from_dict(record))
    return ledger


def _run_from_dict(record: dict) -> RunResult:
    violations = tuple(
        SafetyViolation(
            time=v["time"],
            obstacle_id=v["obstacle_id"],
            distance=v["distance"],
            threshold=v["threshold"],
        )
        for v in record.get("violations", [])
    )
    events = tuple(
        ControlNotification(
            time=e["time"],
            old_state=ControlState(e["old_state"]),
            new_state=ControlState(e["new_state"]),
            cause=e["cause"],
        )
        for e in record.get("failover_events", [])
    )
    return RunResult(
        scenario_id=record["scenario_id"],
        software_version=record["software_version"],
        outcome=record["outcome"],
        miles=record["miles"],
        violations=violations,
        failover_events=events,
        nav_error_steps=record["nav_error_steps"],
        total_steps=record["total_steps"],
        critical_downtime=record["critical_downtime"],
        duration=record["duration"],
        port_operations=record["port_operations"],
        final_x=record["final_x"],
        final_y=record["final_y"],
    )


# --- reports -----------------------------------------------------------------


def emit_report(ledger: CampaignLedger, decisions: list[GateDecision]) -> tuple[str, str]:
    """(machine_report_json, human_summary); byte-stable for identical inputs."""
    metrics = _EMPTY_METRICS if not ledger.runs else compute_metrics(ledger)
    doc = {
        "schema": REPORT_SCHEMA,
        "software_version": ledger.software_version,
        "totals": {
            "runs": metrics.run_count,
            "miles": metrics.miles,
            "port_operations": metrics.port_operations,
            "collisions": metrics.collision_count,
            "nav_error_rate": metrics.nav_error_rate,
            "system_failure_rate": metrics.system_failure_rate,
            "availability": metrics.availability,
        },
        "gates": [
            {
                "stage": d.stage,
                "passed": d.passed,
                "unmet": list(d.unmet),
            }
            for d in decisions
        ],
        "version_history": [
            {"software_version": e.software_version, "runs_recorded": e.runs_recorded}
            for e in ledger.epochs
        ],
        "runs": [run.as_dict() for run in ledger.runs],
    }
    report = json.dumps(doc, indent=2)

    lines = [
        "CERTIFICATION CAMPAIGN SUMMARY",
        f"software version : {ledger.software_version or '(none)'}",
        f"runs             : {metrics.run_count}",
        f"miles            : {metrics.miles:.3f} nmi",
        f"port operations  : {metrics.port_operations}",
        f"collisions       : {metrics.collision_count}",
        f"nav error rate   : {metrics.nav_error_rate:.6f}",
        f"failure rate     : {metrics.system_failure_rate:.6f}",
        f"availability     : {metrics.availability:.6f}",
    ]
    if len(ledger.epochs) > 1:
        lines.append(f"version resets   : {len(ledger.epochs) - 1}")
    for d in decisions:
        verdict = "PASS" if d.passed else "FAIL (" + ", ".join(d.unmet) + ")"
        lines.append(f"gate {d.stage:<15}: {verdict}")
    return report, "\n".join(lines)


def write_report(
    ledger: CampaignLedger, decisions: list[GateDecision], path: str | Path
) -> str:
    report, summary = emit_report(ledger, decisions)
    try:
        Path(path).write_text(report + "\n")
    except OSError as exc:
        raise SinkUnavailable(f"cannot write report to {path}: {exc}") from exc
    return summary


# --- campaigns ----------------------------------------------------------------


@dataclass(frozen=True)
class CampaignPlan:
    """A list of scenario files run in order, plus where results land."""

    scenarios: tuple[Path, ...]
    stage: str
    ledger_path: Path | None = None
    report_path: Path | None = None
    log_path: Path | None = None


def load_campaign(path: str | Path):
    import yaml

    path = Path(path)
    if not path.exists():
        raise ScenarioLoadError(f"campaign file not found: {path}")
    data = yaml.safe_load(path.read_text())
    if not isinstance(data, dict) or "scenarios" not in data:
        raise ScenarioLoadError(f"campaign file {path} needs a scenarios list")
    stage = data.get("stage", "PATH_SIM")
    if stage not in BUILTIN_CRITERIA:
        raise ScenarioLoadError(f"unknown stage {stage!r}")
    base = path.parent
    return CampaignPlan(
        scenarios=tuple(base / s for s in data["scenarios"]),
        stage=stage,
        ledger_path=(base / data["ledger"]) if data.get("ledger") else None,
        report_path=(base / data["report"]) if data.get("report") else None,
        log_path=(base / data["log"]) if data.get("log") else None,
    )


def run_campaign(plan: CampaignPlan) -> tuple[CampaignLedger, GateDecision]:
    """Run every scenario in order, accumulate the ledger, gate it, and
    write the configured artifacts."""
    ledger = CampaignLedger()
    log_lines: list[str] = []
    writer = None
    if plan.ledger_path:
        if plan.ledger_path.exists():
            plan.ledger_path.unlink()
        writer = LedgerWriter(plan.ledger_path)
    for scenario_path in plan.scenarios:
        spec = load_scenario(scenario_path)
        sim = Simulation(spec)
        result = sim.run()
        before = ledger.software_version
        ledger = record_run(ledger, result)
        if writer is not None:
            writer.record(result)
        if before and before != result.software_version:
            log_lines.append(
                json.dumps(
                    {
                        "kind": "ledger_reset",
                        "from_version": before,
                        "to_version": result.software_version,
                    }
                )
            )
        for alert in sim.alerts:
            log_lines.append(json.dumps({"scenario": spec.id, **alert}))
        for note in sim.notifications:
            log_lines.append(json.dumps({"scenario": spec.id, **note.as_record()}))
    decision = evaluate_stage(ledger, BUILTIN_CRITERIA[plan.stage])
    if plan.log_path:
        try:
            plan.log_path.write_text("\n".join(log_lines) + ("\n" if log_lines else ""))
        except OSError as exc:
            raise SinkUnavailable(f"cannot write campaign log: {exc}") from exc
    if plan.report_path:
        write_report(ledger, [decision], plan.report_path)
    return ledger, decision
