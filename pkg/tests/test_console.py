"""Console endpoints: status, override round-trip, and the event stream."""

from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from masssim.console import SimulationHost, create_app
from masssim.scenario import FailureSchedule
from masssim.simulation import Simulation

from .conftest import make_spec


@pytest.fixture
def host():
    spec = make_spec(goal=(400.0, 0.0), timeout=120.0)
    return SimulationHost(Simulation(spec, tracks=[]), realtime_factor=0.0)


@pytest.fixture
def client(host):
    return TestClient(create_app(host))


class TestStatus:
    def test_no_simulation_yet(self, client):
        assert client.get("/status").status_code == 503

    def test_snapshot_after_step(self, host, client):
        host.step_once()
        body = client.get("/status").json()
        assert body["seq"] == 1
        assert body["equipment"]["state"] == "NORMAL"
        assert body["environment"]["own"]["x"] == pytest.approx(0.0)
        assert body["path"]["total_length_nmi"] > 0

    def test_snapshot_stable_between_steps(self, host, client):
        host.step_once()
        a = client.get("/status").json()
        b = client.get("/status").json()
        assert a == b

    def test_token_required_when_configured(self, host):
        client = TestClient(create_app(host, token="sesame"))
        host.step_once()
        assert client.get("/status").status_code == 401
        ok = client.get("/status", headers={"Authorization": "Bearer sesame"})
        assert ok.status_code == 200


class TestOverride:
    def test_engage_applies_at_next_step(self, host, client):
        host.step_once()
        ack = client.post("/override", json={"kind": "engage"}).json()
        assert ack["accepted"] is True
        assert ack["effect_time"] == pytest.approx(ack["sim_time"] + host.sim.dt)
        host.step_once()
        assert client.get("/status").json()["equipment"]["state"] == "MANUAL_OVERRIDE"

    def test_helm_round_trip_changes_heading(self, host, client):
        host.step_once()
        client.post("/override", json={"kind": "engage"})
        host.step_once()
        before = client.get("/status").json()["environment"]["own"]["heading"]
        res = client.post(
            "/override", json={"kind": "helm", "thrust": 0.8, "rudder": 10.0}
        )
        assert res.status_code == 200
        for _ in range(100):
            host.step_once()
        after = client.get("/status").json()["environment"]["own"]["heading"]
        assert after != before

    def test_release_returns_to_normal(self, host, client):
        host.step_once()
        client.post("/override", json={"kind": "engage"})
        host.step_once()
        client.post("/override", json={"kind": "release"})
        host.step_once()
        assert client.get("/status").json()["equipment"]["state"] == "NORMAL"

    def test_helm_without_override_rejected(self, host, client):
        host.step_once()
        res = client.post("/override", json={"kind": "helm", "rudder": 5.0})
        assert res.status_code == 409

    def test_malformed_kind_rejected(self, host, client):
        host.step_once()
        assert client.post("/override", json={"kind": "warp"}).status_code == 422

    def test_engage_never_refused(self, host, client):
        # even from backup control, engage is accepted
        host.sim.spec = make_spec(
            failures=FailureSchedule(heartbeat_stall_windows=((0.0, 100.0),))
        )
        for _ in range(10):
            host.step_once()
        res = client.post("/override", json={"kind": "engage"})
        assert res.status_code == 200


class TestStream:
    def test_snapshots_monotone_and_meaningful(self, host, client):
        host.step_once()
        with client.websocket_connect("/stream") as ws:
            first = ws.receive_json()
            assert first["type"] == "snapshot"  # current state, not history
            seqs = [first["seq"]]
            for _ in range(3):
                host.step_once()
                msg = ws.receive_json()
                while msg["type"] != "snapshot":
                    msg = ws.receive_json()
                seqs.append(msg["seq"])
            assert seqs == sorted(seqs)
            assert len(set(seqs)) == len(seqs)

    def test_failover_event_delivered_once(self):
        spec = make_spec(
            failures=FailureSchedule(heartbeat_stall_windows=((0.3, 100.0),)),
            timeout=60.0,
        )
        host = SimulationHost(Simulation(spec, tracks=[]), realtime_factor=0.0)
        client = TestClient(create_app(host))
        host.step_once()
        with client.websocket_connect("/stream") as ws:
            ws.receive_json()  # initial snapshot
            for _ in range(12):
                host.step_once()
            events = []
            # drain until we have seen the takeover snapshot
            state = "NORMAL"
            while state != "BACKUP_CONTROL_L2":
                msg = ws.receive_json()
                if msg["type"] == "failover":
                    events.append(msg)
                elif msg["type"] == "snapshot":
                    state = msg["payload"]["equipment"]["state"]
            takeovers = [
                e
                for e in events
                if e["payload"]["new_state"] == "BACKUP_CONTROL_L2"
            ]
            assert len(takeovers) == 1

    def test_stream_token_enforced(self, host):
        client = TestClient(create_app(host, token="sesame"))
        host.step_once()
        with pytest.raises(Exception):
            with client.websocket_connect("/stream") as ws:
                ws.receive_json()
        with client.websocket_connect("/stream?token=sesame") as ws:
            assert ws.receive_json()["type"] == "snapshot"


class TestThreadedLoop:
    def test_background_thread_runs_to_completion(self):
        spec = make_spec(goal=(80.0, 0.0), timeout=60.0)
        host = SimulationHost(Simulation(spec, tracks=[]), realtime_factor=0.0)
        host.start()
        deadline = time.monotonic() + 30.0
        while not host.sim.done and time.monotonic() < deadline:
            time.sleep(0.05)
        host.stop()
        assert host.sim.done
        assert host.sim.outcome == "ARRIVED"
