"""Monitoring and manual-override API for a live simulation run.

The simulation loop is the single writer. The API layer holds immutable
snapshot dicts handed over a lock; subscribers get the latest snapshot
(coalescing under backpressure) while failover transitions and alerts ride
an uncoalesced event channel. Override commands flow back through a
bounded queue drained once per step, so engagement takes effect at the
next step boundary and is never refused.
"""

from __future__ import annotations

import asyncio
import threading
import time as wallclock
from dataclasses import dataclass, field

from fastapi import (
    Depends,
    FastAPI,
    Header,
    HTTPException,
    Query,
    WebSocket,
    WebSocketDisconnect,
)
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .failover import ControlState, EventKind, FailoverEvent
from .kinematics import ActuatorCommand
from .simulation import Simulation


class NoActiveSimulation(RuntimeError):
    pass


class HelmWithoutOverride(RuntimeError):
    pass


@dataclass
class _Subscriber:
    latest: tuple[int, dict] | None = None
    events: list[tuple[int, str, dict]] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def put_snapshot(self, seq: int, snapshot: dict) -> None:
        with self.lock:
            self.latest = (seq, snapshot)  # coalesce: only the newest survives

    def put_event(self, seq: int, kind: str, event: dict) -> None:
        with self.lock:
            self.events.append((seq, kind, event))

    def drain(self) -> list[dict]:
        """Events then the newest snapshot, each wrapped with its sequence number."""
        with self.lock:
            out = [
                {"type": kind, "seq": seq, "payload": ev}
                for seq, kind, ev in self.events
            ]
            self.events.clear()
            if self.latest is not None:
                seq, snap = self.latest
                out.append({"type": "snapshot", "seq": seq, "payload": snap})
                self.latest = None
        return out


class SimulationHost:
    """Runs a Simulation on its own thread and publishes snapshots."""

    def __init__(self, sim: Simulation, realtime_factor: float = 1.0):
        self.sim = sim
        self.realtime_factor = realtime_factor
        self._lock = threading.Lock()
        self._seq = 0
        self._latest: tuple[int, dict] | None = None
        self._subscribers: list[_Subscriber] = []
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._notified = 0
        self._alerted = 0

    # -- publishing ---------------------------------------------------------

    def _publish_step(self) -> None:
        snapshot = self.sim.snapshot().as_dict()
        with self._lock:
            self._seq += 1
            seq = self._seq
            self._latest = (seq, snapshot)
            events: list[tuple[int, str, dict]] = []
            while self._notified < len(self.sim.notifications):
                note = self.sim.notifications[self._notified]
                self._notified += 1
                self._seq += 1
                events.append((self._seq, "failover", note.as_record()))
            while self._alerted < len(self.sim.alerts):
                alert = self.sim.alerts[self._alerted]
                self._alerted += 1
                self._seq += 1
                events.append((self._seq, "alert", alert))
            for sub in self._subscribers:
                sub.put_snapshot(seq, snapshot)
                for eseq, kind, ev in events:
                    sub.put_event(eseq, kind, ev)

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber()
        with self._lock:
            if self._latest is not None:
                sub.put_snapshot(*self._latest)  # current state, not history
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    # -- control ------------------------------------------------------------

    def status_snapshot(self) -> dict:
        with self._lock:
            if self._latest is None:
                raise NoActiveSimulation("no step has completed yet")
            seq, snapshot = self._latest
        return {"seq": seq, **snapshot}

    def submit_override(self, kind: str, operator_id: str, helm: dict | None) -> dict:
        sim = self.sim
        now = sim.own.time
        effect = now + sim.dt
        if kind == "engage":
            sim.submit_override(
                FailoverEvent(kind=EventKind.OVERRIDE_ENGAGED, time=now)
            )
        elif kind == "release":
            sim.submit_override(
                FailoverEvent(kind=EventKind.OVERRIDE_RELEASED, time=now)
            )
        elif kind == "helm":
            engaged = sim.status.state is ControlState.MANUAL_OVERRIDE
            pending = any(
                e.kind is EventKind.OVERRIDE_ENGAGED for e in sim.override_queue
            )
            if not engaged and not pending:
                raise HelmWithoutOverride("helm commands require an engaged override")
            helm = helm or {}
            sim.set_helm(
                ActuatorCommand(
                    thrust=float(helm.get("thrust", 0.0)),
                    rudder=float(helm.get("rudder", 0.0)),
                    emergency_stop=bool(helm.get("emergency_stop", False)),
                )
            )
        else:
            raise ValueError(f"unknown override kind {kind!r}")
        return {
            "accepted": True,
            "kind": kind,
            "operator_id": operator_id,
            "sim_time": now,
            "effect_time": effect,
        }

    # -- loop ---------------------------------------------------------------

    def step_once(self) -> None:
        if not self.sim.done:
            self.sim.step()
        self._publish_step()

    def _loop(self) -> None:
        period = self.sim.dt / self.realtime_factor if self.realtime_factor > 0 else 0.0
        next_due = wallclock.monotonic()
        while not self._stop.is_set() and not self.sim.done:
            self.step_once()
            if period > 0.0:
                next_due += period
                delay = next_due - wallclock.monotonic()
                if delay > 0:
                    self._stop.wait(delay)
                else:
                    next_due = wallclock.monotonic()
        if self.sim.done:
            self._publish_step()

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._loop, daemon=True, name="sim-loop")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


class OverrideRequest(BaseModel):
    kind: str  # engage | release | helm
    operator_id: str = "operator"
    thrust: float | None = None
    rudder: float | None = None
    emergency_stop: bool = False


def create_app(
    host: SimulationHost,
    token: str | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    """HTTP + WebSocket surface: GET /status, POST /override, WS /stream."""
    app = FastAPI(title="masssim console", docs_url=None, redoc_url=None)
    app.state.host = host

    def auth(authorization: str | None = Header(default=None)) -> None:
        if token is not None and authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="bad or missing bearer token")

    @app.get("/status")
    def get_status(_: None = Depends(auth)) -> JSONResponse:
        try:
            return JSONResponse(host.status_snapshot())
        except NoActiveSimulation as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc

    @app.post("/override")
    def post_override(req: OverrideRequest, _: None = Depends(auth)) -> JSONResponse:
        helm = None
        if req.kind == "helm":
            helm = {
                "thrust": req.thrust or 0.0,
                "rudder": req.rudder or 0.0,
                "emergency_stop": req.emergency_stop,
            }
        try:
            ack = host.submit_override(req.kind, req.operator_id, helm)
        except HelmWithoutOverride as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return JSONResponse(ack)

    @app.websocket("/stream")
    async def stream(ws: WebSocket, token_q: str | None = Query(default=None, alias="token")):
        if token is not None:
            header = ws.headers.get("authorization")
            if header != f"Bearer {token}" and token_q != token:
                await ws.close(code=4401)
                return
        await ws.accept()
        sub = host.subscribe()
        try:
            while True:
                for message in sub.drain():
                    await ws.send_json(message)
                await asyncio.sleep(min(host.sim.dt, 0.05))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            host.unsubscribe(sub)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def serve(
    sim: Simulation,
    listen: str = "127.0.0.1:8000",
    token: str | None = None,
    realtime_factor: float = 1.0,
    static_dir: str | None = None,
) -> None:
    """Run the console server until interrupted (blocking)."""
    import uvicorn

    host_addr, _, port = listen.partition(":")
    sim_host = SimulationHost(sim, realtime_factor=realtime_factor)
    app = create_app(sim_host, token=token, static_dir=static_dir)
    sim_host.start()
    try:
        uvicorn.run(app, host=host_addr or "127.0.0.1", port=int(port or 8000), log_level="warning")
    finally:
        sim_host.stop()
