"""Serve mode: the tick loop behind a WebSocket state stream.

Wire protocol (one JSON object per WebSocket text message):
  outbound kinds: snapshot, delta, trace_event, ack, error
  inbound kinds:  utterance, pause, resume, step, set_speed
A session gets a full snapshot on connect, then per-tick deltas (every
Nth tick with ``?decimate=N``, default 1) and every trace event as it
occurs. Control messages apply between ticks; pausing never splits a
tick. With no client input, a served run's trace equals the headless
trace for the same config and seed.
"""
from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from strata.gateway.config import ScenarioConfig
from strata.gateway.runner import Runner, RunSummary


class ControlState:
    """Cross-thread mailbox between sessions and the tick loop."""

    def __init__(self, speed: float = 1.0) -> None:
        self.paused = False
        self.speed = speed
        self.step_budget = 0
        self.commands: "queue.Queue[dict[str, Any]]" = queue.Queue()
        # held around tick_once and snapshot reads: clients never see mid-tick state
        self.tick_lock = threading.Lock()

    def submit(self, message: dict[str, Any]) -> None:
        self.commands.put(message)

    def drain(self) -> list[dict[str, Any]]:
        out = []
        while True:
            try:
                out.append(self.commands.get_nowait())
            except queue.Empty:
                return out


class Broadcaster:
    """Fans tick deltas and trace events out to connected sessions."""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.sessions: list[tuple["queue.Queue[str]", int]] = []

    def attach(self, decimate: int) -> "queue.Queue[str]":
        q: "queue.Queue[str]" = queue.Queue(maxsize=10_000)
        with self.lock:
            self.sessions.append((q, max(1, decimate)))
        return q

    def detach(self, q: "queue.Queue[str]") -> None:
        with self.lock:
            self.sessions = [(s, d) for s, d in self.sessions if s is not q]

    def publish(self, message: dict[str, Any], tick: int | None = None) -> None:
        payload = json.dumps(message, sort_keys=True, separators=(",", ":"))
        with self.lock:
            sessions = list(self.sessions)
        for q, decimate in sessions:
            if tick is not None and message.get("kind") == "delta" and tick % decimate != 0:
                continue
            try:
                q.put_nowait(payload)
            except queue.Full:  # slow consumer: drop stream data, never block the loop
                pass


class ServeLoop:
    """Runs the simulation in its own thread under control-state pacing."""

    def __init__(self, runner: Runner, control: ControlState, hub: Broadcaster) -> None:
        self.runner = runner
        self.control = control
        self.hub = hub
        self.summary: RunSummary | None = None
        self.finished = threading.Event()
        runner.trace.listeners.append(
            lambda event: hub.publish({"kind": "trace_event", "event": event}, None)
        )
        runner.on_tick_done = self._on_tick

    def _on_tick(self, tick: int) -> None:
        self.hub.publish({"kind": "delta", **self.runner.delta()}, tick)

    def _apply_controls(self) -> None:
        for message in self.control.drain():
            kind = message.get("kind")
            if kind == "pause":
                self.control.paused = True
            elif kind == "resume":
                self.control.paused = False
            elif kind == "step":
                self.control.step_budget += max(1, int(message.get("n", 1)))
            elif kind == "set_speed":
                self.control.speed = max(0.05, float(message.get("speed", 1.0)))
            elif kind == "utterance":
                try:
                    msg_id = self.runner.inject_human_utterance(
                        message.get("text", ""), message.get("sender", "")
                    )
                    self.hub.publish({"kind": "ack", "op": "utterance", "msg_id": msg_id})
                except ValueError as exc:
                    self.hub.publish({"kind": "error", "op": "utterance", "reason": str(exc)})

    def run(self) -> None:
        period = 1.0 / max(0.1, self.runner.config.tick_rate_hz)
        try:
            while not self.runner.done():
                self._apply_controls()
                if self.control.paused and self.control.step_budget == 0:
                    time.sleep(0.02)
                    continue
                started = time.monotonic()
                with self.control.tick_lock:
                    self.runner.tick_once()
                if self.control.step_budget > 0:
                    self.control.step_budget -= 1
                    continue  # stepping is unpaced
                elapsed = time.monotonic() - started
                delay = period / self.control.speed - elapsed
                if delay > 0:
                    time.sleep(delay)
        finally:
            self.summary = self.runner.finalize()
            self.hub.publish({"kind": "trace_event", "event": {
                "kind": "run_complete", "tick": self.runner.world.tick,
                "source": "gateway", "payload": self.summary.to_payload(),
            }})
            self.finished.set()


def create_app(runner: Runner, control: ControlState, hub: Broadcaster) -> FastAPI:
    app = FastAPI(title="strata gateway")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        decimate = int(websocket.query_params.get("decimate", "1"))
        session_queue = hub.attach(decimate)
        with control.tick_lock:
            snapshot = {"kind": "snapshot", **runner.snapshot()}
        await websocket.send_text(json.dumps(snapshot, sort_keys=True, separators=(",", ":")))

        async def pump_outbound() -> None:
            while True:
                try:
                    payload = session_queue.get_nowait()
                except queue.Empty:
                    await asyncio.sleep(0.01)
                    continue
                await websocket.send_text(payload)

        pump = asyncio.create_task(pump_outbound())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_text(json.dumps(
                        {"kind": "error", "reason": "malformed JSON"}, sort_keys=True
                    ))
                    continue
                if message.get("kind") in ("pause", "resume", "step", "set_speed", "utterance"):
                    control.submit(message)
                    if message["kind"] != "utterance":  # utterance acks carry msg ids
                        hub.publish({"kind": "ack", "op": message["kind"]})
                else:
                    await websocket.send_text(json.dumps(
                        {"kind": "error", "reason": f"unknown kind {message.get('kind')!r}"},
                        sort_keys=True,
                    ))
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()
            hub.detach(session_queue)

    @app.get("/healthz")
    def healthz() -> dict[str, Any]:
        return {"tick": runner.world.tick, "paused": control.paused}

    return app


def serve(
    config: ScenarioConfig,
    trace_path: str,
    port: int = 8750,
    speed: float = 1.0,
    host: str = "127.0.0.1",
) -> RunSummary:
    """Run the scenario behind a live WebSocket endpoint; blocks until the
    simulation finishes, then keeps serving the final state until Ctrl-C."""
    import uvicorn

    runner = Runner(config, trace_path)
    control = ControlState(speed=speed)
    hub = Broadcaster()
    loop = ServeLoop(runner, control, hub)
    app = create_app(runner, control, hub)
    sim_thread = threading.Thread(target=loop.run, name="strata-sim", daemon=True)
    sim_thread.start()
    server = uvicorn.Server(uvicorn.Config(app, host=host, port=port, log_level="warning"))
    try:
        server.run()
    except KeyboardInterrupt:  # pragma: no cover
        pass
    loop.finished.wait(timeout=5)
    return loop.summary or runner.finalize()
