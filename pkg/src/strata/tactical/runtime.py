"""Per-robot tactical runtime: the bus poller and command lifecycle.

Each simulation tick the runtime writes fresh percepts to the
blackboard, expires or installs commands from the downlink, ticks the
tree, and turns the command subtree's outcome into uplink reports. It
never waits on the strategic layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from strata.bus.channel import ChannelPair
from strata.bus.messages import Command, Report, ReportKind
from strata.sim.types import Detection
from strata.tactical.blackboard import BtBlackboard
from strata.tactical.engine import BtEngine, TickResult, UnresolvedLeaf
from strata.tactical.leaves import CRUISE_ALTITUDE, vertical_request
from strata.tactical.nodes import BtStatus, Condition, walk
from strata.tactical.types import ActuatorRequest

MAX_COMMANDS_PER_TICK = 4
PROGRESS_REPORT_EVERY = 10

VERB_PARAM_SCHEMA: dict[str, list[tuple[str, type, bool]]] = {
    # verb -> [(param, type, required)]
    "MOVE-TO": [("target", tuple, True)],
    "SEARCH-AREA": [("room", str, True)],
    "PICK-UP": [("position", tuple, True), ("object", str, False)],
    "SCAN": [],
    "HOVER": [("duration", int, False)],
    "RETURN-TO-DOCK": [],
    "STOP": [],
}


@dataclass
class InstallResult:
    accepted: bool
    reason: str | None = None
    preempted_command_id: str | None = None


def _coerce_param(value: Any) -> Any:
    if isinstance(value, list) and all(isinstance(v, (int, float)) for v in value):
        return tuple(float(v) for v in value)
    return value


def install_command(bb: BtBlackboard, command: Command) -> InstallResult:
    """Validate and stage a command on the blackboard. A previously
    running command is preempted (its id is returned so the caller can
    queue the terminal Preempted report)."""
    verbs = bb.get_list("internal/verbs", [])
    if command.verb not in verbs:
        return InstallResult(False, reason="UnsupportedVerb")
    params = {k: _coerce_param(v) for k, v in command.params.items()}
    for name, typ, required in VERB_PARAM_SCHEMA.get(command.verb, []):
        if name not in params:
            if required:
                return InstallResult(False, reason="MalformedParams")
            continue
        value = params[name]
        if typ is tuple and (not isinstance(value, tuple) or len(value) < 2):
            return InstallResult(False, reason="MalformedParams")
        if typ is str and not isinstance(value, str):
            return InstallResult(False, reason="MalformedParams")
        if typ is int and not isinstance(value, int):
            return InstallResult(False, reason="MalformedParams")

    preempted = bb.get("command/id") if bb.has("command/verb") else None
    clear_command(bb)
    bb.set("command/id", command.command_id)
    bb.set("command/verb", command.verb)
    bb.set("command/issued_tick", command.issued_tick)
    if command.deadline_ticks is not None:
        bb.set("command/deadline_ticks", command.deadline_ticks)
    for key, value in params.items():
        bb.set(f"command/param/{key}", value)
    bb.set("command/progress", 0.0)
    return InstallResult(True, preempted_command_id=preempted)


def clear_command(bb: BtBlackboard) -> None:
    bb.clear_prefix("command/")
    bb.clear_prefix("internal/cmd/")


@dataclass
class TickInput:
    tick: int
    pose: tuple[float, float, float]
    altitude: float
    battery: float
    holding: str | None
    detections: list[Detection]


@dataclass
class TacticalRuntime:
    robot_id: str
    engine: BtEngine
    pair: ChannelPair
    supported_verbs: list[str]
    report_sink: Callable[[Report], None] | None = None
    bb: BtBlackboard = field(init=False)
    ticks_executed: int = field(default=0, init=False)
    halted: bool = field(default=False, init=False)
    last_result: TickResult | None = field(default=None, init=False)

    def __post_init__(self) -> None:
        self.bb = BtBlackboard(self.robot_id)
        self.bb.set("internal/verbs", list(self.supported_verbs))
        self._report_seq = 0
        self._active_command: Command | None = None
        self._last_progress_sent = -1.0
        self._safety_condition_ids = [
            node.node_id
            for node in walk(self.engine.root)
            if isinstance(node, Condition) and node.predicate_id.startswith("safety/")
        ]

    # -- reports ------------------------------------------------------------

    def _send(self, report_kind: ReportKind, tick: int, command_id: str | None = None, **data: Any) -> None:
        self._report_seq += 1
        report = Report(
            report_id=f"rep-{self.robot_id}-{self._report_seq}",
            kind=report_kind,
            tick=tick,
            command_id=command_id,
            data=data,
        )
        self.pair.send_report(report)
        if self.report_sink is not None:
            self.report_sink(report)

    # -- tick ---------------------------------------------------------------

    def on_tick(self, tick_input: TickInput) -> list[ActuatorRequest]:
        """One tactical tick; returns the actuator requests for the world."""
        if self.halted:
            return []
        self.ticks_executed += 1
        bb = self.bb
        tick = tick_input.tick
        bb.set("percept/pose", tick_input.pose)
        bb.set("percept/altitude", tick_input.altitude)
        bb.set("percept/battery", tick_input.battery)
        bb.set("percept/holding", tick_input.holding or "")

        self._expire_command(tick)
        self._poll_and_install(tick)

        try:
            result = self.engine.tick(bb, tick_input.detections)
        except UnresolvedLeaf as exc:
            self.halted = True
            self._send(ReportKind.SAFETY_EVENT, tick, kind="robot_halted", detail=str(exc))
            if self._active_command is not None:
                self._send(
                    ReportKind.FAILURE,
                    tick,
                    command_id=self._active_command.command_id,
                    reason="robot-halted",
                )
                clear_command(bb)
                self._active_command = None
            return []
        self.last_result = result

        self._emit_safety_events(result, tick)
        self._finish_or_progress(result, tick)

        requests = list(result.requests)
        if self.engine.ctx.kind == "Drone" and all(r.channel != "vertical" for r in requests):
            # inner-loop altitude stabilization below the tree
            error = CRUISE_ALTITUDE - tick_input.altitude
            if abs(error) > 0.02:
                req = vertical_request(self.engine.ctx, 1.2 * error)
                requests.append(
                    ActuatorRequest(self.robot_id, "vertical", req.setpoint, "autopilot")
                )

        if tick_input.detections:
            self._send(
                ReportKind.PERCEPT_BATCH,
                tick,
                detections=[d.to_payload() for d in tick_input.detections],
                pose=list(tick_input.pose),
            )
        return requests

    # -- internals ------------------------------------------------------------

    def _expire_command(self, tick: int) -> None:
        if self._active_command is None or not self.bb.has("command/deadline_ticks"):
            return
        deadline = self.bb.get_int("command/deadline_ticks")
        issued = self.bb.get_int("command/issued_tick", 0)
        if tick - issued > deadline:
            self._send(
                ReportKind.EXPIRED, tick, command_id=self._active_command.command_id
            )
            clear_command(self.bb)
            self._active_command = None

    def _poll_and_install(self, tick: int) -> None:
        for command in self.pair.poll_commands(MAX_COMMANDS_PER_TICK):
            result = install_command(self.bb, command)
            if not result.accepted:
                self._send(
                    ReportKind.FAILURE,
                    tick,
                    command_id=command.command_id,
                    reason=f"rejected:{result.reason}",
                )
                continue
            if result.preempted_command_id is not None:
                self._send(
                    ReportKind.PREEMPTED, tick, command_id=result.preempted_command_id
                )
            self._active_command = command
            self._last_progress_sent = -1.0
            self._send(ReportKind.ACK, tick, command_id=command.command_id)

    def _emit_safety_events(self, result: TickResult, tick: int) -> None:
        engaged = sorted(
            nid
            for nid in self._safety_condition_ids
            if result.node_status.get(nid) is BtStatus.SUCCESS
        )
        previous = self.bb.get_list("internal/safety_engaged", [])
        for nid in engaged:
            if nid not in previous:
                self._send(ReportKind.SAFETY_EVENT, tick, kind=nid)
        self.bb.set("internal/safety_engaged", engaged)

    def _finish_or_progress(self, result: TickResult, tick: int) -> None:
        if self._active_command is None:
            return
        cmd = self._active_command
        status = result.node_status.get("cmd_guard")
        if status is BtStatus.SUCCESS:
            self._send(ReportKind.SUCCESS, tick, command_id=cmd.command_id)
            clear_command(self.bb)
            self._active_command = None
            return
        if status is BtStatus.FAILURE:
            reason = self.bb.get_str("command/fail_reason", "execution-failed")
            self._send(ReportKind.FAILURE, tick, command_id=cmd.command_id, reason=reason)
            clear_command(self.bb)
            self._active_command = None
            return
        progress = self.bb.get_float("command/progress", 0.0)
        if (
            self.ticks_executed % PROGRESS_REPORT_EVERY == 0
            and progress > self._last_progress_sent + 1e-9
        ):
            self._last_progress_sent = progress
            self._send(
                ReportKind.PROGRESS,
                tick,
                command_id=cmd.command_id,
                fraction=min(1.0, max(0.0, progress)),
            )

    def flush_active_command(self, tick: int, reason: str = "run-terminated") -> None:
        """Emit the terminal report for a command still running at shutdown
        so every command ends with exactly one terminal report."""
        if self._active_command is None:
            return
        self._send(
            ReportKind.PREEMPTED,
            tick,
            command_id=self._active_command.command_id,
            reason=reason,
        )
        clear_command(self.bb)
        self._active_command = None


def obstacle_distance(detections: list[Detection]) -> float:
    """Smallest proximity range in a batch; infinity when clear."""
    ranges = [
        d.relative_position[0] for d in detections if d.class_label == "obstacle"
    ]
    return min(ranges) if ranges else math.inf
