"""The run loop: world stepping, tactical ticks, strategic cycles, chat.

Fixed per-tick ordering (documented contract):
  1. world step using the actuator requests computed last tick,
  2. delivery of scheduled/queued human chat at the new tick,
  3. one tactical tick per robot in robot-id order,
  4. every ``strategic_period_ticks``, one strategic cycle per robot in
     robot-id order (never inside the world/tactical phase).

The loop is the single writer of world and trace; serve-mode sessions
only read snapshots and enqueue chat/control messages consumed at tick
boundaries, so two runs with the same config and seed are identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from strata.bus.channel import ChannelPair
from strata.bus.messages import Report
from strata.gateway.config import ScenarioConfig, config_payload
from strata.gateway.trace import TraceWriter
from strata.kb.loader import load_kb
from strata.sim.scenario import load_scenario
from strata.sim.world import step as world_step
from strata.strategic.agent import StrategicAgent
from strata.strategic.plans import PlanContext, PlanLibrary, load_templates
from strata.strategic.types import GoalStatus
from strata.tactical.builder import RobotKindProfile, build_robot_tree, default_safety_spec
from strata.tactical.engine import BtEngine
from strata.tactical.leaves import (
    DRONE_SWEEP_SPACING,
    UGV_SWEEP_SPACING,
    LeafContext,
    default_registry,
)
from strata.tactical.runtime import TacticalRuntime, TickInput
from strata.tactical.treefile import load_tree
from strata.tactical.types import ActuatorRequest


@dataclass
class RunSummary:
    ticks: int
    goals_achieved: int
    collisions: int
    dropped_uplink: dict[str, int]
    trace_path: str

    def to_payload(self) -> dict[str, Any]:
        return {
            "ticks": self.ticks,
            "goals_achieved": self.goals_achieved,
            "collisions": self.collisions,
            "dropped_uplink": dict(self.dropped_uplink),
            "trace_path": self.trace_path,
        }


@dataclass
class RobotStack:
    """Everything one robot runs: bus pair, tactical runtime, strategic agent."""

    robot_id: str
    pair: ChannelPair
    runtime: TacticalRuntime
    agent: StrategicAgent
    chat_cursor: int = 0
    pending_requests: list[ActuatorRequest] = field(default_factory=list)


class Runner:
    def __init__(
        self,
        config: ScenarioConfig,
        trace_path: str | Path,
        stall_window: tuple[int, int] | None = None,
    ) -> None:
        config.validate()
        self.config = config
        self.world = load_scenario(config)
        self.kb = load_kb(*config.kb_paths)
        self._check_profiles()
        self.templates = load_templates(config.plans_path)
        self.stall_window = stall_window
        self.trace = TraceWriter(trace_path, config_payload(config))
        self.chat_log: list[dict[str, Any]] = []
        self._msg_seq = 0
        self._pending_chat: list[tuple[str, str]] = []  # (sender, text) from clients
        self.robots: dict[str, RobotStack] = {}
        self.on_tick_done: Callable[[int], None] | None = None
        self._build_robots()
        self._script_cursor = 0

    # -- construction ---------------------------------------------------------

    def _check_profiles(self) -> None:
        from strata.gateway.config import ScenarioValidationError

        for spec in self.config.robots:
            profile = self.kb.profiles.get(spec.robot_id)
            if profile is None:
                raise ScenarioValidationError(f"no KB profile for robot {spec.robot_id!r}")
            if profile.kind != spec.kind:
                raise ScenarioValidationError(
                    f"robot {spec.robot_id}: scenario kind {spec.kind} != profile kind {profile.kind}"
                )
        for human in self.config.humans:
            profile = self.kb.profiles.get(human.agent_id)
            if profile is None or profile.kind != "Human":
                raise ScenarioValidationError(f"no human KB profile for {human.agent_id!r}")

    def _build_robots(self) -> None:
        agent_positions = {h.agent_id: h.pos for h in self.config.humans}
        agent_positions.update({r.robot_id: r.pos for r in self.config.robots})
        robot_speeds = {
            r.robot_id: (1.0 if r.kind == "UGV" else 2.0) for r in self.config.robots
        }
        for spec in sorted(self.config.robots, key=lambda r: r.robot_id):
            body = self.world.robots[spec.robot_id]
            ctx = LeafContext.for_robot(
                spec.robot_id,
                spec.kind,
                raw_grid=self.world.static_grid,
                rooms=self.config.rooms,
                dock=spec.dock,
                radius=body.radius,
                v_max=body.v_max,
                omega_max=body.omega_max,
                vz_max=body.vz_max,
            )
            registry = default_registry()
            profile = self.kb.profiles[spec.robot_id]
            kind_profile = RobotKindProfile(
                agent_id=spec.robot_id, kind=spec.kind, skills=list(profile.skills)
            )
            if spec.tree:
                tree = load_tree(str(self.config.resolve(spec.tree)))
            else:
                tree = build_robot_tree(
                    kind_profile,
                    default_safety_spec(
                        spec.kind,
                        obstacle_radius=spec.obstacle_radius,
                        battery_reserve=spec.battery_reserve,
                        min_altitude=spec.min_altitude,
                    ),
                )
            engine = BtEngine(tree, registry, ctx)
            pair = ChannelPair(spec.robot_id)
            runtime = TacticalRuntime(
                robot_id=spec.robot_id,
                engine=engine,
                pair=pair,
                supported_verbs=kind_profile.supported_verbs(),
            )
            runtime.report_sink = self._report_sink(spec.robot_id)
            plan_ctx = PlanContext(
                self_id=spec.robot_id,
                kind=spec.kind,
                v_max=body.v_max,
                sweep_spacing=UGV_SWEEP_SPACING if spec.kind == "UGV" else DRONE_SWEEP_SPACING,
                rooms=dict(self.config.rooms),
                robot_speeds=robot_speeds,
                agent_positions=dict(agent_positions),
                self_position=spec.pos,
            )
            agent = StrategicAgent(
                agent_id=spec.robot_id,
                kb=self.kb,
                library=PlanLibrary(self.templates, plan_ctx),
                pair=pair,
                seed=self.config.seed or 0,
            )
            self.robots[spec.robot_id] = RobotStack(
                robot_id=spec.robot_id, pair=pair, runtime=runtime, agent=agent
            )

    def _report_sink(self, robot_id: str) -> Callable[[Report], None]:
        def sink(report: Report) -> None:
            self.trace.append(report.tick, robot_id, "report", report.to_payload())

        return sink

    # -- chat --------------------------------------------------------------------

    def inject_human_utterance(self, text: str, sender: str) -> str:
        """Queue a human chat line for delivery at the next tick boundary."""
        if not text.strip():
            raise ValueError("utterance must be non-empty")
        if sender not in {h.agent_id for h in self.config.humans}:
            raise ValueError(f"unknown human sender {sender!r}")
        self._pending_chat.append((sender, text))
        self._msg_seq += 1
        return f"msg-{self._msg_seq}"

    def _post_chat(self, sender: str, text: str, tick: int) -> dict[str, Any]:
        self._msg_seq += 1
        msg = {
            "msg_id": f"msg-{self._msg_seq}",
            "sender": sender,
            "text": text,
            "tick": tick,
        }
        self.chat_log.append(msg)
        self.trace.append(tick, sender, "chat", dict(msg))
        return msg

    # -- tick loop -----------------------------------------------------------------

    def tick_once(self) -> None:
        # 1. physics with last tick's requests
        requests = [req for stack in self.robots.values() for req in stack.pending_requests]
        _, detections, collisions = world_step(self.world, requests)
        tick = self.world.tick
        for event in collisions:
            self.trace.append(tick, "world", "collision", event.to_payload())

        # 2. chat delivery at the new tick
        while (
            self._script_cursor < len(self.config.script)
            and self.config.script[self._script_cursor].tick <= tick
        ):
            line = self.config.script[self._script_cursor]
            self._post_chat(line.sender, line.text, tick)
            self._script_cursor += 1
        for sender, text in self._pending_chat:
            self._post_chat(sender, text, tick)
        self._pending_chat.clear()

        # 3. tactical phase
        for rid in sorted(self.robots):
            stack = self.robots[rid]
            body = self.world.robots[rid]
            stack.pending_requests = stack.runtime.on_tick(
                TickInput(
                    tick=tick,
                    pose=(body.x, body.y, body.heading),
                    altitude=body.altitude,
                    battery=body.battery,
                    holding=body.holding,
                    detections=detections[rid],
                )
            )

        # 4. strategic phase
        if tick % self.config.strategic_period_ticks == 0 and not self._stalled(tick):
            for rid in sorted(self.robots):
                self._strategic_cycle(self.robots[rid], tick)

        if self.on_tick_done is not None:
            self.on_tick_done(tick)

    def _stalled(self, tick: int) -> bool:
        if self.stall_window is None:
            return False
        start, length = self.stall_window
        return start <= tick < start + length

    def _strategic_cycle(self, stack: RobotStack, tick: int) -> None:
        new_msgs = self.chat_log[stack.chat_cursor :]
        stack.chat_cursor = len(self.chat_log)
        out = stack.agent.cycle(tick, new_msgs)
        for tmr in out.tmrs:
            self.trace.append(tick, stack.robot_id, "tmr", tmr.to_payload())
        for failure in out.analysis_failures:
            self.trace.append(tick, stack.robot_id, "analysis_error", failure)
        for vmr in out.vmrs:
            self.trace.append(tick, stack.robot_id, "vmr", vmr.to_payload())
        for thought in out.thoughts:
            self.trace.append(tick, stack.robot_id, "thought", thought.to_payload())
        for command in out.commands:
            self.trace.append(tick, stack.robot_id, "command", command.to_payload())
        for utterance in out.utterances:
            self.trace.append(tick, stack.robot_id, "tmr", utterance.meaning.to_payload())
            self._post_chat(stack.robot_id, utterance.text, tick)

    # -- termination ------------------------------------------------------------------

    def goals_achieved(self) -> int:
        return sum(
            1
            for stack in self.robots.values()
            for entry in stack.agent.agenda.entries
            if entry.goal.status is GoalStatus.ACHIEVED
        )

    def _all_goals_terminal(self) -> bool:
        goals = [
            entry.goal
            for stack in self.robots.values()
            for entry in stack.agent.agenda.entries
        ]
        return bool(goals) and all(g.terminal for g in goals)

    def done(self) -> bool:
        if self.world.tick >= self.config.max_ticks:
            return True
        if self._script_cursor < len(self.config.script) or self._pending_chat:
            return False
        return self._all_goals_terminal()

    def finalize(self) -> RunSummary:
        for rid in sorted(self.robots):
            self.robots[rid].runtime.flush_active_command(self.world.tick)
        self.trace.close()
        return RunSummary(
            ticks=self.world.tick,
            goals_achieved=self.goals_achieved(),
            collisions=self.world.collisions_total,
            dropped_uplink={
                rid: stack.pair.dropped_uplink_count for rid, stack in self.robots.items()
            },
            trace_path=str(self.trace.path),
        )

    def run_headless(self) -> RunSummary:
        while not self.done():
            self.tick_once()
        return self.finalize()

    # -- snapshots for serving -------------------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        world = self.world
        return {
            "tick": world.tick,
            "map": {
                "cell_size": world.grid.cell_size,
                "width": world.grid.width,
                "height": world.grid.height,
                "rows": list(world.grid.cells),
            },
            "rooms": {name: list(rect) for name, rect in world.rooms.items()},
            "robots": [
                {
                    "robot_id": b.robot_id,
                    "kind": b.kind,
                    "x": b.x,
                    "y": b.y,
                    "heading": b.heading,
                    "altitude": b.altitude,
                    "battery": b.battery,
                    "holding": b.holding,
                }
                for _, b in sorted(world.robots.items())
            ],
            "objects": [
                {
                    "instance_id": o.instance_id,
                    "concept": o.concept,
                    "label": o.class_label,
                    "x": o.x,
                    "y": o.y,
                    "held_by": o.held_by,
                }
                for _, o in sorted(world.objects.items())
            ],
            "humans": [
                {"agent_id": h.agent_id, "x": h.x, "y": h.y}
                for _, h in sorted(world.humans.items())
            ],
            "scenario": config_payload(self.config),
        }

    def delta(self) -> dict[str, Any]:
        world = self.world
        return {
            "tick": world.tick,
            "robots": [
                {
                    "robot_id": b.robot_id,
                    "x": round(b.x, 4),
                    "y": round(b.y, 4),
                    "heading": round(b.heading, 4),
                    "altitude": round(b.altitude, 3),
                    "battery": round(b.battery, 4),
                    "holding": b.holding,
                }
                for _, b in sorted(world.robots.items())
            ],
            "objects": [
                {"instance_id": o.instance_id, "x": round(o.x, 4), "y": round(o.y, 4), "held_by": o.held_by}
                for _, o in sorted(world.objects.items())
            ],
        }


def default_trace_path(config: ScenarioConfig) -> str:
    return f"trace_{config.name}_{config.seed}.jsonl"


def run(
    config: ScenarioConfig,
    mode: str = "headless",
    port: int = 8750,
    trace_path: str | None = None,
    speed: float = 1.0,
    stall_window: tuple[int, int] | None = None,
) -> RunSummary:
    """Execute a scenario headless or behind the serve endpoint."""
    path = trace_path or default_trace_path(config)
    if mode == "headless":
        runner = Runner(config, path, stall_window=stall_window)
        return runner.run_headless()
    if mode == "serve":
        from strata.gateway.server import serve

        return serve(config, path, port=port, speed=speed)
    raise ValueError(f"unknown mode {mode!r}")


def tactical_ticks_match_world(runner: Runner) -> bool:
    """True when every robot's tactical tick count equals the world tick
    count (the delay-tolerance liveness check)."""
    return all(
        stack.runtime.ticks_executed == runner.world.tick
        for stack in runner.robots.values()
    )
