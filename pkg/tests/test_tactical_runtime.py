"""Command lifecycle through the tactical runtime against the live sim."""
from __future__ import annotations

import math
import random

import pytest

from strata.bus.channel import ChannelPair
from strata.bus.messages import Command, Report, ReportKind
from strata.datafiles import data_path
from strata.sim.grid import Grid
from strata.sim.world import RobotBody, WorldObject, WorldState, inject_obstacle, step
from strata.tactical.builder import RobotKindProfile, build_robot_tree, default_safety_spec
from strata.tactical.engine import BtEngine
from strata.tactical.leaves import LeafContext, default_registry
from strata.tactical.runtime import TacticalRuntime, TickInput
from strata.tactical.treefile import TreeParseError, dump_tree, load_tree, parse_tree

ARENA = "\n".join(
    [
        "############",
        "#..........#",
        "#..........#",
        "#..........#",
        "#..........#",
        "#..........#",
        "#..........#",
        "############",
    ]
)

UGV_SKILLS = ["MOVE-TO", "SEARCH-AREA", "PICK-UP", "SCAN", "RETURN-TO-DOCK", "STOP"]


def make_world(objects: dict | None = None, seed: int = 3) -> WorldState:
    grid = Grid.from_text(ARENA)
    body = RobotBody.make("r1", "UGV", 0.6, 0.9, heading=0.0, dock=(0.6, 0.6))
    return WorldState(
        grid=grid,
        rooms={"arena": (0.0, 0.0, 3.0, 2.0)},
        robots={"r1": body},
        objects=objects or {},
        humans={},
        rng=random.Random(seed),
        static_grid=grid,
    )


def make_runtime(world: WorldState, kind: str = "UGV", robot_id: str = "r1") -> TacticalRuntime:
    body = world.robots[robot_id]
    ctx = LeafContext.for_robot(
        robot_id, kind, raw_grid=world.static_grid, rooms=world.rooms,
        dock=body.dock, v_max=body.v_max, omega_max=body.omega_max, vz_max=body.vz_max,
    )
    profile = RobotKindProfile(agent_id=robot_id, kind=kind, skills=list(UGV_SKILLS))
    if kind == "Drone":
        profile.skills = ["MOVE-TO", "SEARCH-AREA", "SCAN", "HOVER", "RETURN-TO-DOCK", "STOP"]
    tree = build_robot_tree(profile, default_safety_spec(kind))
    engine = BtEngine(tree, default_registry(), ctx)
    return TacticalRuntime(
        robot_id=robot_id, engine=engine, pair=ChannelPair(robot_id),
        supported_verbs=profile.supported_verbs(),
    )


def run_loop(world: WorldState, runtime: TacticalRuntime, ticks: int, robot_id: str = "r1"):
    """World + tactical only (no strategic layer), mirroring the gateway order."""
    requests: list = []
    for _ in range(ticks):
        _, detections, _ = step(world, requests)
        body = world.robots[robot_id]
        requests = runtime.on_tick(
            TickInput(
                tick=world.tick,
                pose=(body.x, body.y, body.heading),
                altitude=body.altitude,
                battery=body.battery,
                holding=body.holding,
                detections=detections[robot_id],
            )
        )
    return requests


def reports_of(runtime: TacticalRuntime) -> list[Report]:
    return runtime.pair.poll_reports(10_000)


class TestCommandLifecycle:
    def test_move_to_acks_drives_and_succeeds(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "MOVE-TO", params={"target": [2.4, 1.2]}))
        run_loop(world, runtime, 120)
        kinds = [(r.kind, r.command_id) for r in reports_of(runtime)]
        assert (ReportKind.ACK, "cmd-1") in kinds
        assert (ReportKind.SUCCESS, "cmd-1") in kinds
        body = world.robots["r1"]
        assert math.hypot(body.x - 2.4, body.y - 1.2) < 0.3

    def test_idle_after_completion_emits_no_motion(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "MOVE-TO", params={"target": [1.5, 0.9]}))
        run_loop(world, runtime, 100)
        requests = run_loop(world, runtime, 3)
        assert requests == []

    def test_preemption_produces_exactly_one_preempted_report(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "MOVE-TO", params={"target": [2.6, 1.4]}))
        run_loop(world, runtime, 10)
        runtime.pair.send_command(Command("cmd-2", "r1", "SEARCH-AREA", params={"room": "arena"}))
        run_loop(world, runtime, 10)
        reports = reports_of(runtime)
        preempted = [r for r in reports if r.kind is ReportKind.PREEMPTED]
        assert [r.command_id for r in preempted] == ["cmd-1"]
        assert sum(1 for r in reports if r.terminal and r.command_id == "cmd-1") == 1

    def test_unsupported_verb_rejected_with_failure_report(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-x", "r1", "HOVER", params={}))
        run_loop(world, runtime, 2)
        failures = [r for r in reports_of(runtime) if r.kind is ReportKind.FAILURE]
        assert failures and failures[0].data["reason"] == "rejected:UnsupportedVerb"

    def test_deadline_expiry(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(
            Command("cmd-1", "r1", "MOVE-TO", params={"target": [2.6, 1.4]},
                    issued_tick=1, deadline_ticks=5)
        )
        run_loop(world, runtime, 20)
        kinds = [(r.kind, r.command_id) for r in reports_of(runtime)]
        assert (ReportKind.EXPIRED, "cmd-1") in kinds
        assert (ReportKind.SUCCESS, "cmd-1") not in kinds

    def test_progress_reports_monotone(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "MOVE-TO", params={"target": [2.6, 1.0]}))
        run_loop(world, runtime, 80)
        fractions = [
            r.data["fraction"] for r in reports_of(runtime) if r.kind is ReportKind.PROGRESS
        ]
        assert fractions == sorted(fractions)

    def test_pick_up_grasps_object(self):
        objects = {"keys-1": WorldObject("keys-1", "KEY-SET", "keys", 2.2, 1.2)}
        world = make_world(objects=objects)
        runtime = make_runtime(world)
        runtime.pair.send_command(
            Command("cmd-1", "r1", "PICK-UP", params={"position": [2.2, 1.2], "object": "keys-1"})
        )
        run_loop(world, runtime, 150)
        kinds = [(r.kind, r.command_id) for r in reports_of(runtime)]
        assert (ReportKind.SUCCESS, "cmd-1") in kinds
        assert world.robots["r1"].holding == "keys-1"

    def test_search_area_covers_and_succeeds(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "SEARCH-AREA", params={"room": "arena"}))
        run_loop(world, runtime, 400)
        kinds = [r.kind for r in reports_of(runtime)]
        assert ReportKind.SUCCESS in kinds

    def test_unknown_room_fails_with_reason(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "SEARCH-AREA", params={"room": "attic"}))
        run_loop(world, runtime, 3)
        failures = [r for r in reports_of(runtime) if r.kind is ReportKind.FAILURE]
        assert failures and failures[0].data["reason"] == "unknown-room"


class TestSafety:
    def test_injected_obstacle_stops_motion_and_reports(self):
        world = make_world()
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "MOVE-TO", params={"target": [2.6, 0.9]}))
        run_loop(world, runtime, 12)
        body = world.robots["r1"]
        # drop a block directly in front of the moving robot
        inject_obstacle(world, body.x + 0.25 * math.cos(body.heading),
                        body.y + 0.25 * math.sin(body.heading))
        run_loop(world, runtime, 40)
        reports = reports_of(runtime)
        assert any(
            r.kind is ReportKind.SAFETY_EVENT and r.data.get("kind") == "safety_cond_obstacle"
            for r in reports
        )
        assert world.collisions_total == 0
        # while the safety condition held, no command-subtree actuator requests
        result = runtime.last_result
        assert all(req.source_node_id != "act_move_to" for req in result.requests)

    def test_battery_reserve_returns_to_dock(self):
        world = make_world()
        body = world.robots["r1"]
        body.x, body.y = 2.4, 1.5  # start far from the dock at (0.6, 0.6)
        body.battery = 0.05
        runtime = make_runtime(world)
        runtime.pair.send_command(Command("cmd-1", "r1", "MOVE-TO", params={"target": [2.6, 1.4]}))
        closest = math.inf
        requests: list = []
        for _ in range(300):
            _, detections, _ = step(world, requests)
            requests = runtime.on_tick(
                TickInput(world.tick, (body.x, body.y, body.heading), body.altitude,
                          body.battery, body.holding, detections["r1"])
            )
            closest = min(closest, math.hypot(body.x - 0.6, body.y - 0.6))
        assert closest < 0.35  # the reserve reflex drove it to the dock
        assert body.battery > 0.05  # and it charged there

    def test_drone_altitude_floor_triggers_climb(self):
        grid = Grid.from_text(ARENA)
        body = RobotBody.make("d1", "Drone", 1.5, 1.0, altitude=0.35, dock=(0.6, 0.6))
        world = WorldState(grid=grid, rooms={"arena": (0, 0, 3, 2)}, robots={"d1": body},
                           objects={}, humans={}, rng=random.Random(1), static_grid=grid)
        runtime = make_runtime(world, kind="Drone", robot_id="d1")
        run_loop(world, runtime, 30, robot_id="d1")
        assert world.robots["d1"].altitude >= 0.5

    def test_drone_holds_cruise_altitude_via_autopilot(self):
        grid = Grid.from_text(ARENA)
        body = RobotBody.make("d1", "Drone", 1.5, 1.0, altitude=1.0, dock=(0.6, 0.6))
        world = WorldState(grid=grid, rooms={"arena": (0, 0, 3, 2)}, robots={"d1": body},
                           objects={}, humans={}, rng=random.Random(1), static_grid=grid)
        runtime = make_runtime(world, kind="Drone", robot_id="d1")
        run_loop(world, runtime, 80, robot_id="d1")
        assert world.robots["d1"].altitude == pytest.approx(1.5, abs=0.05)


class TestPerceptFlow:
    def test_percept_batches_forwarded_on_uplink(self):
        objects = {"keys-1": WorldObject("keys-1", "KEY-SET", "keys", 1.6, 0.9)}
        world = make_world(objects=objects)
        runtime = make_runtime(world)
        run_loop(world, runtime, 30)
        batches = [r for r in reports_of(runtime) if r.kind is ReportKind.PERCEPT_BATCH]
        assert batches
        assert any(
            d["class_label"] == "keys"
            for r in batches
            for d in r.data["detections"]
        )
        assert all("pose" in r.data for r in batches)


class TestTreeFiles:
    def test_shipped_trees_match_builder_output(self, kb):
        for rid, fname in (("rover", "ugv.bt"), ("skye", "drone.bt")):
            profile = kb.profiles[rid]
            built = build_robot_tree(
                RobotKindProfile(rid, profile.kind, list(profile.skills)),
                default_safety_spec(profile.kind),
            )
            shipped = load_tree(str(data_path(fname)))
            assert dump_tree(shipped) == dump_tree(built)

    def test_parse_dump_round_trip(self):
        text = (
            "selector root\n"
            "  sequence s1\n"
            "    condition c1 pred=has_command\n"
            "    retry r1 attempts=2\n"
            "      action a1 do=idle\n"
            "  parallel p1 threshold=2\n"
            "    action a2 do=idle\n"
            "    action a3 do=idle extra=1.5\n"
            "  memseq m1\n"
            "    sequence s2\n"
            "      action a4 do=idle\n"
        )
        assert dump_tree(parse_tree(text)) == text

    def test_parse_errors_name_lines(self):
        with pytest.raises(TreeParseError, match="line 1"):
            parse_tree("widget root\n")
        with pytest.raises(TreeParseError, match="line 2"):
            parse_tree("selector root\n    action deep do=idle\n")
        with pytest.raises(TreeParseError, match="line 3"):
            parse_tree("selector root\n  action a do=idle\naction b do=idle\n")
        with pytest.raises(TreeParseError, match="threshold"):
            parse_tree("parallel p\n  action a do=idle\n")
        with pytest.raises(TreeParseError, match="empty"):
            parse_tree("# nothing here\n")
