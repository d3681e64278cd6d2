"""Engine semantics against the independent reference interpreter, plus
blackboard, validation, preemption/halt and install_command behavior."""
from __future__ import annotations

import itertools

import pytest

from strata.bus.messages import Command
from strata.tactical.blackboard import BlackboardTypeMismatch, BtBlackboard
from strata.tactical.builder import RobotKindProfile, build_robot_tree, default_safety_spec
from strata.tactical.engine import BtEngine, UnresolvedLeaf
from strata.tactical.nodes import (
    Action,
    BtStatus,
    Condition,
    Inverter,
    MemorySequenceMarker,
    Parallel,
    Retry,
    Selector,
    Sequence,
    ValidationFailure,
    validate_tree,
)
from strata.tactical.runtime import install_command
from strata.tactical.types import ActuatorRequest

from tests.helpers import make_blackboard, stub_registry
from tests.reference_bt import ref_tick

S, F, R = BtStatus.SUCCESS, BtStatus.FAILURE, BtStatus.RUNNING
STATUSES = (S, F, R)


def stub_children(count: int) -> list[Action]:
    return [
        Action(node_id=f"c{i}", action_id="stub", params={"key": f"c{i}"})
        for i in range(count)
    ]


def write_statuses(bb: BtBlackboard, statuses) -> dict[str, BtStatus]:
    table = {}
    for i, status in enumerate(statuses):
        bb.set(f"internal/stub/c{i}", status.value)
        table[f"c{i}"] = status
    return table


def engine_for(root, stub_ctx) -> BtEngine:
    return BtEngine(root, stub_registry(), stub_ctx)


class TestCompositeTruthTables:
    @pytest.mark.parametrize("arity", [1, 2, 3])
    def test_sequence_and_selector_match_reference(self, arity, stub_ctx):
        for statuses in itertools.product(STATUSES, repeat=arity):
            for make in (Sequence, Selector):
                root = make(node_id="root", children=stub_children(arity))
                bb = make_blackboard()
                table = write_statuses(bb, statuses)
                got = engine_for(root, stub_ctx).tick(bb, []).status
                assert got is ref_tick(root, table), (make.__name__, statuses)

    @pytest.mark.parametrize("arity", [1, 2, 3])
    def test_parallel_matches_reference(self, arity, stub_ctx):
        for threshold in range(1, arity + 1):
            for statuses in itertools.product(STATUSES, repeat=arity):
                root = Parallel(
                    node_id="root",
                    children=stub_children(arity),
                    success_threshold=threshold,
                )
                bb = make_blackboard()
                table = write_statuses(bb, statuses)
                got = engine_for(root, stub_ctx).tick(bb, []).status
                assert got is ref_tick(root, table), (threshold, statuses)

    def test_inverter_matches_reference(self, stub_ctx):
        for status in STATUSES:
            root = Inverter(node_id="root", child=stub_children(1)[0])
            bb = make_blackboard()
            table = write_statuses(bb, [status])
            got = engine_for(root, stub_ctx).tick(bb, []).status
            assert got is ref_tick(root, table)

    def test_retry_matches_reference(self, stub_ctx):
        for attempts in (1, 2, 3):
            for status in STATUSES:
                root = Retry(node_id="root", child=stub_children(1)[0], attempts=attempts)
                bb = make_blackboard()
                table = write_statuses(bb, [status])
                got = engine_for(root, stub_ctx).tick(bb, []).status
                assert got is ref_tick(root, table)

    @pytest.mark.parametrize("arity", [1, 2, 3])
    def test_memory_sequence_two_tick_matches_reference(self, arity, stub_ctx):
        for first in itertools.product(STATUSES, repeat=arity):
            for second in itertools.product(STATUSES, repeat=arity):
                root = MemorySequenceMarker(
                    node_id="root",
                    child=Sequence(node_id="seq", children=stub_children(arity)),
                )
                bb = make_blackboard()
                engine = engine_for(root, stub_ctx)
                memory: dict[str, int] = {}

                table = write_statuses(bb, first)
                assert engine.tick(bb, []).status is ref_tick(root, table, memory)
                table = write_statuses(bb, second)
                assert engine.tick(bb, []).status is ref_tick(root, table, memory)


class TestEngineMechanics:
    def test_memory_sequence_skips_completed_children(self, stub_ctx):
        flaky_calls: list[str] = []

        def first_step(ctx, bb, percepts, params):
            flaky_calls.append("first")
            return S, None

        def second_step(ctx, bb, percepts, params):
            done = bb.get("internal/stub/done", False)
            return (S if done else R), None

        reg = stub_registry()
        reg.register_action("first_step", first_step)
        reg.register_action("second_step", second_step)
        root = MemorySequenceMarker(
            node_id="mem",
            child=Sequence(
                node_id="seq",
                children=[
                    Action(node_id="a", action_id="first_step"),
                    Action(node_id="b", action_id="second_step"),
                ],
            ),
        )
        engine = BtEngine(root, reg, stub_ctx)
        bb = make_blackboard()
        assert engine.tick(bb, []).status is R
        assert engine.tick(bb, []).status is R
        bb.set("internal/stub/done", True)
        assert engine.tick(bb, []).status is S
        assert flaky_calls == ["first"]  # resumed, never restarted

    def test_reactive_sequence_restarts_every_tick(self, stub_ctx):
        calls: list[str] = []

        def counting(ctx, bb, percepts, params):
            calls.append(params["key"])
            return S if params["key"] == "x" else R, None

        reg = stub_registry()
        reg.register_action("counting", counting)
        root = Sequence(
            node_id="seq",
            children=[
                Action(node_id="a", action_id="counting", params={"key": "x"}),
                Action(node_id="b", action_id="counting", params={"key": "y"}),
            ],
        )
        engine = BtEngine(root, reg, stub_ctx)
        bb = make_blackboard()
        engine.tick(bb, [])
        engine.tick(bb, [])
        assert calls == ["x", "y", "x", "y"]

    def test_retry_reattempts_within_one_tick(self, stub_ctx):
        attempts: list[int] = []

        def flaky(ctx, bb, percepts, params):
            attempts.append(1)
            return (S if len(attempts) >= 3 else F), None

        reg = stub_registry()
        reg.register_action("flaky", flaky)
        root = Retry(node_id="r", child=Action(node_id="a", action_id="flaky"), attempts=3)
        engine = BtEngine(root, reg, stub_ctx)
        assert engine.tick(make_blackboard(), []).status is S
        assert len(attempts) == 3

    def test_determinism_from_identical_blackboards(self, stub_ctx):
        root = Selector(
            node_id="root",
            children=[
                Sequence(node_id="s1", children=stub_children(2)),
                Action(node_id="c9", action_id="stub", params={"key": "c9"}),
            ],
        )
        bb = make_blackboard()
        bb.set("internal/stub/c0", "success")
        bb.set("internal/stub/c1", "running")
        bb.set("internal/stub/c9", "running")
        snapshot = bb.snapshot()
        r1 = engine_for(root, stub_ctx).tick(bb, [])
        bb2 = BtBlackboard.from_snapshot("test-bot", snapshot)
        r2 = engine_for(root, stub_ctx).tick(bb2, [])
        assert r1.status is r2.status
        assert [r.to_payload() for r in r1.requests] == [r.to_payload() for r in r2.requests]
        assert bb.snapshot() == bb2.snapshot()

    def test_unresolved_leaf_raises(self, stub_ctx):
        root = Action(node_id="a", action_id="stub", params={"key": "a"})
        engine = engine_for(root, stub_ctx)
        engine.registry._actions.clear()  # simulate registry corruption
        with pytest.raises(UnresolvedLeaf):
            engine.tick(make_blackboard(), [])


class TestHaltSemantics:
    def make_engine(self, stub_ctx):
        halted: list[str] = []

        def patrol(ctx, bb, percepts, params):
            return R, ActuatorRequest("", "drive", (0.7, 0.0))

        def stop_action(ctx, bb, percepts, params):
            return R, ActuatorRequest("", "drive", (0.0, 0.0))

        reg = stub_registry()
        reg.register_action(
            "patrol", patrol, halt=lambda ctx, bb: halted.append("patrol"), channel="drive"
        )
        reg.register_action("stop_all", stop_action, channel="drive")

        def danger(ctx, bb, percepts, params) -> bool:
            return bool(bb.get("internal/stub/danger", False))

        reg.register_predicate("danger", danger)
        root = Selector(
            node_id="root",
            children=[
                Sequence(
                    node_id="safety",
                    children=[
                        Condition(node_id="danger_c", predicate_id="danger"),
                        Action(node_id="stop_a", action_id="stop_all"),
                    ],
                ),
                Action(node_id="patrol_a", action_id="patrol"),
            ],
        )
        return BtEngine(root, reg, stub_ctx), halted

    def test_preempted_action_gets_exactly_one_halt(self, stub_ctx):
        engine, halted = self.make_engine(stub_ctx)
        bb = make_blackboard()
        r1 = engine.tick(bb, [])
        assert r1.requests[0].setpoint == (0.7, 0.0)
        bb.set("internal/stub/danger", True)
        r2 = engine.tick(bb, [])
        assert halted == ["patrol"]
        assert r2.halted_actions == ["patrol_a"]
        # the safety stop already wrote the drive channel this tick
        assert [req.source_node_id for req in r2.requests] == ["stop_a"]
        assert r2.requests[0].setpoint == (0.0, 0.0)
        r3 = engine.tick(bb, [])
        assert halted == ["patrol"]  # exactly once
        assert r3.halted_actions == []

    def test_halt_zeroes_channel_when_nothing_else_wrote_it(self, stub_ctx):
        def mover(ctx, bb, percepts, params):
            if bb.get("internal/stub/go", True):
                return R, ActuatorRequest("", "drive", (0.5, 0.1))
            return F, None

        reg = stub_registry()
        reg.register_action("mover", mover, channel="drive")
        root = Selector(
            node_id="root",
            children=[
                Sequence(
                    node_id="guard",
                    children=[
                        Condition(node_id="go_c", predicate_id="stub_pred", params={"key": "go"}),
                        Action(node_id="move_a", action_id="mover"),
                    ],
                ),
                Action(node_id="idle_a", action_id="stub", params={"key": "idle"}),
            ],
        )
        engine = BtEngine(root, reg, stub_ctx)
        bb = make_blackboard()
        bb.set("internal/stub/go", "success")
        bb.set("internal/stub/idle", "running")
        engine.tick(bb, [])
        bb.set("internal/stub/go", "failure")  # guard now fails; mover preempted
        result = engine.tick(bb, [])
        zeroes = [r for r in result.requests if r.source_node_id == "move_a"]
        assert len(zeroes) == 1 and zeroes[0].setpoint == (0.0, 0.0)

    def test_safety_true_means_no_command_requests(self, stub_ctx):
        engine, _ = self.make_engine(stub_ctx)
        bb = make_blackboard()
        bb.set("internal/stub/danger", True)
        for _ in range(5):
            result = engine.tick(bb, [])
            assert all(req.source_node_id != "patrol_a" for req in result.requests)


class TestValidation:
    def test_duplicate_ids_rejected(self):
        root = Sequence(node_id="root", children=[
            Action(node_id="a", action_id="stub"),
            Action(node_id="a", action_id="stub"),
        ])
        with pytest.raises(ValidationFailure, match="duplicate"):
            validate_tree(root)

    def test_empty_composite_rejected(self):
        with pytest.raises(ValidationFailure, match="no children"):
            validate_tree(Sequence(node_id="root"))

    def test_parallel_threshold_bounds(self):
        root = Parallel(node_id="root", children=stub_children(2), success_threshold=3)
        with pytest.raises(ValidationFailure, match="threshold"):
            validate_tree(root)

    def test_shared_subtree_rejected(self):
        shared = Action(node_id="x", action_id="stub")
        root = Sequence(node_id="root", children=[shared, shared])
        with pytest.raises(ValidationFailure, match="two parents"):
            validate_tree(root)

    def test_memseq_requires_sequence_child(self):
        root = MemorySequenceMarker(node_id="m", child=Action(node_id="a", action_id="stub"))
        with pytest.raises(ValidationFailure, match="sequence"):
            validate_tree(root)

    def test_unknown_leaf_at_build_time(self, stub_ctx):
        root = Action(node_id="a", action_id="no_such_action")
        with pytest.raises(ValidationFailure, match="unknown action"):
            BtEngine(root, stub_registry(), stub_ctx)


class TestBlackboard:
    def test_namespace_enforced(self):
        bb = make_blackboard()
        with pytest.raises(ValueError):
            bb.set("bogus/key", 1)
        with pytest.raises(ValueError):
            bb.set("percept", 1)

    def test_type_mismatch(self):
        bb = make_blackboard()
        bb.set("internal/x", "hello")
        with pytest.raises(BlackboardTypeMismatch):
            bb.get_float("internal/x")
        with pytest.raises(BlackboardTypeMismatch):
            bb.set("internal/bad", {"not": "allowed"})

    def test_snapshot_roundtrip(self):
        bb = make_blackboard()
        bb.set("percept/pose", (1.0, 2.0, 0.5))
        bb.set("command/verb", "MOVE-TO")
        bb.set("internal/flags", ["a", "b"])
        bb.tick_counter = 7
        clone = BtBlackboard.from_snapshot("test-bot", bb.snapshot())
        assert clone.snapshot() == bb.snapshot()
        assert clone.get_vec("percept/pose") == (1.0, 2.0, 0.5)


class TestBuilder:
    def ugv_profile(self):
        return RobotKindProfile(
            agent_id="rover", kind="UGV",
            skills=["MOVE-TO", "SEARCH-AREA", "PICK-UP", "SCAN", "RETURN-TO-DOCK", "STOP"],
        )

    def test_root_structure(self):
        tree = build_robot_tree(self.ugv_profile(), default_safety_spec("UGV"))
        assert isinstance(tree, Selector)
        # safety rules, then command subtree, then idle fallback
        assert len(tree.children) == 4
        assert tree.children[-1].node_id == "idle"

    def test_single_safety_rule_gives_three_children(self):
        spec = [rule for rule in default_safety_spec("UGV") if rule.name == "obstacle"]
        tree = build_robot_tree(self.ugv_profile(), spec)
        assert len(tree.children) == 3  # safety, command subtree, idle

    def test_ugv_first_subtree_references_obstacle_predicate(self):
        tree = build_robot_tree(self.ugv_profile(), default_safety_spec("UGV"))
        first = tree.children[0]
        assert first.children[0].predicate_id == "safety/obstacle_within_radius"

    def test_drone_battery_threshold_parameter(self):
        profile = RobotKindProfile(agent_id="skye", kind="Drone", skills=["MOVE-TO", "STOP"])
        tree = build_robot_tree(profile, default_safety_spec("Drone", battery_reserve=0.15))
        battery = [
            n for n in tree.children
            if isinstance(n, Sequence) and "battery" in n.node_id
        ][0]
        assert battery.children[0].params["threshold"] == 0.15

    def test_missing_mandatory_rule_rejected(self):
        spec = default_safety_spec("UGV")
        no_obstacle = [rule for rule in spec if rule.name != "obstacle"]
        with pytest.raises(ValidationFailure, match="obstacle"):
            build_robot_tree(self.ugv_profile(), no_obstacle)
        with pytest.raises(ValidationFailure, match="empty"):
            build_robot_tree(self.ugv_profile(), [])


class TestInstallCommand:
    def bb_with_verbs(self, verbs=("MOVE-TO", "SEARCH-AREA", "PICK-UP")):
        bb = make_blackboard()
        bb.set("internal/verbs", list(verbs))
        return bb

    def test_accepts_and_stages_params(self):
        bb = self.bb_with_verbs()
        cmd = Command("cmd-1", "test-bot", "MOVE-TO", params={"target": [3.0, 4.0]})
        result = install_command(bb, cmd)
        assert result.accepted and result.preempted_command_id is None
        assert bb.get("command/verb") == "MOVE-TO"
        assert bb.get_vec("command/param/target") == (3.0, 4.0)

    def test_unsupported_verb_rejected(self):
        bb = self.bb_with_verbs(("MOVE-TO",))
        cmd = Command("cmd-2", "test-bot", "PICK-UP", params={"position": [1.0, 1.0]})
        result = install_command(bb, cmd)
        assert not result.accepted and result.reason == "UnsupportedVerb"

    def test_malformed_params_rejected(self):
        bb = self.bb_with_verbs()
        cmd = Command("cmd-3", "test-bot", "MOVE-TO", params={})
        result = install_command(bb, cmd)
        assert not result.accepted and result.reason == "MalformedParams"

    def test_preempts_running_command(self):
        bb = self.bb_with_verbs()
        install_command(bb, Command("cmd-4", "test-bot", "MOVE-TO", params={"target": [1.0, 1.0]}))
        bb.set("internal/cmd/nav/idx", 2)  # running state that must be wiped
        result = install_command(
            bb, Command("cmd-5", "test-bot", "SEARCH-AREA", params={"room": "kitchen"})
        )
        assert result.accepted and result.preempted_command_id == "cmd-4"
        assert bb.get("command/verb") == "SEARCH-AREA"
        assert not bb.has("internal/cmd/nav/idx")
