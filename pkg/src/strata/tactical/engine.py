"""Reactive behavior-tree tick engine.

Evaluation restarts from the root each tick so higher-priority subtrees
preempt running behavior; a MemorySequenceMarker opts one sequence back
into resume-where-left-off semantics. All evaluation state (memory
indices, running-action bookkeeping) lives on the blackboard, so two
ticks from byte-identical blackboards and percepts are identical.

Preemption: an action that reported Running and is not visited on the
next tick receives exactly one halt call at the end of that tick, and
its motion channel is zeroed the same tick unless a higher-priority
action already wrote that channel.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from strata.sim.types import Detection
from strata.tactical.blackboard import BtBlackboard
from strata.tactical.leaves import LeafContext, LeafRegistry
from strata.tactical.nodes import (
    Action,
    BtNode,
    BtStatus,
    Condition,
    Inverter,
    MemorySequenceMarker,
    Parallel,
    Retry,
    Selector,
    Sequence,
    validate_tree,
    walk,
)
from strata.tactical.types import ActuatorRequest

RUNNING_KEY = "internal/bt/running"
MEMSEQ_PREFIX = "internal/bt/memseq/"

# channels that must be actively zeroed when their writer is preempted
MOTION_CHANNELS = ("drive", "vertical")


class UnresolvedLeaf(Exception):
    """A leaf id vanished between build-time validation and tick time."""


@dataclass
class TickResult:
    status: BtStatus
    requests: list[ActuatorRequest]
    node_status: dict[str, BtStatus] = field(default_factory=dict)
    visited_actions: list[str] = field(default_factory=list)
    halted_actions: list[str] = field(default_factory=list)


@dataclass
class _Pass:
    requests: list[ActuatorRequest] = field(default_factory=list)
    node_status: dict[str, BtStatus] = field(default_factory=dict)
    visited_actions: list[str] = field(default_factory=list)


class BtEngine:
    """Single-threaded evaluator bound to one robot's tree and leaves."""

    def __init__(self, root: BtNode, registry: LeafRegistry, ctx: LeafContext) -> None:
        validate_tree(root, registry)
        self.root = root
        self.registry = registry
        self.ctx = ctx
        self._action_ids = {
            node.node_id: node.action_id
            for node in walk(root)
            if isinstance(node, Action)
        }

    def tick(self, bb: BtBlackboard, percepts: list[Detection]) -> TickResult:
        bb.tick_counter += 1
        state = _Pass()
        status = self._tick_node(self.root, bb, percepts, state)

        prev_running = [n for n in bb.get_list(RUNNING_KEY, [])]
        visited = set(state.visited_actions)
        running_now = [
            nid
            for nid in state.visited_actions
            if state.node_status.get(nid) is BtStatus.RUNNING
        ]
        halted = [nid for nid in prev_running if nid not in visited]
        written_channels = {req.channel for req in state.requests}
        for nid in halted:
            spec = self.registry.action_spec(self._action_id(nid))
            if spec.halt is not None:
                spec.halt(self.ctx, bb)
            if spec.channel in MOTION_CHANNELS and spec.channel not in written_channels:
                zero = (0.0,) if spec.channel == "vertical" else (0.0, 0.0)
                state.requests.append(
                    ActuatorRequest(
                        robot_id=self.ctx.robot_id,
                        channel=spec.channel,
                        setpoint=zero,
                        source_node_id=nid,
                    )
                )
                written_channels.add(spec.channel)
        bb.set(RUNNING_KEY, running_now)

        return TickResult(
            status=status,
            requests=_first_per_channel(state.requests),
            node_status=state.node_status,
            visited_actions=state.visited_actions,
            halted_actions=halted,
        )

    # -- node dispatch ------------------------------------------------------

    def _tick_node(
        self, node: BtNode, bb: BtBlackboard, percepts: list[Detection], state: _Pass
    ) -> BtStatus:
        if isinstance(node, Sequence):
            status = self._tick_sequence(node.children, bb, percepts, state)
        elif isinstance(node, Selector):
            status = self._tick_selector(node, bb, percepts, state)
        elif isinstance(node, Parallel):
            status = self._tick_parallel(node, bb, percepts, state)
        elif isinstance(node, Condition):
            status = self._tick_condition(node, bb, percepts)
        elif isinstance(node, Action):
            status = self._tick_action(node, bb, percepts, state)
        elif isinstance(node, Inverter):
            inner = self._tick_node(node.child, bb, percepts, state)
            status = {
                BtStatus.SUCCESS: BtStatus.FAILURE,
                BtStatus.FAILURE: BtStatus.SUCCESS,
                BtStatus.RUNNING: BtStatus.RUNNING,
            }[inner]
        elif isinstance(node, Retry):
            status = BtStatus.FAILURE
            for _ in range(node.attempts):
                status = self._tick_node(node.child, bb, percepts, state)
                if status is not BtStatus.FAILURE:
                    break
        elif isinstance(node, MemorySequenceMarker):
            status = self._tick_memseq(node, bb, percepts, state)
        else:
            raise UnresolvedLeaf(f"unknown node type {type(node).__name__}")
        state.node_status[node.node_id] = status
        return status

    def _tick_sequence(
        self,
        children: list[BtNode],
        bb: BtBlackboard,
        percepts: list[Detection],
        state: _Pass,
    ) -> BtStatus:
        for child in children:
            status = self._tick_node(child, bb, percepts, state)
            if status is not BtStatus.SUCCESS:
                return status
        return BtStatus.SUCCESS

    def _tick_selector(
        self, node: Selector, bb: BtBlackboard, percepts: list[Detection], state: _Pass
    ) -> BtStatus:
        for child in node.children:
            status = self._tick_node(child, bb, percepts, state)
            if status is not BtStatus.FAILURE:
                return status
        return BtStatus.FAILURE

    def _tick_parallel(
        self, node: Parallel, bb: BtBlackboard, percepts: list[Detection], state: _Pass
    ) -> BtStatus:
        statuses = [self._tick_node(c, bb, percepts, state) for c in node.children]
        succeeded = sum(1 for s in statuses if s is BtStatus.SUCCESS)
        failed = sum(1 for s in statuses if s is BtStatus.FAILURE)
        if succeeded >= node.success_threshold:
            return BtStatus.SUCCESS
        if failed > len(node.children) - node.success_threshold:
            return BtStatus.FAILURE
        return BtStatus.RUNNING

    def _tick_memseq(
        self,
        node: MemorySequenceMarker,
        bb: BtBlackboard,
        percepts: list[Detection],
        state: _Pass,
    ) -> BtStatus:
        seq: Sequence = node.child  # type guaranteed by validation
        key = MEMSEQ_PREFIX + node.node_id
        start = bb.get(key, 0)
        if not isinstance(start, int) or not 0 <= start < len(seq.children):
            start = 0
        i = start
        while i < len(seq.children):
            status = self._tick_node(seq.children[i], bb, percepts, state)
            if status is BtStatus.RUNNING:
                bb.set(key, i)
                state.node_status[seq.node_id] = BtStatus.RUNNING
                return BtStatus.RUNNING
            if status is BtStatus.FAILURE:
                bb.set(key, 0)
                state.node_status[seq.node_id] = BtStatus.FAILURE
                return BtStatus.FAILURE
            i += 1
        bb.set(key, 0)
        state.node_status[seq.node_id] = BtStatus.SUCCESS
        return BtStatus.SUCCESS

    def _tick_condition(
        self, node: Condition, bb: BtBlackboard, percepts: list[Detection]
    ) -> BtStatus:
        try:
            predicate = self.registry.predicate(node.predicate_id)
        except KeyError as exc:
            raise UnresolvedLeaf(str(exc)) from exc
        result = predicate(self.ctx, bb, percepts, node.params)
        return BtStatus.SUCCESS if result else BtStatus.FAILURE

    def _tick_action(
        self, node: Action, bb: BtBlackboard, percepts: list[Detection], state: _Pass
    ) -> BtStatus:
        try:
            spec = self.registry.action_spec(node.action_id)
        except KeyError as exc:
            raise UnresolvedLeaf(str(exc)) from exc
        status, request = spec.fn(self.ctx, bb, percepts, node.params)
        if request is not None:
            state.requests.append(
                replace(request, robot_id=self.ctx.robot_id, source_node_id=node.node_id)
            )
        if node.node_id not in state.visited_actions:
            state.visited_actions.append(node.node_id)
        return status

    def _action_id(self, node_id: str) -> str:
        try:
            return self._action_ids[node_id]
        except KeyError as exc:
            raise UnresolvedLeaf(f"no action node {node_id!r}") from exc


def _first_per_channel(requests: list[ActuatorRequest]) -> list[ActuatorRequest]:
    """At most one request per channel leaves the layer; the earliest wins
    because visitation order is priority order."""
    seen: set[str] = set()
    out: list[ActuatorRequest] = []
    for req in requests:
        if req.channel in seen:
            continue
        seen.add(req.channel)
        out.append(req)
    return out
