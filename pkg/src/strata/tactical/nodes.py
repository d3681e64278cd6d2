"""Behavior tree node model and build-time validation."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator


class BtStatus(Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class ValidationFailure(Exception):
    """A tree violated a structural invariant at build time."""


@dataclass
class BtNode:
    node_id: str


@dataclass
class Sequence(BtNode):
    children: list[BtNode] = field(default_factory=list)


@dataclass
class Selector(BtNode):
    children: list[BtNode] = field(default_factory=list)


@dataclass
class Parallel(BtNode):
    children: list[BtNode] = field(default_factory=list)
    success_threshold: int = 1


@dataclass
class Condition(BtNode):
    predicate_id: str = ""
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class Action(BtNode):
    action_id: str = ""
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class Inverter(BtNode):
    child: BtNode | None = None


@dataclass
class Retry(BtNode):
    """Re-tick the child up to ``attempts`` times within one pass until it
    stops failing."""

    child: BtNode | None = None
    attempts: int = 1


@dataclass
class MemorySequenceMarker(BtNode):
    """Opt-out of reactive semantics: the wrapped Sequence resumes from its
    last running child instead of restarting at the root each tick."""

    child: BtNode | None = None


COMPOSITES = (Sequence, Selector, Parallel)
DECORATORS = (Inverter, Retry, MemorySequenceMarker)


def children_of(node: BtNode) -> list[BtNode]:
    if isinstance(node, COMPOSITES):
        return list(node.children)
    if isinstance(node, DECORATORS):
        return [node.child] if node.child is not None else []
    return []


def walk(node: BtNode) -> Iterator[BtNode]:
    yield node
    for child in children_of(node):
        yield from walk(child)


def validate_tree(root: BtNode, registry: "LeafRegistryLike | None" = None) -> None:
    """Check structural invariants; raises ValidationFailure naming the
    violated rule. With a registry, leaf ids must also resolve."""
    seen_ids: set[str] = set()
    seen_nodes: set[int] = set()
    for node in walk(root):
        if id(node) in seen_nodes:
            raise ValidationFailure(f"node {node.node_id!r} reachable from two parents")
        seen_nodes.add(id(node))
        if not node.node_id:
            raise ValidationFailure("node with empty node_id")
        if node.node_id in seen_ids:
            raise ValidationFailure(f"duplicate node_id {node.node_id!r}")
        seen_ids.add(node.node_id)
        if isinstance(node, COMPOSITES) and not node.children:
            raise ValidationFailure(f"composite {node.node_id!r} has no children")
        if isinstance(node, Parallel):
            if not 1 <= node.success_threshold <= len(node.children):
                raise ValidationFailure(
                    f"parallel {node.node_id!r} threshold {node.success_threshold} "
                    f"outside [1, {len(node.children)}]"
                )
        if isinstance(node, DECORATORS) and node.child is None:
            raise ValidationFailure(f"decorator {node.node_id!r} has no child")
        if isinstance(node, Retry) and node.attempts < 1:
            raise ValidationFailure(f"retry {node.node_id!r} needs attempts >= 1")
        if isinstance(node, MemorySequenceMarker) and not isinstance(node.child, Sequence):
            raise ValidationFailure(
                f"memory marker {node.node_id!r} must wrap a sequence"
            )
        if registry is not None:
            if isinstance(node, Condition) and not registry.has_predicate(node.predicate_id):
                raise ValidationFailure(
                    f"condition {node.node_id!r}: unknown predicate {node.predicate_id!r}"
                )
            if isinstance(node, Action) and not registry.has_action(node.action_id):
                raise ValidationFailure(
                    f"action {node.node_id!r}: unknown action {node.action_id!r}"
                )


class LeafRegistryLike:
    """Protocol-ish base so validation does not import the leaf library."""

    def has_predicate(self, predicate_id: str) -> bool:  # pragma: no cover
        raise NotImplementedError

    def has_action(self, action_id: str) -> bool:  # pragma: no cover
        raise NotImplementedError
