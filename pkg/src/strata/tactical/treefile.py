"""Declarative tree description files.

One node per line, two-space indentation encodes depth:

    <kind> <node_id> [key=value ...]

Kinds: ``sequence``, ``selector``, ``parallel`` (``threshold=N``),
``condition`` (``pred=<predicate_id>`` plus params), ``action``
(``do=<action_id>`` plus params), ``inverter``, ``retry``
(``attempts=N``), ``memseq``. Blank lines and ``#`` comments are
ignored. Values parse as int, float, ``true``/``false``, a
comma-separated float tuple, or a bare string, in that order.
"""
from __future__ import annotations

from typing import Any

from strata.tactical.nodes import (
    Action,
    BtNode,
    Condition,
    Inverter,
    MemorySequenceMarker,
    Parallel,
    Retry,
    Selector,
    Sequence,
    children_of,
    validate_tree,
)

INDENT = 2


class TreeParseError(Exception):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"tree file line {line_no}: {message}")
        self.line_no = line_no


def parse_value(raw: str) -> Any:
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if "," in raw:
        try:
            return tuple(float(part) for part in raw.split(","))
        except ValueError:
            pass
    return raw


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def parse_tree(text: str) -> BtNode:
    """Parse a tree description; raises TreeParseError with line numbers."""
    stack: list[tuple[int, BtNode]] = []
    root: BtNode | None = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent_chars = len(stripped) - len(stripped.lstrip(" "))
        if indent_chars % INDENT != 0:
            raise TreeParseError(line_no, f"indentation of {indent_chars} is not a multiple of {INDENT}")
        depth = indent_chars // INDENT
        parts = stripped.split()
        if len(parts) < 2:
            raise TreeParseError(line_no, "expected '<kind> <node_id> [key=value ...]'")
        kind, node_id = parts[0], parts[1]
        attrs: dict[str, Any] = {}
        for token in parts[2:]:
            if "=" not in token:
                raise TreeParseError(line_no, f"malformed attribute {token!r}")
            key, raw_value = token.split("=", 1)
            attrs[key] = parse_value(raw_value)
        node = _make_node(kind, node_id, attrs, line_no)

        if depth == 0:
            if root is not None:
                raise TreeParseError(line_no, "multiple root nodes")
            root = node
            stack = [(0, node)]
            continue
        while stack and stack[-1][0] >= depth:
            stack.pop()
        if not stack or stack[-1][0] != depth - 1:
            raise TreeParseError(line_no, f"node at depth {depth} has no parent")
        _attach(stack[-1][1], node, line_no)
        stack.append((depth, node))
    if root is None:
        raise TreeParseError(1, "empty tree file")
    validate_tree(root)
    return root


def load_tree(path: str) -> BtNode:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_tree(fh.read())


def _make_node(kind: str, node_id: str, attrs: dict[str, Any], line_no: int) -> BtNode:
    if kind == "sequence":
        return Sequence(node_id=node_id)
    if kind == "selector":
        return Selector(node_id=node_id)
    if kind == "parallel":
        if "threshold" not in attrs:
            raise TreeParseError(line_no, "parallel needs threshold=N")
        return Parallel(node_id=node_id, success_threshold=int(attrs["threshold"]))
    if kind == "condition":
        pred = attrs.pop("pred", None)
        if not pred:
            raise TreeParseError(line_no, "condition needs pred=<predicate_id>")
        return Condition(node_id=node_id, predicate_id=str(pred), params=attrs)
    if kind == "action":
        action_id = attrs.pop("do", None)
        if not action_id:
            raise TreeParseError(line_no, "action needs do=<action_id>")
        return Action(node_id=node_id, action_id=str(action_id), params=attrs)
    if kind == "inverter":
        return Inverter(node_id=node_id)
    if kind == "retry":
        return Retry(node_id=node_id, attempts=int(attrs.get("attempts", 1)))
    if kind == "memseq":
        return MemorySequenceMarker(node_id=node_id)
    raise TreeParseError(line_no, f"unknown node kind {kind!r}")


def _attach(parent: BtNode, child: BtNode, line_no: int) -> None:
    if isinstance(parent, (Sequence, Selector, Parallel)):
        parent.children.append(child)
    elif isinstance(parent, (Inverter, Retry, MemorySequenceMarker)):
        if parent.child is not None:
            raise TreeParseError(line_no, f"decorator {parent.node_id!r} already has a child")
        parent.child = child
    else:
        raise TreeParseError(line_no, f"leaf {parent.node_id!r} cannot have children")


def dump_tree(root: BtNode) -> str:
    """Inverse of parse_tree for the shipped tree files."""
    lines: list[str] = []

    def emit(node: BtNode, depth: int) -> None:
        pad = " " * (INDENT * depth)
        if isinstance(node, Sequence):
            lines.append(f"{pad}sequence {node.node_id}")
        elif isinstance(node, Selector):
            lines.append(f"{pad}selector {node.node_id}")
        elif isinstance(node, Parallel):
            lines.append(f"{pad}parallel {node.node_id} threshold={node.success_threshold}")
        elif isinstance(node, Condition):
            attrs = "".join(f" {k}={format_value(v)}" for k, v in sorted(node.params.items()))
            lines.append(f"{pad}condition {node.node_id} pred={node.predicate_id}{attrs}")
        elif isinstance(node, Action):
            attrs = "".join(f" {k}={format_value(v)}" for k, v in sorted(node.params.items()))
            lines.append(f"{pad}action {node.node_id} do={node.action_id}{attrs}")
        elif isinstance(node, Inverter):
            lines.append(f"{pad}inverter {node.node_id}")
        elif isinstance(node, Retry):
            lines.append(f"{pad}retry {node.node_id} attempts={node.attempts}")
        elif isinstance(node, MemorySequenceMarker):
            lines.append(f"{pad}memseq {node.node_id}")
        for child in children_of(node):
            emit(child, depth + 1)

    emit(root, 0)
    return "\n".join(lines) + "\n"
