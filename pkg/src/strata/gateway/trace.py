"""Append-only JSONL run trace and the post-hoc invariant audit.

One event per line: ``{"kind", "tick", "source", "payload"}`` with a
single header line carrying the run metadata (the only place wall-clock
time appears, so trace bodies byte-compare across runs).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterator

TERMINAL_REPORT_VALUES = {"success", "failure", "preempted", "expired"}


class TracePersistenceError(Exception):
    pass


def _dumps(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class TraceWriter:
    def __init__(self, path: str | Path, metadata: dict[str, Any]) -> None:
        self.path = Path(path)
        self.listeners: list[Callable[[dict[str, Any]], None]] = []
        try:
            self._fh = open(self.path, "w", encoding="utf-8")
            header = {
                "kind": "header",
                "generated_at": datetime.now(timezone.utc).isoformat(),
                **metadata,
            }
            self._fh.write(_dumps(header) + "\n")
        except OSError as exc:
            raise TracePersistenceError(str(exc)) from exc

    def append(self, tick: int, source: str, kind: str, payload: dict[str, Any]) -> dict[str, Any]:
        event = {"kind": kind, "tick": tick, "source": source, "payload": payload}
        try:
            self._fh.write(_dumps(event) + "\n")
        except OSError as exc:  # pragma: no cover - disk faults
            raise TracePersistenceError(str(exc)) from exc
        for listener in self.listeners:
            listener(event)
        return event

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


def read_trace(path: str | Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    header: dict[str, Any] = {}
    events: list[dict[str, Any]] = []
    for obj in iter_trace(path):
        if obj.get("kind") == "header":
            header = obj
        else:
            events.append(obj)
    return header, events


def iter_trace(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def trace_body(path: str | Path) -> str:
    """Everything after the header line; the determinism comparand."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    return "\n".join(lines[1:])


def thoughts_from_trace(path: str | Path, source: str | None = None):
    """Rebuild Thought objects from a persisted trace, optionally for one
    robot; the input to post-hoc explanation."""
    from strata.strategic.types import Thought, ThoughtKind

    thoughts = []
    for event in iter_trace(path):
        if event.get("kind") != "thought":
            continue
        if source is not None and event.get("source") != source:
            continue
        payload = event["payload"]
        thoughts.append(
            Thought(
                thought_id=payload["thought_id"],
                tick=payload["tick"],
                kind=ThoughtKind(payload["kind"]),
                structured_cause=payload["structured_cause"],
                rendered_text=payload.get("rendered_text", ""),
            )
        )
    return thoughts


def goal_ids_in_trace(path: str | Path) -> list[str]:
    """Every goal mentioned by any thought, in first-mention order."""
    seen: list[str] = []
    for event in iter_trace(path):
        if event.get("kind") != "thought":
            continue
        goal_id = event["payload"].get("structured_cause", {}).get("goal_id")
        if goal_id and goal_id not in seen:
            seen.append(goal_id)
    return seen


@dataclass
class AuditReport:
    violations: list[str] = field(default_factory=list)
    commands_seen: int = 0
    events_seen: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_trace(path: str | Path) -> AuditReport:
    """Re-checks cross-module invariants over a persisted run trace:
    tick monotonicity, exactly one terminal report per command, the
    issued-step<->command bijection, progress monotonicity, and the
    exactness/completeness of every plan-selection thought."""
    report = AuditReport()
    last_tick = -1
    commands: dict[str, dict[str, Any]] = {}
    terminals: dict[str, list[str]] = {}
    progress: dict[str, float] = {}
    issued_command_ids: list[str] = []
    for event in iter_trace(path):
        if event.get("kind") == "header":
            continue
        report.events_seen += 1
        tick = event.get("tick", -1)
        if tick < last_tick:
            report.violations.append(
                f"tick monotonicity: {tick} after {last_tick} ({event.get('kind')})"
            )
        last_tick = max(last_tick, tick)
        kind = event.get("kind")
        payload = event.get("payload", {})
        if kind == "command":
            cid = payload.get("command_id")
            if cid in commands:
                report.violations.append(f"duplicate command id {cid}")
            commands[cid] = payload
        elif kind == "report":
            cid = payload.get("command_id")
            rk = payload.get("kind")
            if rk in TERMINAL_REPORT_VALUES and cid:
                terminals.setdefault(cid, []).append(rk)
            if rk == "progress" and cid:
                frac = payload.get("data", {}).get("fraction", 0.0)
                if frac + 1e-9 < progress.get(cid, 0.0):
                    report.violations.append(
                        f"progress regression on {cid}: {frac} after {progress[cid]}"
                    )
                progress[cid] = max(progress.get(cid, 0.0), frac)
        elif kind == "thought":
            t_kind = payload.get("kind")
            cause = payload.get("structured_cause", {})
            if t_kind == "action_issued" and cause.get("command_id"):
                issued_command_ids.append(cause["command_id"])
            if t_kind == "plan_selected":
                _audit_plan_selected(cause, payload.get("thought_id", "?"), report)
    report.commands_seen = len(commands)

    for cid in commands:
        kinds = terminals.get(cid, [])
        if len(kinds) != 1:
            report.violations.append(
                f"command {cid}: {len(kinds)} terminal reports ({kinds or 'none'})"
            )
    for cid in terminals:
        if cid not in commands:
            report.violations.append(f"terminal report for unknown command {cid}")

    issued_set = set(issued_command_ids)
    if len(issued_set) != len(issued_command_ids):
        report.violations.append("a command id was issued by more than one step")
    for cid in commands:
        if cid not in issued_set:
            report.violations.append(f"command {cid} has no issuing step thought")
    for cid in issued_set:
        if cid not in commands:
            report.violations.append(f"issued step references unsent command {cid}")
    return report


def _audit_plan_selected(cause: dict[str, Any], thought_id: str, report: AuditReport) -> None:
    candidates = cause.get("candidates", [])
    chosen = cause.get("chosen")
    if not candidates:
        report.violations.append(f"plan_selected {thought_id}: empty candidate list")
        return
    if chosen not in {c.get("plan_id") for c in candidates}:
        report.violations.append(f"plan_selected {thought_id}: chosen plan not among candidates")
    for cand in candidates:
        w = cand.get("weights", [])
        try:
            expected = w[0] * cand["priority_term"] + w[1] * cand["success_term"] - w[2] * cand["cost_term"]
        except (IndexError, KeyError, TypeError):
            report.violations.append(f"plan_selected {thought_id}: malformed utility {cand}")
            continue
        if abs(expected - cand.get("total", float("nan"))) > 1e-12:
            report.violations.append(
                f"plan_selected {thought_id}: utility identity violated for {cand.get('plan_id')}"
            )
