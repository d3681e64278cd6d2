"""Downlink (Command) and uplink (Report) message types."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

COMMAND_VERBS = (
    "MOVE-TO",
    "SEARCH-AREA",
    "PICK-UP",
    "SCAN",
    "HOVER",
    "RETURN-TO-DOCK",
    "STOP",
)


class ReportKind(Enum):
    ACK = "ack"
    PROGRESS = "progress"
    SUCCESS = "success"
    FAILURE = "failure"
    PREEMPTED = "preempted"
    EXPIRED = "expired"
    SAFETY_EVENT = "safety_event"
    PERCEPT_BATCH = "percept_batch"


TERMINAL_REPORT_KINDS = frozenset(
    {ReportKind.SUCCESS, ReportKind.FAILURE, ReportKind.PREEMPTED, ReportKind.EXPIRED}
)


@dataclass
class Command:
    """One high-level directive travelling strategic -> tactical."""

    command_id: str
    robot_id: str
    verb: str
    params: dict[str, Any] = field(default_factory=dict)
    priority: float = 0.5
    issued_tick: int = 0
    deadline_ticks: int | None = None

    def __post_init__(self) -> None:
        if self.verb not in COMMAND_VERBS:
            raise ValueError(f"unknown command verb {self.verb!r}")
        if not 0.0 <= self.priority <= 1.0:
            raise ValueError("command priority must lie in [0, 1]")

    def to_payload(self) -> dict[str, Any]:
        return {
            "command_id": self.command_id,
            "robot_id": self.robot_id,
            "verb": self.verb,
            "params": _plain(self.params),
            "priority": self.priority,
            "issued_tick": self.issued_tick,
            "deadline_ticks": self.deadline_ticks,
        }


@dataclass
class Report:
    """One status/percept message travelling tactical -> strategic."""

    report_id: str
    kind: ReportKind
    tick: int
    command_id: str | None = None
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def terminal(self) -> bool:
        return self.kind in TERMINAL_REPORT_KINDS

    def __post_init__(self) -> None:
        if self.kind is ReportKind.PROGRESS:
            frac = self.data.get("fraction")
            if not isinstance(frac, (int, float)) or not 0.0 <= frac <= 1.0:
                raise ValueError("progress report needs fraction in [0, 1]")

    def to_payload(self) -> dict[str, Any]:
        return {
            "report_id": self.report_id,
            "kind": self.kind.value,
            "tick": self.tick,
            "command_id": self.command_id,
            "data": _plain(self.data),
        }


def _plain(value: Any) -> Any:
    """Recursively coerce message payloads to JSON-encodable primitives."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if hasattr(value, "to_payload"):
        return value.to_payload()
    return value
