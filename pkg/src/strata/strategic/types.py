"""Goal, plan, agenda and reasoning-trace data types."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from strata.kb.types import TMR


class GoalStatus(Enum):
    PENDING = "pending"
    ACTIVE = "active"
    SUSPENDED = "suspended"
    ACHIEVED = "achieved"
    ABANDONED = "abandoned"


_ALLOWED_TRANSITIONS = {
    GoalStatus.PENDING: {GoalStatus.ACTIVE, GoalStatus.ABANDONED},
    GoalStatus.ACTIVE: {GoalStatus.SUSPENDED, GoalStatus.ACHIEVED, GoalStatus.ABANDONED},
    GoalStatus.SUSPENDED: {GoalStatus.ACTIVE, GoalStatus.ABANDONED},
    GoalStatus.ACHIEVED: set(),
    GoalStatus.ABANDONED: set(),
}

TERMINAL_GOAL_STATUSES = {GoalStatus.ACHIEVED, GoalStatus.ABANDONED}


@dataclass
class Provenance:
    kind: str  # "from_utterance" | "self_generated"
    ref: str   # tmr_id or a reason string

    @classmethod
    def from_utterance(cls, tmr_id: str) -> "Provenance":
        return cls("from_utterance", tmr_id)

    @classmethod
    def self_generated(cls, reason: str) -> "Provenance":
        return cls("self_generated", reason)


@dataclass
class Goal:
    goal_id: str
    concept: str
    bindings: dict[str, str] = field(default_factory=dict)
    priority: float = 0.5
    status: GoalStatus = GoalStatus.PENDING
    provenance: Provenance = field(default_factory=lambda: Provenance.self_generated("unspecified"))
    progress: dict[str, Any] = field(default_factory=dict)
    tried_templates: list[str] = field(default_factory=list)
    needs_deliberation: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.priority <= 1.0:
            raise ValueError("goal priority must lie in [0, 1]")

    @property
    def terminal(self) -> bool:
        return self.status in TERMINAL_GOAL_STATUSES

    def set_status(self, new: GoalStatus) -> None:
        if new is self.status:
            return
        if new not in _ALLOWED_TRANSITIONS[self.status]:
            raise ValueError(f"goal {self.goal_id}: illegal {self.status.value} -> {new.value}")
        self.status = new

    @property
    def located(self) -> bool:
        return bool(self.progress.get("position"))

    def to_payload(self) -> dict[str, Any]:
        return {
            "goal_id": self.goal_id,
            "concept": self.concept,
            "bindings": dict(self.bindings),
            "priority": self.priority,
            "status": self.status.value,
            "provenance": {"kind": self.provenance.kind, "ref": self.provenance.ref},
        }


class StepState(Enum):
    NOT_STARTED = "not_started"
    ISSUED = "issued"
    DONE = "done"
    FAILED = "failed"


_STEP_ORDER = [StepState.NOT_STARTED, StepState.ISSUED, StepState.DONE, StepState.FAILED]

COMMUNICATIVE_CONCEPTS = ("REPORT", "ASK")


@dataclass
class PlanStep:
    concept: str
    bindings: dict[str, Any] = field(default_factory=dict)
    assigned_to: str = ""
    state: StepState = StepState.NOT_STARTED

    def advance(self, new: StepState) -> None:
        if _STEP_ORDER.index(new) < _STEP_ORDER.index(self.state):
            raise ValueError(f"step state may not move backwards ({self.state} -> {new})")
        self.state = new

    @property
    def communicative(self) -> bool:
        return self.concept in COMMUNICATIVE_CONCEPTS

    def to_payload(self) -> dict[str, Any]:
        return {
            "concept": self.concept,
            "bindings": {k: list(v) if isinstance(v, tuple) else v for k, v in self.bindings.items()},
            "assigned_to": self.assigned_to,
            "state": self.state.value,
        }


@dataclass
class Plan:
    plan_id: str
    goal_id: str
    steps: list[PlanStep]
    est_cost: float = 0.0
    est_success: float = 0.5
    template: str = ""

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("plan must have at least one step")
        if not 0.0 <= self.est_success <= 1.0 or self.est_cost < 0.0:
            raise ValueError("plan estimates out of range")

    def next_step(self) -> PlanStep | None:
        for step in self.steps:
            if step.state is StepState.NOT_STARTED:
                return step
        return None

    def outstanding(self) -> PlanStep | None:
        for step in self.steps:
            if step.state is StepState.ISSUED:
                return step
        return None

    def complete(self) -> bool:
        return all(step.state is StepState.DONE for step in self.steps)

    def to_payload(self) -> dict[str, Any]:
        return {
            "plan_id": self.plan_id,
            "goal_id": self.goal_id,
            "template": self.template,
            "est_cost": self.est_cost,
            "est_success": self.est_success,
            "steps": [s.to_payload() for s in self.steps],
        }


@dataclass
class UtilityScore:
    plan_id: str
    priority_term: float
    success_term: float
    cost_term: float
    weights: tuple[float, float, float]
    total: float

    @classmethod
    def compute(
        cls, plan_id: str, priority: float, success: float, cost: float,
        weights: tuple[float, float, float],
    ) -> "UtilityScore":
        w_p, w_s, w_c = weights
        if min(weights) <= 0.0:
            raise ValueError("utility weights must be positive")
        total = w_p * priority + w_s * success - w_c * cost
        return cls(plan_id, priority, success, cost, weights, total)

    def check_identity(self, tolerance: float = 1e-12) -> bool:
        w_p, w_s, w_c = self.weights
        expected = w_p * self.priority_term + w_s * self.success_term - w_c * self.cost_term
        return abs(expected - self.total) <= tolerance

    def to_payload(self) -> dict[str, Any]:
        return {
            "plan_id": self.plan_id,
            "priority_term": self.priority_term,
            "success_term": self.success_term,
            "cost_term": self.cost_term,
            "weights": list(self.weights),
            "total": self.total,
        }


@dataclass
class AgendaEntry:
    goal: Goal
    candidate_plans: list[Plan] = field(default_factory=list)
    selected_plan_id: str | None = None

    def selected_plan(self) -> Plan | None:
        for plan in self.candidate_plans:
            if plan.plan_id == self.selected_plan_id:
                return plan
        return None


class Agenda:
    """Priority-ordered goals; at most one Active goal (single focus)."""

    def __init__(self) -> None:
        self.entries: list[AgendaEntry] = []

    def add(self, goal: Goal) -> AgendaEntry:
        entry = AgendaEntry(goal=goal)
        self.entries.append(entry)
        self.resort()
        return entry

    def resort(self) -> None:
        self.entries.sort(key=lambda e: (-e.goal.priority, e.goal.goal_id))

    def entry_for(self, goal_id: str) -> AgendaEntry | None:
        for entry in self.entries:
            if entry.goal.goal_id == goal_id:
                return entry
        return None

    def active(self) -> AgendaEntry | None:
        for entry in self.entries:
            if entry.goal.status is GoalStatus.ACTIVE:
                return entry
        return None

    def top_actionable(self) -> AgendaEntry | None:
        for entry in self.entries:
            if entry.goal.status in (GoalStatus.PENDING, GoalStatus.ACTIVE, GoalStatus.SUSPENDED):
                return entry
        return None

    def open_goals(self) -> list[Goal]:
        return [e.goal for e in self.entries if not e.goal.terminal]

    def check_invariants(self) -> None:
        keys = [(-e.goal.priority, e.goal.goal_id) for e in self.entries]
        if keys != sorted(keys):
            raise AssertionError("agenda ordering invariant violated")
        active = [e for e in self.entries if e.goal.status is GoalStatus.ACTIVE]
        if len(active) > 1:
            raise AssertionError("more than one active goal")


class ThoughtKind(Enum):
    GOAL_ADOPTED = "goal_adopted"
    PLAN_SELECTED = "plan_selected"
    ACTION_ISSUED = "action_issued"
    REPORT_PROCESSED = "report_processed"
    GOAL_ACHIEVED = "goal_achieved"
    GOAL_ABANDONED = "goal_abandoned"
    CONFIDENCE_ASSESSED = "confidence_assessed"


@dataclass
class Thought:
    thought_id: str
    tick: int
    kind: ThoughtKind
    structured_cause: dict[str, Any]
    rendered_text: str = ""

    def to_payload(self) -> dict[str, Any]:
        return {
            "thought_id": self.thought_id,
            "tick": self.tick,
            "kind": self.kind.value,
            "structured_cause": self.structured_cause,
            "rendered_text": self.rendered_text,
        }


class DecisionKind(Enum):
    IDLE = "idle"
    STEP = "step"
    NO_PLAN = "no_plan"


@dataclass
class Decision:
    kind: DecisionKind
    goal_id: str | None = None
    chosen_plan_id: str | None = None
    step: PlanStep | None = None
    candidates: list[UtilityScore] = field(default_factory=list)


@dataclass
class Utterance:
    speaker: str
    addressee: str
    text: str
    meaning: TMR
    tick: int = 0
