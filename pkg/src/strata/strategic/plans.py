"""Plan template library: parameterized plan skeletons per goal concept.

Template file grammar (one entry per unindented ``template`` header)::

    template sweep-assigned
      concepts FIND-OBJECT FETCH-OBJECT
      kinds UGV Drone
      phase search            # search | located | any
      success 0.75
      cost sweep_assigned     # one of the registered cost heuristics
      step SEARCH-AREA room=@assigned_rooms

Step values starting with ``@`` are binders resolved against the goal
and the robot's context at enumeration time; a list-valued binder
replicates its step once per element.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from strata.strategic.types import Goal, Plan, PlanStep
from strata.tactical.treefile import parse_value

COST_NORM_SECONDS = 180.0


class PlanTemplateError(Exception):
    def __init__(self, path: str, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")


class NoBinding(Exception):
    """A binder could not be resolved for this goal/context."""


@dataclass
class StepSpec:
    concept: str
    bindings: dict[str, Any]


@dataclass
class PlanTemplate:
    name: str
    concepts: list[str]
    kinds: list[str]
    phase: str  # search | located | any
    est_success: float
    cost_fn: str
    steps: list[StepSpec] = field(default_factory=list)


def parse_templates(text: str, path: str = "<plans>") -> list[PlanTemplate]:
    templates: list[PlanTemplate] = []
    current: PlanTemplate | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = line.split()
        if not line.startswith(" "):
            if tokens[0] != "template" or len(tokens) != 2:
                raise PlanTemplateError(path, line_no, "expected 'template <name>'")
            current = PlanTemplate(
                name=tokens[1], concepts=[], kinds=[], phase="any",
                est_success=0.5, cost_fn="comm_only",
            )
            templates.append(current)
            continue
        if current is None:
            raise PlanTemplateError(path, line_no, "field before any template header")
        if tokens[0] == "concepts" and len(tokens) >= 2:
            current.concepts = tokens[1:]
        elif tokens[0] == "kinds" and len(tokens) >= 2:
            current.kinds = tokens[1:]
        elif tokens[0] == "phase" and len(tokens) == 2:
            if tokens[1] not in ("search", "located", "any"):
                raise PlanTemplateError(path, line_no, f"unknown phase {tokens[1]!r}")
            current.phase = tokens[1]
        elif tokens[0] == "success" and len(tokens) == 2:
            current.est_success = float(tokens[1])
        elif tokens[0] == "cost" and len(tokens) == 2:
            current.cost_fn = tokens[1]
        elif tokens[0] == "step" and len(tokens) >= 2:
            bindings: dict[str, Any] = {}
            for tok in tokens[2:]:
                if "=" not in tok:
                    raise PlanTemplateError(path, line_no, f"malformed step binding {tok!r}")
                key, value = tok.split("=", 1)
                bindings[key] = value if value.startswith("@") else parse_value(value)
            current.steps.append(StepSpec(concept=tokens[1], bindings=bindings))
        else:
            raise PlanTemplateError(path, line_no, f"unknown template field {tokens[0]!r}")
    for template in templates:
        if not template.steps:
            raise PlanTemplateError(path, 0, f"template {template.name}: no steps")
        if not template.concepts:
            raise PlanTemplateError(path, 0, f"template {template.name}: no concepts")
    return templates


def load_templates(path: str | Path) -> list[PlanTemplate]:
    p = Path(path)
    return parse_templates(p.read_text(encoding="utf-8"), str(p))


@dataclass
class PlanContext:
    """World knowledge the library parameterizes templates with."""

    self_id: str
    kind: str
    v_max: float
    sweep_spacing: float
    rooms: dict[str, tuple[float, float, float, float]]
    robot_speeds: dict[str, float]
    agent_positions: dict[str, tuple[float, float]]
    self_position: tuple[float, float]

    def room_centroid(self, name: str) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rooms[name]
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    def room_area(self, name: str) -> float:
        x0, y0, x1, y1 = self.rooms[name]
        return (x1 - x0) * (y1 - y0)

    def room_of_point(self, x: float, y: float) -> str | None:
        for name, (x0, y0, x1, y1) in self.rooms.items():
            if x0 <= x < x1 and y0 <= y < y1:
                return name
        return None

    def assigned_rooms(self) -> list[str]:
        """Deterministic division of labor: each room goes to the robot
        that reaches it fastest (everyone computes the same split)."""
        mine: list[str] = []
        for room in sorted(self.rooms):
            cx, cy = self.room_centroid(room)
            best: tuple[float, str] | None = None
            for rid in sorted(self.robot_speeds):
                pos = self.agent_positions.get(rid)
                if pos is None:
                    continue
                t = math.hypot(cx - pos[0], cy - pos[1]) / max(0.1, self.robot_speeds[rid])
                if best is None or (t, rid) < best:
                    best = (t, rid)
            if best is not None and best[1] == self.self_id:
                mine.append(room)
        return self._order_by_distance(mine)

    def all_rooms(self) -> list[str]:
        return self._order_by_distance(sorted(self.rooms))

    def _order_by_distance(self, names: list[str]) -> list[str]:
        sx, sy = self.self_position
        return sorted(
            names, key=lambda n: (math.hypot(self.room_centroid(n)[0] - sx,
                                             self.room_centroid(n)[1] - sy), n)
        )


# -- binders ---------------------------------------------------------------


def _bind(name: str, goal: Goal, ctx: PlanContext) -> Any:
    if name == "@assigned_rooms":
        rooms = ctx.assigned_rooms()
        if not rooms:
            raise NoBinding("no rooms assigned to this robot")
        return rooms
    if name == "@all_rooms":
        rooms = ctx.all_rooms()
        if not rooms:
            raise NoBinding("no rooms in scenario")
        return rooms
    if name == "@found_position":
        position = goal.progress.get("position")
        if not position:
            raise NoBinding("object position unknown")
        return tuple(position)
    if name == "@found_instance":
        return str(goal.progress.get("instance", ""))
    if name == "@requester_position":
        requester = goal.bindings.get("requester", "")
        position = ctx.agent_positions.get(requester)
        if position is None:
            raise NoBinding(f"unknown requester position for {requester!r}")
        return position
    if name == "@theme_room":
        theme = goal.bindings.get("theme", "")
        room = theme.lower().replace("-", " ").replace(" ", "-")
        if room not in ctx.rooms:
            raise NoBinding(f"theme {theme!r} is not a known room")
        return room
    if name == "@theme_room_centroid":
        return ctx.room_centroid(_bind("@theme_room", goal, ctx))
    raise NoBinding(f"unknown binder {name!r}")


# -- cost heuristics (rough seconds, normalized by COST_NORM_SECONDS) --------


def _sweep_seconds(ctx: PlanContext, rooms: list[str]) -> float:
    total = 0.0
    x, y = ctx.self_position
    for room in rooms:
        cx, cy = ctx.room_centroid(room)
        total += math.hypot(cx - x, cy - y) / max(0.1, ctx.v_max)
        total += ctx.room_area(room) / (ctx.sweep_spacing * max(0.1, ctx.v_max)) * 1.4
        x, y = cx, cy
    return total


def _cost_seconds(name: str, goal: Goal, ctx: PlanContext) -> float:
    if name == "sweep_assigned":
        return _sweep_seconds(ctx, ctx.assigned_rooms())
    if name == "sweep_all":
        return _sweep_seconds(ctx, ctx.all_rooms())
    if name == "fixed_short":
        return 15.0
    if name == "comm_only":
        return 1.0
    if name == "retrieve":
        position = goal.progress.get("position") or ctx.self_position
        d = math.hypot(position[0] - ctx.self_position[0], position[1] - ctx.self_position[1])
        return 2.0 * d / max(0.1, ctx.v_max) + 10.0
    if name == "retrieve_deliver":
        position = goal.progress.get("position") or ctx.self_position
        requester = ctx.agent_positions.get(goal.bindings.get("requester", ""), ctx.self_position)
        d1 = math.hypot(position[0] - ctx.self_position[0], position[1] - ctx.self_position[1])
        d2 = math.hypot(requester[0] - position[0], requester[1] - position[1])
        return (d1 + d2) / max(0.1, ctx.v_max) + 15.0
    if name == "go_direct":
        return 10.0
    raise PlanTemplateError("<plans>", 0, f"unknown cost heuristic {name!r}")


class PlanLibrary:
    """Enumerates candidate plans for a goal from the loaded templates."""

    def __init__(self, templates: list[PlanTemplate], ctx: PlanContext) -> None:
        self.templates = templates
        self.ctx = ctx
        self._plan_seq = 0

    def enumerate(self, goal: Goal) -> list[Plan]:
        phase = "located" if goal.located else "search"
        plans: list[Plan] = []
        for template in self.templates:
            if goal.concept not in template.concepts:
                continue
            if template.kinds and self.ctx.kind not in template.kinds:
                continue
            if template.phase not in ("any", phase):
                continue
            if template.name in goal.tried_templates:
                continue
            try:
                steps = self._expand_steps(template, goal)
            except NoBinding:
                continue
            cost = min(1.0, _cost_seconds(template.cost_fn, goal, self.ctx) / COST_NORM_SECONDS)
            plans.append(
                Plan(
                    plan_id=f"{goal.goal_id}:{template.name}",
                    goal_id=goal.goal_id,
                    steps=steps,
                    est_cost=cost,
                    est_success=template.est_success,
                    template=template.name,
                )
            )
        plans.sort(key=lambda p: p.plan_id)
        return plans

    def _expand_steps(self, template: PlanTemplate, goal: Goal) -> list[PlanStep]:
        steps: list[PlanStep] = []
        for spec in template.steps:
            resolved: dict[str, Any] = {}
            repeat_key: str | None = None
            repeat_values: list[Any] = []
            for key, value in spec.bindings.items():
                if isinstance(value, str) and value.startswith("@"):
                    bound = _bind(value, goal, self.ctx)
                    if isinstance(bound, list):
                        if repeat_key is not None:
                            raise NoBinding("only one list binder per step")
                        repeat_key, repeat_values = key, bound
                    else:
                        resolved[key] = bound
                else:
                    resolved[key] = value
            if repeat_key is None:
                steps.append(PlanStep(spec.concept, resolved, assigned_to=self.ctx.self_id))
            else:
                for item in repeat_values:
                    bindings = dict(resolved)
                    bindings[repeat_key] = item
                    steps.append(PlanStep(spec.concept, bindings, assigned_to=self.ctx.self_id))
        if not steps:
            raise NoBinding("template expanded to zero steps")
        return steps
