"""Standard robot tree assembly: safety first, then commands, then idle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from strata.bus.messages import COMMAND_VERBS
from strata.tactical.nodes import (
    Action,
    BtNode,
    Condition,
    Selector,
    Sequence,
    ValidationFailure,
    validate_tree,
)

UGV_VERBS = ("MOVE-TO", "SEARCH-AREA", "PICK-UP", "SCAN", "RETURN-TO-DOCK", "STOP")
DRONE_VERBS = ("MOVE-TO", "SEARCH-AREA", "SCAN", "HOVER", "RETURN-TO-DOCK", "STOP")

VERB_ACTIONS = {
    "MOVE-TO": "do_move_to",
    "SEARCH-AREA": "do_search_area",
    "PICK-UP": "do_pick_up",
    "SCAN": "do_scan",
    "HOVER": "do_hover",
    "RETURN-TO-DOCK": "do_return_to_dock",
    "STOP": "do_stop",
}


@dataclass
class SafetyRule:
    """One prioritized reflex: a condition and the subtree it triggers."""

    name: str
    predicate_id: str
    params: dict[str, Any]
    response: BtNode


@dataclass
class RobotKindProfile:
    """The slice of an agent profile the tree builder needs."""

    agent_id: str
    kind: str  # "UGV" | "Drone"
    skills: list[str] = field(default_factory=list)

    def supported_verbs(self) -> list[str]:
        wanted = set(self.skills) & set(COMMAND_VERBS)
        order = UGV_VERBS if self.kind == "UGV" else DRONE_VERBS
        return [v for v in order if v in wanted] or list(order)


def default_safety_spec(
    kind: str,
    obstacle_radius: float = 0.18,
    battery_reserve: float = 0.15,
    min_altitude: float = 0.5,
) -> list[SafetyRule]:
    battery = SafetyRule(
        name="battery",
        predicate_id="safety/battery_below",
        params={"threshold": battery_reserve},
        response=Action(node_id="safety_act_battery", action_id="safety_dock"),
    )
    if kind == "UGV":
        return [
            SafetyRule(
                name="obstacle",
                predicate_id="safety/obstacle_within_radius",
                params={"radius": obstacle_radius},
                response=Action(node_id="safety_act_obstacle", action_id="safety_stop"),
            ),
            battery,
        ]
    return [
        SafetyRule(
            name="altitude",
            predicate_id="safety/altitude_below",
            params={"min_z": min_altitude},
            response=Action(node_id="safety_act_altitude", action_id="safety_climb"),
        ),
        battery,
    ]


def build_robot_tree(
    profile: RobotKindProfile, safety_spec: list[SafetyRule]
) -> BtNode:
    """Root selector: safety rules in spec order, the command-execution
    subtree, then an idle fallback. Raises ValidationFailure when the
    mandatory reflexes for the robot kind are missing."""
    if not safety_spec:
        raise ValidationFailure("safety_spec must not be empty")
    names = {rule.name for rule in safety_spec}
    if profile.kind == "UGV" and "obstacle" not in names:
        raise ValidationFailure("UGV requires an 'obstacle' collision-avoidance rule")
    if profile.kind == "Drone" and not {"altitude", "battery"} <= names:
        raise ValidationFailure("Drone requires 'altitude' and 'battery' rules")

    children: list[BtNode] = []
    for i, rule in enumerate(safety_spec):
        children.append(
            Sequence(
                node_id=f"safety_{i}_{rule.name}",
                children=[
                    Condition(
                        node_id=f"safety_cond_{rule.name}",
                        predicate_id=rule.predicate_id,
                        params=dict(rule.params),
                    ),
                    rule.response,
                ],
            )
        )
    children.append(_command_subtree(profile))
    children.append(Action(node_id="idle", action_id="idle"))
    root = Selector(node_id="root", children=children)
    validate_tree(root)
    return root


def _command_subtree(profile: RobotKindProfile) -> BtNode:
    branches: list[BtNode] = []
    for verb in profile.supported_verbs():
        slug = verb.lower().replace("-", "_")
        branches.append(
            Sequence(
                node_id=f"cmd_{slug}",
                children=[
                    Condition(
                        node_id=f"is_{slug}",
                        predicate_id="verb_is",
                        params={"verb": verb},
                    ),
                    Action(node_id=f"act_{slug}", action_id=VERB_ACTIONS[verb]),
                ],
            )
        )
    return Sequence(
        node_id="cmd_guard",
        children=[
            Condition(node_id="cmd_present", predicate_id="has_command"),
            Selector(node_id="cmd_dispatch", children=branches),
        ],
    )
