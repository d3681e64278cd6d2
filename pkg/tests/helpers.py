from __future__ import annotations

from strata.sim.types import Detection
from strata.tactical.blackboard import BtBlackboard
from strata.tactical.leaves import LeafRegistry
from strata.tactical.nodes import BtStatus

STATUS_BY_NAME = {
    "success": BtStatus.SUCCESS,
    "failure": BtStatus.FAILURE,
    "running": BtStatus.RUNNING,
}

OPEN_5X5 = "\n".join(
    [
        "#######",
        "#.....#",
        "#.....#",
        "#.....#",
        "#.....#",
        "#.....#",
        "#######",
    ]
)


def stub_registry() -> LeafRegistry:
    """Leaves whose statuses come from blackboard keys, for truth tables."""
    reg = LeafRegistry()

    def scripted_pred(ctx, bb, percepts, params) -> bool:
        return bb.get(f"internal/stub/{params['key']}") == "success"

    def scripted_action(ctx, bb, percepts, params):
        status = STATUS_BY_NAME[bb.get(f"internal/stub/{params['key']}", "running")]
        return status, None

    reg.register_predicate("stub_pred", scripted_pred)
    reg.register_action("stub", scripted_action)
    return reg


def make_blackboard(robot_id: str = "test-bot") -> BtBlackboard:
    return BtBlackboard(robot_id)


def percept(label: str, rng: float, bearing: float = 0.0, conf: float = 1.0, tick: int = 0) -> Detection:
    return Detection(label, conf, (rng, bearing), tick)
