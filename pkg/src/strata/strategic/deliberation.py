"""Utility-based plan choice over the agenda's top goal.

U = w_p * priority + w_s * est_success - w_c * est_cost with positive
weights; the argmax is invariant under positive scaling of the weight
vector. Ties break on ascending plan_id for determinism.
"""
from __future__ import annotations

from typing import Callable

from strata.strategic.types import (
    Agenda,
    Decision,
    DecisionKind,
    Goal,
    GoalStatus,
    Plan,
    UtilityScore,
)

DEFAULT_WEIGHTS = (0.5, 0.3, 0.2)

CandidateFn = Callable[[Goal], list[Plan]]


def deliberate(
    agenda: Agenda,
    enumerate_candidates: CandidateFn,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    seed: int = 0,
) -> Decision:
    """Score candidate plans for the top goal and pick the argmax.

    The seed is reserved for stochastic plan annotations; the shipped
    template library is fully deterministic and ignores it.
    """
    del seed
    top = agenda.top_actionable()
    if top is None:
        return Decision(kind=DecisionKind.IDLE)
    goal = top.goal

    previous_active = agenda.active()
    if previous_active is not None and previous_active is not top:
        previous_active.goal.set_status(GoalStatus.SUSPENDED)
    if goal.status is not GoalStatus.ACTIVE:
        goal.set_status(GoalStatus.ACTIVE)

    plans = enumerate_candidates(goal)
    if not plans:
        return Decision(kind=DecisionKind.NO_PLAN, goal_id=goal.goal_id)
    scores = [
        UtilityScore.compute(
            plan.plan_id, goal.priority, plan.est_success, plan.est_cost, weights
        )
        for plan in plans
    ]
    ranked = sorted(scores, key=lambda s: (-s.total, s.plan_id))
    chosen = ranked[0]
    plan = next(p for p in plans if p.plan_id == chosen.plan_id)
    top.candidate_plans = plans
    top.selected_plan_id = plan.plan_id
    agenda.resort()
    return Decision(
        kind=DecisionKind.STEP,
        goal_id=goal.goal_id,
        chosen_plan_id=plan.plan_id,
        step=plan.next_step(),
        candidates=scores,
    )


def assess_confidence(decision: Decision, epsilon: float = 1e-9) -> float:
    """1.0 for a singleton choice, else the relative margin of the winner
    over the runner-up, clamped to [0, 1]."""
    if not decision.candidates:
        raise ValueError("decision carries no candidate scores")
    if len(decision.candidates) == 1:
        return 1.0
    ranked = sorted(decision.candidates, key=lambda s: (-s.total, s.plan_id))
    top1, top2 = ranked[0], ranked[1]
    margin = (top1.total - top2.total) / max(abs(top1.total), epsilon)
    return max(0.0, min(1.0, margin))
