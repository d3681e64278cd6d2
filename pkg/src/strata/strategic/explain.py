"""Causal explanation rendered from the reasoning trace."""
from __future__ import annotations

from strata.strategic.types import Thought, ThoughtKind

VERB_WORDS = {
    "MOVE-TO": "move",
    "SEARCH-AREA": "search",
    "FIND-OBJECT": "find",
    "FETCH-OBJECT": "fetch",
    "PICK-UP": "pick up",
    "SCAN": "scan",
    "HOVER": "hover",
    "RETURN-TO-DOCK": "return to dock",
    "STOP": "stop",
    "REPORT": "report",
    "ASK": "ask",
}


class UnknownTarget(Exception):
    pass


def explain(target: str, trace: list[Thought]) -> str:
    """Narrate one goal's causal chain: who asked, what plan won and why,
    what was done, and how it ended. Accepts a goal_id or a thought_id."""
    goal_id = target
    if not any(t.structured_cause.get("goal_id") == target for t in trace):
        by_thought = next((t for t in trace if t.thought_id == target), None)
        if by_thought is None:
            raise UnknownTarget(f"{target!r} is not a goal or thought in the trace")
        goal_id = by_thought.structured_cause.get("goal_id", target)
    related = [t for t in trace if t.structured_cause.get("goal_id") == goal_id]
    if not related:
        raise UnknownTarget(f"{target!r} has no goal history in the trace")

    lines: list[str] = []
    for thought in related:
        cause = thought.structured_cause
        if thought.kind is ThoughtKind.GOAL_ADOPTED:
            requester = cause.get("requester", "self")
            source = cause.get("source_text")
            origin = f' after hearing "{source}"' if source else ""
            lines.append(
                f"Goal {goal_id} ({cause.get('concept')}) was adopted for "
                f"{str(requester).title()}{origin} at priority {cause.get('priority')}."
            )
        elif thought.kind is ThoughtKind.PLAN_SELECTED:
            candidates = cause.get("candidates", [])
            ranked = sorted(candidates, key=lambda c: (-c["total"], c["plan_id"]))
            chosen = ranked[0]
            why = (
                f"utility {chosen['total']:.4f} = {chosen['weights'][0]}*{chosen['priority_term']:.2f}"
                f" + {chosen['weights'][1]}*{chosen['success_term']:.2f}"
                f" - {chosen['weights'][2]}*{chosen['cost_term']:.2f}"
            )
            if len(ranked) > 1:
                why += f", beating {ranked[1]['plan_id']} at {ranked[1]['total']:.4f}"
            lines.append(f"Plan {cause.get('chosen')} was selected ({why}).")
        elif thought.kind is ThoughtKind.ACTION_ISSUED:
            verb = VERB_WORDS.get(str(cause.get("verb")), str(cause.get("verb")).lower())
            if cause.get("command_id"):
                lines.append(f"It issued a {verb} action ({cause['command_id']}).")
            else:
                lines.append(f"It chose to {verb}, saying {cause.get('utterance')!r}.")
        elif thought.kind is ThoughtKind.CONFIDENCE_ASSESSED:
            lines.append(f"Decision confidence was {cause.get('confidence'):.4f}.")
        elif thought.kind is ThoughtKind.REPORT_PROCESSED and cause.get("note"):
            lines.append(str(cause["note"]))
        elif thought.kind is ThoughtKind.GOAL_ACHIEVED:
            lines.append(f"The goal was achieved: {cause.get('note', 'plan complete')}.")
        elif thought.kind is ThoughtKind.GOAL_ABANDONED:
            lines.append(f"The goal was abandoned: {cause.get('reason')}.")
    return " ".join(lines)
