"""Template realization of meaning structures into English.

TMR templates are keyed by (speech_act, head concept) and are written
so the analyzer grammar parses their output back to the same speech
act, head and theme (round-trip property). Reasoning-trace records are
rendered one-way from their structured cause.
"""
from __future__ import annotations

from typing import Any, Callable

from strata.kb.kbase import Kb
from strata.kb.types import TMR


class NoTemplate(Exception):
    pass


def _np(kb: Kb, concept: str | None, owner: str | None = None) -> str:
    if concept is None:
        raise NoTemplate("template requires a theme binding")
    label = kb.label_for_concept(concept)
    if owner:
        return f"{owner.title()}'s {label}"
    return f"the {label}"


def _be(kb: Kb, concept: str) -> str:
    return "are" if kb.noun_is_plural(concept) else "is"


def _t_request_find(tmr: TMR, kb: Kb) -> str:
    return f"Please find {_np(kb, tmr.bindings.get('theme'), tmr.bindings.get('owner'))}."


def _t_request_fetch(tmr: TMR, kb: Kb) -> str:
    return f"Please fetch {_np(kb, tmr.bindings.get('theme'), tmr.bindings.get('owner'))}."


def _t_request_move(tmr: TMR, kb: Kb) -> str:
    return f"Please go to {_np(kb, tmr.bindings.get('theme'))}."


def _t_request_search(tmr: TMR, kb: Kb) -> str:
    return f"Please search {_np(kb, tmr.bindings.get('theme'))}."


def _t_request_stop(tmr: TMR, kb: Kb) -> str:
    return "Please stop."


def _t_ack_find(tmr: TMR, kb: Kb) -> str:
    name = (tmr.bindings.get("requester") or "team").title()
    return f"On it, {name}: searching for {_np(kb, tmr.bindings.get('theme'))}."


def _t_ack_stop(tmr: TMR, kb: Kb) -> str:
    return "Stopping now."


def _t_ack_generic(tmr: TMR, kb: Kb) -> str:
    return "On it."


def _t_inform_found(tmr: TMR, kb: Kb) -> str:
    theme = _np(kb, tmr.bindings.get("theme"))
    location = tmr.bindings.get("location")
    if location:
        return f"I found {theme} in {_np(kb, location)}."
    return f"I found {theme}."


def _t_inform_not_found(tmr: TMR, kb: Kb) -> str:
    return f"I could not find {_np(kb, tmr.bindings.get('theme'))}."


def _t_inform_location(tmr: TMR, kb: Kb) -> str:
    theme = tmr.bindings.get("theme")
    location = tmr.bindings.get("location")
    if not location:
        raise NoTemplate("location statement requires a location binding")
    return f"{_np(kb, theme).capitalize()} {_be(kb, theme or '')} in {_np(kb, location)}."


def _t_inform_delivered(tmr: TMR, kb: Kb) -> str:
    return f"I have delivered {_np(kb, tmr.bindings.get('theme'))}."


def _t_ask_location(tmr: TMR, kb: Kb) -> str:
    theme = tmr.bindings.get("theme")
    return f"Where {_be(kb, theme or '')} {_np(kb, theme)}?"


def _t_ask_clarify(tmr: TMR, kb: Kb) -> str:
    return "Sorry, I did not understand. Please rephrase."


TMR_TEMPLATES: dict[tuple[str, str], Callable[[TMR, Kb], str]] = {
    ("REQUEST-ACTION", "FIND-OBJECT"): _t_request_find,
    ("REQUEST-ACTION", "FETCH-OBJECT"): _t_request_fetch,
    ("REQUEST-ACTION", "MOVE-TO"): _t_request_move,
    ("REQUEST-ACTION", "SEARCH-AREA"): _t_request_search,
    ("REQUEST-ACTION", "STOP"): _t_request_stop,
    ("ACK", "FIND-OBJECT"): _t_ack_find,
    ("ACK", "STOP"): _t_ack_stop,
    ("ACK", "ACKNOWLEDGE"): _t_ack_generic,
    ("INFORM", "FOUND"): _t_inform_found,
    ("INFORM", "NOT-FOUND"): _t_inform_not_found,
    ("INFORM", "LOCATION-STATEMENT"): _t_inform_location,
    ("INFORM", "DELIVERED"): _t_inform_delivered,
    ("REQUEST-INFO", "LOCATION-QUERY"): _t_ask_location,
    ("REQUEST-INFO", "CLARIFICATION"): _t_ask_clarify,
}

# example bindings used by the round-trip checks and docs
TEMPLATE_EXAMPLES: dict[tuple[str, str], dict[str, str]] = {
    ("REQUEST-ACTION", "FIND-OBJECT"): {"theme": "KEY-SET"},
    ("REQUEST-ACTION", "FETCH-OBJECT"): {"theme": "PHONE"},
    ("REQUEST-ACTION", "MOVE-TO"): {"theme": "KITCHEN"},
    ("REQUEST-ACTION", "SEARCH-AREA"): {"theme": "BEDROOM"},
    ("REQUEST-ACTION", "STOP"): {},
    ("ACK", "FIND-OBJECT"): {"theme": "KEY-SET", "requester": "danny"},
    ("ACK", "STOP"): {},
    ("ACK", "ACKNOWLEDGE"): {},
    ("INFORM", "FOUND"): {"theme": "KEY-SET", "location": "KITCHEN"},
    ("INFORM", "NOT-FOUND"): {"theme": "KEY-SET"},
    ("INFORM", "LOCATION-STATEMENT"): {"theme": "KEY-SET", "location": "KITCHEN"},
    ("INFORM", "DELIVERED"): {"theme": "KEY-SET"},
    ("REQUEST-INFO", "LOCATION-QUERY"): {"theme": "KEY-SET"},
    ("REQUEST-INFO", "CLARIFICATION"): {},
}


def generate(meaning: Any, kb: Kb) -> str:
    """Render a TMR or a reasoning-trace record to text."""
    if hasattr(meaning, "speech_act"):
        key = (meaning.speech_act, meaning.head)
        template = TMR_TEMPLATES.get(key)
        if template is None:
            raise NoTemplate(f"no template for {key}")
        return template(meaning, kb)
    if hasattr(meaning, "structured_cause"):
        return _render_thought(meaning)
    raise NoTemplate(f"cannot render {type(meaning).__name__}")


def _render_thought(thought: Any) -> str:
    kind = getattr(thought.kind, "value", str(thought.kind))
    cause: dict[str, Any] = thought.structured_cause
    if kind == "goal_adopted":
        return (
            f"Adopted goal {cause.get('goal_id')} ({cause.get('concept')}) "
            f"for {cause.get('requester', 'self')} at priority {cause.get('priority')}."
        )
    if kind == "plan_selected":
        cands = cause.get("candidates", [])
        chosen = cause.get("chosen")
        totals = {c["plan_id"]: c["total"] for c in cands}
        ranked = sorted(totals.values(), reverse=True)
        if len(ranked) > 1:
            return (
                f"Selected plan {chosen} (utility {ranked[0]:.4f}; "
                f"runner-up {ranked[1]:.4f} of {len(cands)} candidates)."
            )
        return f"Selected plan {chosen}: the only candidate (utility {ranked[0]:.4f})."
    if kind == "action_issued":
        if cause.get("command_id"):
            return (
                f"Issued {cause.get('verb')} as {cause.get('command_id')} "
                f"for step {cause.get('step')}."
            )
        return f"Said: {cause.get('utterance')!r} for step {cause.get('step')}."
    if kind == "report_processed":
        return str(cause.get("note", "Processed an incoming event."))
    if kind == "goal_achieved":
        return f"Goal {cause.get('goal_id')} achieved: {cause.get('note', 'plan complete')}."
    if kind == "goal_abandoned":
        return f"Goal {cause.get('goal_id')} abandoned: {cause.get('reason')}."
    if kind == "confidence_assessed":
        return (
            f"Decision confidence {cause.get('confidence'):.4f} "
            f"(margin over runner-up)."
        )
    return f"{kind}: {cause}"
