"""Per-robot strategic agent: attention, deliberation, action rendering,
execution monitoring and the reasoning trace.

One agent instance runs per robot and touches the world only through
its channel pair (commands out, reports in) and the team chat. Every
agenda mutation leaves a Thought in the trace; that log is the
substrate for causal explanation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from strata.bus.channel import ChannelPair
from strata.bus.messages import Command, Report, ReportKind, TERMINAL_REPORT_KINDS
from strata.kb.analyzer import AnalysisError, analyze
from strata.kb.generator import generate
from strata.kb.kbase import Kb
from strata.kb.percept import interpret_percept
from strata.kb.types import TEAM, TMR, VMR
from strata.sim.types import Detection
from strata.strategic.deliberation import (
    DEFAULT_WEIGHTS,
    assess_confidence,
    deliberate,
)
from strata.strategic.plans import PlanLibrary
from strata.strategic.types import (
    Agenda,
    AgendaEntry,
    Decision,
    DecisionKind,
    Goal,
    GoalStatus,
    Plan,
    PlanStep,
    Provenance,
    StepState,
    Thought,
    ThoughtKind,
    Utterance,
)

PHYSICAL_CONCEPTS = ("MOVE-TO", "SEARCH-AREA", "PICK-UP", "SCAN", "HOVER", "RETURN-TO-DOCK", "STOP")
ADOPTABLE_REQUESTS = ("FIND-OBJECT", "FETCH-OBJECT", "MOVE-TO", "SEARCH-AREA", "SCAN", "HOVER", "RETURN-TO-DOCK")
SELF_GOAL_PRIORITY = 0.6
STOP_GOAL_PRIORITY = 0.9


class UnrenderableStep(Exception):
    pass


@dataclass
class CycleOutput:
    """Everything one strategic cycle produced, for chat and the trace."""

    utterances: list[Utterance] = field(default_factory=list)
    tmrs: list[TMR] = field(default_factory=list)
    vmrs: list[VMR] = field(default_factory=list)
    thoughts: list[Thought] = field(default_factory=list)
    commands: list[Command] = field(default_factory=list)
    analysis_failures: list[dict[str, Any]] = field(default_factory=list)


class StrategicAgent:
    def __init__(
        self,
        agent_id: str,
        kb: Kb,
        library: PlanLibrary,
        pair: ChannelPair,
        weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
        seed: int = 0,
    ) -> None:
        if agent_id not in kb.profiles:
            raise ValueError(f"no profile for agent {agent_id!r}")
        self.agent_id = agent_id
        self.kb = kb
        self.library = library
        self.pair = pair
        self.weights = weights
        self.seed = seed
        self.profile = kb.profiles[agent_id]
        self.agenda = Agenda()
        self.thoughts: list[Thought] = []
        self.belief_locations: dict[str, dict[str, Any]] = {}
        self.cmd_map: dict[str, tuple[str, str, int]] = {}
        self._tick = 0
        self._seq: dict[str, int] = {}
        self._out: CycleOutput | None = None

    # -- id and thought helpers ------------------------------------------------

    def _next(self, prefix: str) -> str:
        self._seq[prefix] = self._seq.get(prefix, 0) + 1
        return f"{prefix}-{self.agent_id}-{self._seq[prefix]}"

    def _think(self, kind: ThoughtKind, cause: dict[str, Any]) -> Thought:
        thought = Thought(
            thought_id=self._next("th"),
            tick=self._tick,
            kind=kind,
            structured_cause=cause,
        )
        thought.rendered_text = generate(thought, self.kb)
        self.thoughts.append(thought)
        if self._out is not None:
            self._out.thoughts.append(thought)
        return thought

    def _say(self, tmr: TMR) -> Utterance:
        utterance = Utterance(
            speaker=self.agent_id,
            addressee=TEAM,
            text=generate(tmr, self.kb),
            meaning=tmr,
            tick=self._tick,
        )
        if self._out is not None:
            self._out.utterances.append(utterance)
        return utterance

    def _make_tmr(self, speech_act: str, head: str, bindings: dict[str, str]) -> TMR:
        return TMR(
            tmr_id=self._next("tmr"),
            speech_act=speech_act,
            head=head,
            bindings=bindings,
            speaker=self.agent_id,
            addressee=TEAM,
            tick=self._tick,
        )

    # -- one strategic cycle ------------------------------------------------------

    def cycle(self, tick: int, chat_messages: list[dict[str, Any]]) -> CycleOutput:
        """attend -> monitor -> deliberate -> render, consuming polled
        reports and new chat; may run arbitrarily late without ever
        blocking the tactical layer."""
        self._tick = tick
        out = CycleOutput()
        self._out = out
        try:
            reports = self.pair.poll_reports(256)
            percept_batches = [r for r in reports if r.kind is ReportKind.PERCEPT_BATCH]
            lifecycle = [r for r in reports if r.kind is not ReportKind.PERCEPT_BATCH]
            vmrs = self._interpret_batches(percept_batches)
            tmrs = self._analyze_chat(chat_messages)
            self.attend([*tmrs, *vmrs])
            self.monitor(lifecycle)
            self._plan_and_act()
            self.agenda.check_invariants()
        finally:
            self._out = None
        return out

    def _interpret_batches(self, batches: list[Report]) -> list[VMR]:
        vmrs: list[VMR] = []
        for report in batches:
            pose = tuple(report.data.get("pose", (0.0, 0.0, 0.0)))
            detections = [
                Detection(
                    class_label=d["class_label"],
                    confidence=d["confidence"],
                    relative_position=(d["range"], d["bearing"]),
                    tick=d["tick"],
                )
                for d in report.data.get("detections", [])
            ]
            self.library.ctx.self_position = (pose[0], pose[1])
            vmr = interpret_percept(
                detections,
                self.agent_id,
                self.kb,
                (pose[0], pose[1], pose[2]),
                vmr_id=self._next("vmr"),
                tick=report.tick,
            )
            if vmr.objects:
                vmrs.append(vmr)
                if self._out is not None:
                    self._out.vmrs.append(vmr)
        return vmrs

    def _analyze_chat(self, chat_messages: list[dict[str, Any]]) -> list[TMR]:
        tmrs: list[TMR] = []
        for msg in chat_messages:
            sender = msg["sender"]
            if sender == self.agent_id:
                continue
            try:
                tmr = analyze(
                    msg["text"],
                    sender,
                    self.kb,
                    tmr_id=self._next("tmr"),
                    tick=msg.get("tick", self._tick),
                )
            except AnalysisError as exc:
                failure = {
                    "sender": sender,
                    "text": msg["text"],
                    "reason": exc.kind,
                    "candidates": exc.candidates,
                }
                if self._out is not None:
                    self._out.analysis_failures.append(failure)
                self._maybe_clarify(sender, msg["text"], exc)
                continue
            tmrs.append(tmr)
            if self._out is not None:
                self._out.tmrs.append(tmr)
        return tmrs

    def _maybe_clarify(self, sender: str, text: str, exc: AnalysisError) -> None:
        """Only the designated lead robot asks humans for a rephrase, so an
        unintelligible message does not trigger a chorus."""
        sender_profile = self.kb.profiles.get(sender)
        if sender_profile is None or sender_profile.kind != "Human":
            return
        if not self.profile.preferences.get("clarify_lead"):
            return
        goal = Goal(
            goal_id=self._next("goal"),
            concept="CLARIFICATION",
            bindings={"requester": sender},
            priority=SELF_GOAL_PRIORITY,
            provenance=Provenance.self_generated(f"unparsed utterance from {sender}"),
        )
        self.agenda.add(goal)
        self._think(
            ThoughtKind.GOAL_ADOPTED,
            {
                "goal_id": goal.goal_id,
                "concept": goal.concept,
                "requester": sender,
                "priority": goal.priority,
                "source_text": text,
                "note": f"could not parse ({exc.kind})",
            },
        )

    # -- attention ------------------------------------------------------------------

    def attend(self, events: list[Any], agenda: Agenda | None = None) -> Agenda:
        """Fold timestamped TMR/VMR/Report events into the agenda; every
        mutation (and every skip) leaves a Thought."""
        agenda = agenda if agenda is not None else self.agenda
        for event in events:
            if isinstance(event, TMR):
                self._attend_tmr(event, agenda)
            elif isinstance(event, VMR):
                self._attend_vmr(event, agenda)
            elif isinstance(event, Report):
                self._handle_report(event, agenda)
            else:
                self._think(
                    ThoughtKind.REPORT_PROCESSED,
                    {"note": f"Ignored unintelligible event {type(event).__name__}."},
                )
        agenda.resort()
        return agenda

    def _attend_tmr(self, tmr: TMR, agenda: Agenda) -> None:
        if tmr.speech_act == "REQUEST-ACTION":
            self._attend_request(tmr, agenda)
        elif tmr.speech_act == "REQUEST-INFO":
            self._attend_question(tmr, agenda)
        elif tmr.speech_act == "INFORM":
            self._attend_inform(tmr, agenda)
        else:  # ACK
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"{tmr.speaker} acknowledged ({tmr.head})."},
            )

    def _attend_request(self, tmr: TMR, agenda: Agenda) -> None:
        if tmr.head == "STOP":
            for goal in agenda.open_goals():
                goal.set_status(GoalStatus.ABANDONED)
                self._think(
                    ThoughtKind.GOAL_ABANDONED,
                    {"goal_id": goal.goal_id, "reason": f"stopped by {tmr.speaker}"},
                )
            goal = self._adopt(tmr, agenda, priority=STOP_GOAL_PRIORITY)
            self._say(self._make_tmr("ACK", "STOP", {}))
            return
        if tmr.head not in self.profile.skills or tmr.head not in ADOPTABLE_REQUESTS:
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {
                    "note": f"Skipped request {tmr.head} from {tmr.speaker}: "
                    "not in my skill set."
                },
            )
            return
        theme = tmr.bindings.get("theme", "")
        duplicate = next(
            (
                g
                for g in agenda.open_goals()
                if g.concept == tmr.head and g.bindings.get("theme") == theme
            ),
            None,
        )
        if duplicate is not None:
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"Already pursuing {tmr.head} for {theme} ({duplicate.goal_id})."},
            )
            return
        requester_profile = self.kb.profiles.get(tmr.speaker)
        priority = 0.5
        if requester_profile is not None:
            priority = requester_profile.preferences.get("request_priority", 0.5)
        self._adopt(tmr, agenda, priority=priority)
        if tmr.head in ("FIND-OBJECT", "FETCH-OBJECT") and theme:
            self._say(
                self._make_tmr(
                    "ACK",
                    "FIND-OBJECT",
                    {"theme": theme, "requester": tmr.bindings.get("requester", tmr.speaker)},
                )
            )
        else:
            self._say(self._make_tmr("ACK", "ACKNOWLEDGE", {}))

    def _adopt(self, tmr: TMR, agenda: Agenda, priority: float) -> Goal:
        goal = Goal(
            goal_id=self._next("goal"),
            concept=tmr.head,
            bindings=dict(tmr.bindings),
            priority=priority,
            provenance=Provenance.from_utterance(tmr.tmr_id),
        )
        agenda.add(goal)
        self._think(
            ThoughtKind.GOAL_ADOPTED,
            {
                "goal_id": goal.goal_id,
                "concept": goal.concept,
                "requester": tmr.bindings.get("requester", tmr.speaker),
                "priority": goal.priority,
                "source_tmr": tmr.tmr_id,
                "source_text": tmr.source_text,
                "theme": goal.bindings.get("theme", ""),
            },
        )
        return goal

    def _attend_question(self, tmr: TMR, agenda: Agenda) -> None:
        if tmr.head != "LOCATION-QUERY":
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"Heard {tmr.head} from {tmr.speaker}; nothing for me to do."},
            )
            return
        sender_profile = self.kb.profiles.get(tmr.speaker)
        if sender_profile is None or sender_profile.kind != "Human":
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"Ignoring location question from non-human {tmr.speaker}."},
            )
            return
        if not self.profile.preferences.get("clarify_lead"):
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": "Leaving the location question to the lead robot."},
            )
            return
        goal = Goal(
            goal_id=self._next("goal"),
            concept="LOCATION-QUERY",
            bindings=dict(tmr.bindings, requester=tmr.speaker),
            priority=SELF_GOAL_PRIORITY,
            provenance=Provenance.from_utterance(tmr.tmr_id),
        )
        agenda.add(goal)
        self._think(
            ThoughtKind.GOAL_ADOPTED,
            {
                "goal_id": goal.goal_id,
                "concept": goal.concept,
                "requester": tmr.speaker,
                "priority": goal.priority,
                "source_tmr": tmr.tmr_id,
                "source_text": tmr.source_text,
                "theme": goal.bindings.get("theme", ""),
            },
        )

    def _attend_inform(self, tmr: TMR, agenda: Agenda) -> None:
        theme = tmr.bindings.get("theme", "")
        if tmr.head in ("FOUND", "LOCATION-STATEMENT") and theme:
            belief = self.belief_locations.setdefault(theme, {})
            belief["room"] = tmr.bindings.get("location")
            belief["source"] = tmr.speaker
            for goal in list(agenda.open_goals()):
                if goal.concept != "FIND-OBJECT":
                    continue
                goal_theme = goal.bindings.get("theme", "")
                if not goal_theme or not self.kb.isa(theme, goal_theme):
                    continue
                if goal.located:
                    continue  # already found it myself; let my own plan finish
                goal.set_status(GoalStatus.ABANDONED)
                self._think(
                    ThoughtKind.GOAL_ABANDONED,
                    {
                        "goal_id": goal.goal_id,
                        "reason": f"{tmr.speaker} already located the "
                        f"{self.kb.label_for_concept(theme)}",
                    },
                )
            return
        self._think(
            ThoughtKind.REPORT_PROCESSED,
            {"note": f"Noted {tmr.head} from {tmr.speaker}."},
        )

    def _attend_vmr(self, vmr: VMR, agenda: Agenda) -> None:
        for obj in vmr.objects:
            belief = self.belief_locations.setdefault(obj.concept, {})
            belief["position"] = obj.position
            belief["room"] = self.library.ctx.room_of_point(*obj.position) or belief.get("room")
            belief["source"] = self.agent_id
            for goal in agenda.open_goals():
                if goal.concept not in ("FIND-OBJECT", "FETCH-OBJECT"):
                    continue
                goal_theme = goal.bindings.get("theme", "")
                if not goal_theme or not self.kb.isa(obj.concept, goal_theme):
                    continue
                if goal.located:
                    goal.progress["position"] = obj.position  # refresh silently
                    continue
                goal.progress.update(
                    position=obj.position,
                    instance=obj.instance_id,
                    room=self.library.ctx.room_of_point(*obj.position),
                    found_by=self.agent_id,
                )
                goal.needs_deliberation = True
                self._think(
                    ThoughtKind.REPORT_PROCESSED,
                    {
                        "goal_id": goal.goal_id,
                        "note": (
                            f"Saw {obj.instance_id} at "
                            f"({obj.position[0]:.2f}, {obj.position[1]:.2f}); "
                            f"goal {goal.goal_id} target located."
                        ),
                    },
                )

    # -- execution monitoring -----------------------------------------------------------

    def monitor(self, reports: list[Report], agenda: Agenda | None = None) -> Agenda:
        agenda = agenda if agenda is not None else self.agenda
        for report in reports:
            self._handle_report(report, agenda)
        agenda.resort()
        return agenda

    def _handle_report(self, report: Report, agenda: Agenda) -> None:
        if report.kind in (ReportKind.ACK, ReportKind.PROGRESS, ReportKind.PERCEPT_BATCH):
            return
        if report.kind is ReportKind.SAFETY_EVENT:
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"Safety event on {self.agent_id}: {report.data.get('kind')}."},
            )
            return
        if report.kind not in TERMINAL_REPORT_KINDS:
            return
        mapping = self.cmd_map.get(report.command_id or "")
        if mapping is None:
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"Anomaly: report {report.report_id} references unknown "
                         f"command {report.command_id!r}."},
            )
            return
        goal_id, plan_id, step_index = mapping
        entry = agenda.entry_for(goal_id)
        if entry is None or entry.goal.terminal or entry.selected_plan_id != plan_id:
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {"note": f"Stale {report.kind.value} for {report.command_id}; ignored."},
            )
            return
        plan = entry.selected_plan()
        step = plan.steps[step_index]
        if report.kind is ReportKind.SUCCESS:
            step.advance(StepState.DONE)
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {
                    "goal_id": goal_id,
                    "note": f"Step {step_index} ({step.concept}) of {plan_id} completed.",
                },
            )
            if plan.complete():
                self._achieve(entry)
        else:
            reason = report.data.get("reason", report.kind.value)
            step.advance(StepState.FAILED)
            if plan.template not in entry.goal.tried_templates:
                entry.goal.tried_templates.append(plan.template)
            entry.goal.needs_deliberation = True
            self._think(
                ThoughtKind.REPORT_PROCESSED,
                {
                    "goal_id": goal_id,
                    "note": f"Step {step_index} ({step.concept}) of {plan_id} "
                    f"ended {report.kind.value} ({reason}); will re-deliberate.",
                },
            )

    def _achieve(self, entry: AgendaEntry) -> None:
        entry.goal.set_status(GoalStatus.ACHIEVED)
        self._think(
            ThoughtKind.GOAL_ACHIEVED,
            {
                "goal_id": entry.goal.goal_id,
                "note": f"plan {entry.selected_plan_id} complete",
            },
        )

    # -- deliberation and action ------------------------------------------------------------

    def _plan_and_act(self) -> None:
        entry = self.agenda.top_actionable()
        if entry is None:
            return
        self._focus(entry)
        goal = entry.goal
        if entry.selected_plan() is None or goal.needs_deliberation:
            goal.needs_deliberation = False
            decision = self.deliberate()
            if decision.kind is not DecisionKind.STEP:
                return
            entry = self.agenda.entry_for(decision.goal_id)
        self._issue_steps(entry)

    def _focus(self, entry: AgendaEntry) -> None:
        """Single-focus policy: exactly the top actionable goal is Active."""
        if entry.goal.status is GoalStatus.ACTIVE:
            return
        active = self.agenda.active()
        if active is not None and active is not entry:
            active.goal.set_status(GoalStatus.SUSPENDED)
        entry.goal.set_status(GoalStatus.ACTIVE)

    def deliberate(self, seed: int | None = None) -> Decision:
        """Select a plan for the agenda's top goal, thinking out loud."""
        decision = deliberate(
            self.agenda,
            self._enumerate_tracking,
            self.weights,
            self.seed if seed is None else seed,
        )
        if decision.kind is DecisionKind.NO_PLAN:
            entry = self.agenda.entry_for(decision.goal_id)
            goal = entry.goal
            goal.set_status(GoalStatus.ABANDONED)
            self._think(
                ThoughtKind.GOAL_ABANDONED,
                {
                    "goal_id": decision.goal_id,
                    "reason": "no plan available (all candidates tried or inapplicable)",
                },
            )
            theme = goal.bindings.get("theme", "")
            if (
                goal.provenance.kind == "from_utterance"
                and goal.concept in ("FIND-OBJECT", "FETCH-OBJECT")
                and theme
            ):
                # tell the requester the search came up empty
                self._say(self._make_tmr("INFORM", "NOT-FOUND", {"theme": theme}))
            return decision
        if decision.kind is DecisionKind.STEP:
            entry = self.agenda.entry_for(decision.goal_id)
            plan = entry.selected_plan()
            if plan.template not in entry.goal.tried_templates:
                entry.goal.tried_templates.append(plan.template)
            self._think(
                ThoughtKind.PLAN_SELECTED,
                {
                    "goal_id": decision.goal_id,
                    "chosen": decision.chosen_plan_id,
                    "candidates": [s.to_payload() for s in decision.candidates],
                    "weights": list(self.weights),
                },
            )
            confidence = assess_confidence(decision)
            self._think(
                ThoughtKind.CONFIDENCE_ASSESSED,
                {
                    "goal_id": decision.goal_id,
                    "confidence": confidence,
                    "chosen": decision.chosen_plan_id,
                },
            )
        return decision

    def _enumerate_tracking(self, goal: Goal) -> list[Plan]:
        return self.library.enumerate(goal)

    def _issue_steps(self, entry: AgendaEntry) -> None:
        goal = entry.goal
        plan = entry.selected_plan()
        if plan is None or goal.terminal:
            return
        while True:
            if plan.outstanding() is not None:
                return  # a physical step is in flight; monitor will advance us
            step = plan.next_step()
            if step is None:
                if plan.complete():
                    self._achieve(entry)
                else:
                    goal.needs_deliberation = True
                return
            try:
                artifact = self.render_action(step, goal)
            except UnrenderableStep as exc:
                goal.needs_deliberation = True
                if plan.template not in goal.tried_templates:
                    goal.tried_templates.append(plan.template)
                self._think(
                    ThoughtKind.REPORT_PROCESSED,
                    {
                        "goal_id": goal.goal_id,
                        "note": f"Step {step.concept} unrenderable ({exc}); re-deliberating.",
                    },
                )
                return
            if isinstance(artifact, Command):
                if self.pair.downlink_free() <= 0:
                    return  # full downlink: hold the step, re-deliberation signal
                step.advance(StepState.ISSUED)
                self.pair.send_command(artifact)
                self.cmd_map[artifact.command_id] = (
                    goal.goal_id,
                    plan.plan_id,
                    plan.steps.index(step),
                )
                if self._out is not None:
                    self._out.commands.append(artifact)
                self._think(
                    ThoughtKind.ACTION_ISSUED,
                    {
                        "goal_id": goal.goal_id,
                        "plan_id": plan.plan_id,
                        "step": plan.steps.index(step),
                        "verb": artifact.verb,
                        "command_id": artifact.command_id,
                    },
                )
                return
            # communicative steps complete on utterance
            step.advance(StepState.ISSUED)
            step.advance(StepState.DONE)
            self._think(
                ThoughtKind.ACTION_ISSUED,
                {
                    "goal_id": goal.goal_id,
                    "plan_id": plan.plan_id,
                    "step": plan.steps.index(step),
                    "verb": step.concept,
                    "utterance": artifact.text,
                },
            )
            if plan.complete():
                self._achieve(entry)
                return

    # -- action rendering ---------------------------------------------------------------------

    def render_action(self, step: PlanStep, goal: Goal) -> Command | Utterance:
        """Physical step -> Command on the downlink; communicative step ->
        Utterance via the generator. Raises UnrenderableStep when the
        concept has no rule or a needed binding is missing."""
        if step.concept in PHYSICAL_CONCEPTS:
            return self._render_command(step, goal)
        if step.concept == "REPORT":
            return self._say(self._report_tmr(step, goal))
        if step.concept == "ASK":
            return self._say(self._make_tmr("REQUEST-INFO", "CLARIFICATION", {}))
        raise UnrenderableStep(f"no rendering rule for concept {step.concept!r}")

    def _render_command(self, step: PlanStep, goal: Goal) -> Command:
        params: dict[str, Any] = {}
        if step.concept == "MOVE-TO":
            target = step.bindings.get("target")
            if isinstance(target, str):
                if target not in self.library.ctx.rooms:
                    raise UnrenderableStep(f"unknown room {target!r}")
                target = self.library.ctx.room_centroid(target)
            if not isinstance(target, tuple):
                raise UnrenderableStep("MOVE-TO needs a target")
            params["target"] = [round(target[0], 3), round(target[1], 3)]
        elif step.concept == "SEARCH-AREA":
            room = step.bindings.get("room")
            if not isinstance(room, str) or room not in self.library.ctx.rooms:
                raise UnrenderableStep(f"unknown room {room!r}")
            params["room"] = room
        elif step.concept == "PICK-UP":
            position = step.bindings.get("position")
            if not isinstance(position, tuple):
                raise UnrenderableStep("PICK-UP needs a position")
            params["position"] = [round(position[0], 3), round(position[1], 3)]
            if step.bindings.get("object"):
                params["object"] = str(step.bindings["object"])
        elif step.concept == "HOVER":
            params["duration"] = int(step.bindings.get("duration", 20))
        return Command(
            command_id=self._next("cmd"),
            robot_id=step.assigned_to or self.agent_id,
            verb=step.concept,
            params=params,
            priority=goal.priority,
            issued_tick=self._tick,
        )

    def _report_tmr(self, step: PlanStep, goal: Goal) -> TMR:
        content = step.bindings.get("content", "")
        theme = goal.bindings.get("theme", "")
        if content == "found":
            if not goal.located:
                raise UnrenderableStep("cannot report found: target not located")
            bindings = {"theme": theme}
            room = goal.progress.get("room")
            location = self._room_concept(room) if room else None
            if location:
                bindings["location"] = location
            return self._make_tmr("INFORM", "FOUND", bindings)
        if content == "not-found":
            return self._make_tmr("INFORM", "NOT-FOUND", {"theme": theme})
        if content == "delivered":
            return self._make_tmr("INFORM", "DELIVERED", {"theme": theme})
        if content == "location-answer":
            belief = self.belief_locations.get(theme, {})
            room = belief.get("room")
            if room:
                location = self._room_concept(room)
                if location:
                    return self._make_tmr(
                        "INFORM", "LOCATION-STATEMENT",
                        {"theme": theme, "location": location},
                    )
            return self._make_tmr("INFORM", "NOT-FOUND", {"theme": theme})
        raise UnrenderableStep(f"no REPORT rule for content {content!r}")

    def _room_concept(self, room_name: str | None) -> str | None:
        if not room_name:
            return None
        return self.kb.concept_for_label(room_name.replace("-", " "))
