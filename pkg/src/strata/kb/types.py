"""Meaning-representation and knowledge-entry types."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

LITERAL_TYPES = ("string", "number", "boolean", "pose")

SPEECH_ACTS = ("REQUEST-ACTION", "REQUEST-INFO", "INFORM", "ACK")

TEAM = "TEAM"


@dataclass
class Concept:
    name: str
    parents: list[str] = field(default_factory=list)
    properties: dict[str, str] = field(default_factory=dict)
    labels: list[str] = field(default_factory=list)


@dataclass
class LexEntry:
    lemma: str
    sense_id: str
    pos: str
    concept: str
    frame: list[str] = field(default_factory=list)
    plural: bool = False


@dataclass
class TMR:
    """Frame-structured meaning of one utterance."""

    tmr_id: str
    speech_act: str
    head: str
    bindings: dict[str, str] = field(default_factory=dict)
    speaker: str = ""
    addressee: str = TEAM
    source_text: str = ""
    tick: int = 0

    def to_payload(self) -> dict[str, Any]:
        return {
            "tmr_id": self.tmr_id,
            "speech_act": self.speech_act,
            "head": self.head,
            "bindings": dict(self.bindings),
            "speaker": self.speaker,
            "addressee": self.addressee,
            "source_text": self.source_text,
            "tick": self.tick,
        }


@dataclass
class VmrObject:
    instance_id: str
    concept: str
    position: tuple[float, float]
    confidence: float

    def to_payload(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "concept": self.concept,
            "x": self.position[0],
            "y": self.position[1],
            "confidence": self.confidence,
        }


@dataclass
class VMR:
    """Ontology-grounded interpretation of one robot's detection batch."""

    vmr_id: str
    robot_id: str
    objects: list[VmrObject] = field(default_factory=list)
    tick: int = 0

    def to_payload(self) -> dict[str, Any]:
        return {
            "vmr_id": self.vmr_id,
            "robot_id": self.robot_id,
            "objects": [o.to_payload() for o in self.objects],
            "tick": self.tick,
        }


@dataclass
class AgentProfile:
    agent_id: str
    kind: str  # Human | UGV | Drone
    team_role: str = ""
    skills: list[str] = field(default_factory=list)
    preferences: dict[str, float] = field(default_factory=dict)
    state: dict[str, str] = field(default_factory=dict)

    def to_payload(self) -> dict[str, Any]:
        return {
            "agent_id": self.agent_id,
            "kind": self.kind,
            "team_role": self.team_role,
            "skills": list(self.skills),
            "preferences": dict(self.preferences),
            "state": dict(self.state),
        }
