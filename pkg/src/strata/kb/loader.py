"""Parsers for the three human-editable knowledge files.

All three share one block grammar: an unindented header line opens an
entry, indented ``field value...`` lines fill it, blank lines and ``#``
comments are ignored.

ontology file::

    concept KEY-SET
      isa PORTABLE-OBJECT
      prop owned-by HUMAN
      label keys
      label key set

lexicon file::

    sense find-v1
      lemma find
      pos verb
      concept FIND-OBJECT
      frame V NP:theme
      plural false

profiles file::

    agent ugv-1
      kind UGV
      role searcher
      skills MOVE-TO SEARCH-AREA PICK-UP
      pref request_priority 0.8
      state location living-room
"""
from __future__ import annotations

from pathlib import Path

from strata.kb.kbase import Kb, KbValidationError
from strata.kb.types import AgentProfile, Concept, LexEntry


class KbParseError(Exception):
    def __init__(self, path: str, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def _blocks(text: str, path: str) -> list[tuple[int, list[str], list[tuple[int, list[str]]]]]:
    out: list[tuple[int, list[str], list[tuple[int, list[str]]]]] = []
    current: tuple[int, list[str], list[tuple[int, list[str]]]] | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line.startswith(" ") or line.startswith("\t")
        tokens = line.split()
        if not indented:
            current = (line_no, tokens, [])
            out.append(current)
        else:
            if current is None:
                raise KbParseError(path, line_no, "field line before any entry header")
            current[2].append((line_no, tokens))
    return out


def parse_ontology(text: str, path: str = "<ontology>") -> dict[str, Concept]:
    concepts: dict[str, Concept] = {}
    for line_no, header, fields in _blocks(text, path):
        if header[0] != "concept" or len(header) != 2:
            raise KbParseError(path, line_no, "expected 'concept <NAME>'")
        name = header[1]
        if name in concepts:
            raise KbParseError(path, line_no, f"duplicate concept {name}")
        concept = Concept(name=name)
        for f_line, tokens in fields:
            if tokens[0] == "isa" and len(tokens) >= 2:
                concept.parents.extend(tokens[1:])
            elif tokens[0] == "prop" and len(tokens) == 3:
                concept.properties[tokens[1]] = tokens[2]
            elif tokens[0] == "label" and len(tokens) >= 2:
                concept.labels.append(" ".join(tokens[1:]))
            else:
                raise KbParseError(path, f_line, f"unknown ontology field {tokens[0]!r}")
        concepts[name] = concept
    return concepts


def parse_lexicon(text: str, path: str = "<lexicon>") -> list[LexEntry]:
    senses: list[LexEntry] = []
    for line_no, header, fields in _blocks(text, path):
        if header[0] != "sense" or len(header) != 2:
            raise KbParseError(path, line_no, "expected 'sense <id>'")
        entry = LexEntry(lemma="", sense_id=header[1], pos="", concept="")
        for f_line, tokens in fields:
            if tokens[0] == "lemma" and len(tokens) >= 2:
                entry.lemma = " ".join(tokens[1:])
            elif tokens[0] == "pos" and len(tokens) == 2:
                entry.pos = tokens[1]
            elif tokens[0] == "concept" and len(tokens) == 2:
                entry.concept = tokens[1]
            elif tokens[0] == "frame" and len(tokens) >= 2:
                entry.frame = tokens[1:]
            elif tokens[0] == "plural" and len(tokens) == 2:
                entry.plural = tokens[1].lower() == "true"
            else:
                raise KbParseError(path, f_line, f"unknown lexicon field {tokens[0]!r}")
        if not entry.lemma or not entry.pos or not entry.concept:
            raise KbParseError(path, line_no, f"sense {entry.sense_id}: lemma, pos and concept are required")
        senses.append(entry)
    return senses


def parse_profiles(text: str, path: str = "<profiles>") -> dict[str, AgentProfile]:
    profiles: dict[str, AgentProfile] = {}
    for line_no, header, fields in _blocks(text, path):
        if header[0] != "agent" or len(header) != 2:
            raise KbParseError(path, line_no, "expected 'agent <id>'")
        agent_id = header[1]
        if agent_id in profiles:
            raise KbParseError(path, line_no, f"duplicate agent {agent_id}")
        profile = AgentProfile(agent_id=agent_id, kind="")
        for f_line, tokens in fields:
            if tokens[0] == "kind" and len(tokens) == 2:
                profile.kind = tokens[1]
            elif tokens[0] == "role" and len(tokens) >= 2:
                profile.team_role = " ".join(tokens[1:])
            elif tokens[0] == "skills" and len(tokens) >= 2:
                profile.skills.extend(tokens[1:])
            elif tokens[0] == "pref" and len(tokens) == 3:
                try:
                    profile.preferences[tokens[1]] = float(tokens[2])
                except ValueError as exc:
                    raise KbParseError(path, f_line, f"preference {tokens[1]} is not a number") from exc
            elif tokens[0] == "state" and len(tokens) == 3:
                profile.state[tokens[1]] = tokens[2]
            else:
                raise KbParseError(path, f_line, f"unknown profile field {tokens[0]!r}")
        if profile.kind not in ("Human", "UGV", "Drone"):
            raise KbParseError(path, line_no, f"agent {agent_id}: kind must be Human, UGV or Drone")
        profiles[agent_id] = profile
    return profiles


def load_kb(ontology_path: str | Path, lexicon_path: str | Path, profiles_path: str | Path) -> Kb:
    """Parse and cross-validate the three knowledge files into a handle."""
    ontology_path, lexicon_path, profiles_path = (
        Path(ontology_path),
        Path(lexicon_path),
        Path(profiles_path),
    )
    for p in (ontology_path, lexicon_path, profiles_path):
        if not p.exists():
            raise KbValidationError(f"knowledge file not found: {p}")
    concepts = parse_ontology(ontology_path.read_text(encoding="utf-8"), str(ontology_path))
    lexicon = parse_lexicon(lexicon_path.read_text(encoding="utf-8"), str(lexicon_path))
    profiles = parse_profiles(profiles_path.read_text(encoding="utf-8"), str(profiles_path))
    return Kb(concepts=concepts, lexicon=lexicon, profiles=profiles)
