"""The loaded, validated, immutable knowledge handle."""
from __future__ import annotations

from strata.kb.types import LITERAL_TYPES, AgentProfile, Concept, LexEntry

ROOT_CONCEPT = "ALL"


class KbValidationError(Exception):
    """A knowledge file entry violated a cross-reference invariant."""


class Kb:
    """Ontology + lexicon + agent profiles; read-only after load."""

    def __init__(
        self,
        concepts: dict[str, Concept],
        lexicon: list[LexEntry],
        profiles: dict[str, AgentProfile],
    ) -> None:
        self.concepts = concepts
        self.lexicon = lexicon
        self.profiles = profiles
        self.labels: dict[str, str] = {}
        for concept in concepts.values():
            for label in concept.labels:
                self.labels.setdefault(label, concept.name)
        self.lemma_index: dict[str, list[LexEntry]] = {}
        for entry in lexicon:
            self.lemma_index.setdefault(entry.lemma, []).append(entry)
        self.max_lemma_words = max(
            (len(entry.lemma.split()) for entry in lexicon), default=1
        )
        self.validate()

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        if ROOT_CONCEPT not in self.concepts:
            raise KbValidationError(f"ontology must define root concept {ROOT_CONCEPT}")
        for concept in self.concepts.values():
            if concept.name != ROOT_CONCEPT and not concept.parents:
                raise KbValidationError(f"concept {concept.name}: no parent")
            for parent in concept.parents:
                if parent not in self.concepts:
                    raise KbValidationError(
                        f"concept {concept.name}: unknown parent {parent}"
                    )
            for prop, constraint in concept.properties.items():
                if constraint not in self.concepts and constraint not in LITERAL_TYPES:
                    raise KbValidationError(
                        f"concept {concept.name}: property {prop} filler "
                        f"{constraint!r} is neither a concept nor a literal type"
                    )
        self._check_acyclic()
        seen_senses: set[str] = set()
        for entry in self.lexicon:
            if entry.concept not in self.concepts:
                raise KbValidationError(
                    f"sense {entry.sense_id}: unknown concept {entry.concept}"
                )
            if entry.sense_id in seen_senses:
                raise KbValidationError(f"duplicate sense id {entry.sense_id}")
            seen_senses.add(entry.sense_id)
        for profile in self.profiles.values():
            for skill in profile.skills:
                if skill not in self.concepts:
                    raise KbValidationError(
                        f"profile {profile.agent_id}: unknown skill concept {skill}"
                    )
            for pref, weight in profile.preferences.items():
                if not 0.0 <= weight <= 1.0:
                    raise KbValidationError(
                        f"profile {profile.agent_id}: preference {pref} outside [0, 1]"
                    )

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}  # 0 visiting, 1 done

        def visit(name: str, trail: list[str]) -> None:
            if state.get(name) == 1:
                return
            if state.get(name) == 0:
                raise KbValidationError(
                    f"ontology cycle through {' -> '.join(trail + [name])}"
                )
            state[name] = 0
            for parent in self.concepts[name].parents:
                visit(parent, trail + [name])
            state[name] = 1

        for name in self.concepts:
            visit(name, [])

    # -- queries ----------------------------------------------------------------

    def has_concept(self, name: str) -> bool:
        return name in self.concepts

    def isa(self, child: str, ancestor: str) -> bool:
        """True when ancestor is reachable along parent edges (reflexive)."""
        if child == ancestor:
            return True
        seen: set[str] = set()
        frontier = [child]
        while frontier:
            name = frontier.pop()
            if name in seen or name not in self.concepts:
                continue
            seen.add(name)
            for parent in self.concepts[name].parents:
                if parent == ancestor:
                    return True
                frontier.append(parent)
        return False

    def concept_for_label(self, label: str) -> str | None:
        return self.labels.get(label)

    def label_for_concept(self, concept: str) -> str:
        entry = self.concepts.get(concept)
        if entry and entry.labels:
            return entry.labels[0]
        return concept.lower().replace("-", " ")

    def noun_is_plural(self, concept: str) -> bool:
        for entry in self.lexicon:
            if entry.pos == "noun" and entry.concept == concept:
                return entry.plural
        return False

    def senses_for(self, lemma: str) -> list[LexEntry]:
        return self.lemma_index.get(lemma, [])

    def counts(self) -> dict[str, int]:
        return {
            "concepts": len(self.concepts),
            "senses": len(self.lexicon),
            "profiles": len(self.profiles),
        }
