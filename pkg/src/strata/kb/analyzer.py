"""Deterministic pattern-grammar analysis of chat utterances into TMRs.

Left-to-right longest-match lexical lookup feeds a fixed ordered set of
sentence patterns; a pattern must consume the whole utterance to fire.
Identical (utterance, speaker) input always yields an identical frame.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from strata.kb.kbase import Kb
from strata.kb.types import TEAM, TMR, LexEntry

_PUNCT = re.compile(r"[.,!?;:]")


class AnalysisError(Exception):
    def __init__(self, kind: str, message: str, candidates: list[str] | None = None) -> None:
        super().__init__(f"{kind}: {message}")
        self.kind = kind  # "Unparsed" | "AmbiguousSense"
        self.candidates = candidates or []


@dataclass
class _Tok:
    surface: str
    senses: list[LexEntry]

    def with_pos(self, pos: str) -> list[LexEntry]:
        return [s for s in self.senses if s.pos == pos]


def tokenize(text: str, kb: Kb) -> list[_Tok]:
    words: list[str] = []
    for raw in _PUNCT.sub(" ", text.lower()).split():
        if raw.endswith("'s") and len(raw) > 2:
            words.extend([raw[:-2], "'s"])
        else:
            words.append(raw)
    tokens: list[_Tok] = []
    i = 0
    while i < len(words):
        matched = False
        for n in range(min(kb.max_lemma_words, len(words) - i), 0, -1):
            lemma = " ".join(words[i : i + n])
            senses = kb.senses_for(lemma)
            if senses:
                tokens.append(_Tok(lemma, senses))
                i += n
                matched = True
                break
        if not matched:
            tokens.append(_Tok(words[i], []))
            i += 1
    return tokens


@dataclass
class _NP:
    concept: str
    owner: str | None = None


class _Cursor:
    def __init__(self, tokens: list[_Tok], speaker: str) -> None:
        self.tokens = tokens
        self.i = 0
        self.speaker = speaker

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def peek(self) -> _Tok | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take_pos(self, pos: str, concept: str | None = None) -> LexEntry | None:
        tok = self.peek()
        if tok is None:
            return None
        senses = tok.with_pos(pos)
        if concept is not None:
            senses = [s for s in senses if s.concept == concept]
        if not senses:
            return None
        self.i += 1
        return senses[0]

    def take_surface(self, *surfaces: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.surface in surfaces:
            self.i += 1
            return True
        return False

    def take_np(self) -> _NP | None:
        start = self.i
        owner: str | None = None
        self.take_pos("det")
        poss = self.take_pos("poss")
        if poss is not None:
            owner = self.speaker
        else:
            name = self.take_pos("name")
            if name is not None:
                if self.take_surface("'s"):
                    owner = name.lemma
                else:
                    self.i = start
                    self.take_pos("det")
        tok = self.peek()
        noun_senses = tok.with_pos("noun") if tok is not None else []
        if not noun_senses:
            self.i = start
            return None
        concepts = sorted({s.concept for s in noun_senses})
        if len(concepts) > 1:
            raise AnalysisError(
                "AmbiguousSense",
                f"{tok.surface!r} has {len(concepts)} senses",
                candidates=sorted(s.sense_id for s in noun_senses),
            )
        self.i += 1
        return _NP(concept=concepts[0], owner=owner)


# -- sentence patterns: each returns (speech_act, head, bindings) or None ------


def _p_clarify(c: _Cursor):
    c.take_surface("sorry")
    c.take_pos("name")
    if c.take_pos("marker", "CLARIFICATION") is None:
        return None
    c.take_surface("please rephrase")
    if not c.done():
        return None
    return "REQUEST-INFO", "CLARIFICATION", {}


def _p_ack_stop(c: _Cursor):
    if c.take_pos("marker", "STOP") is None or not c.done():
        return None
    return "ACK", "STOP", {}


def _p_ack(c: _Cursor):
    if c.take_pos("marker", "ACKNOWLEDGE") is None:
        return None
    c.take_pos("name")
    head = "ACKNOWLEDGE"
    bindings: dict[str, str] = {}
    prog = c.take_pos("verb-prog")
    if prog is not None:
        np = c.take_np()
        if np is None:
            return None
        head = prog.concept
        bindings["theme"] = np.concept
        if np.owner:
            bindings["owner"] = np.owner
    if not c.done():
        return None
    return "ACK", head, bindings


def _p_inform_negative(c: _Cursor):
    if not c.take_surface("i"):
        return None
    neg = c.take_pos("verb-neg")
    if neg is None:
        return None
    np = c.take_np()
    if np is None or not c.done():
        return None
    bindings = {"theme": np.concept}
    if np.owner:
        bindings["owner"] = np.owner
    return "INFORM", neg.concept, bindings


def _p_inform_past(c: _Cursor):
    if not c.take_surface("i"):
        return None
    verb = c.take_pos("verb-past")
    if verb is None:
        return None
    np = c.take_np()
    if np is None:
        return None
    bindings = {"theme": np.concept}
    if np.owner:
        bindings["owner"] = np.owner
    if c.take_pos("prep") is not None:
        place = c.take_np()
        if place is None:
            return None
        bindings["location"] = place.concept
    if not c.done():
        return None
    return "INFORM", verb.concept, bindings


def _p_where(c: _Cursor):
    if not c.take_surface("where"):
        return None
    if c.take_pos("be") is None:
        return None
    np = c.take_np()
    if np is None or not c.done():
        return None
    bindings = {"theme": np.concept}
    if np.owner:
        bindings["owner"] = np.owner
    return "REQUEST-INFO", "LOCATION-QUERY", bindings


def _p_statement(c: _Cursor):
    np = c.take_np()
    if np is None:
        return None
    if c.take_pos("be") is None:
        return None
    if c.take_pos("prep") is None:
        return None
    place = c.take_np()
    if place is None or not c.done():
        return None
    bindings = {"theme": np.concept, "location": place.concept}
    if np.owner:
        bindings["owner"] = np.owner
    return "INFORM", "LOCATION-STATEMENT", bindings


def _p_stop(c: _Cursor):
    c.take_surface("please")
    verb = c.take_pos("verb", "STOP")
    if verb is None:
        return None
    c.take_pos("verb-prog")
    c.take_surface("now", "everything")
    if not c.done():
        return None
    return "REQUEST-ACTION", "STOP", {}


_INTRANSITIVE_HEADS = ("SCAN", "HOVER", "RETURN-TO-DOCK")


def _p_bare_verb(c: _Cursor):
    c.take_surface("please")
    verb = c.take_pos("verb")
    if verb is None or verb.concept not in _INTRANSITIVE_HEADS or not c.done():
        return None
    return "REQUEST-ACTION", verb.concept, {}


def _p_request(c: _Cursor):
    c.take_surface("please")
    verb = c.take_pos("verb")
    if verb is None:
        return None
    np = c.take_np()
    if np is None:
        return None
    bindings = {"theme": np.concept}
    if np.owner:
        bindings["owner"] = np.owner
    if c.take_pos("prep") is not None:
        place = c.take_np()
        if place is None:
            return None
        bindings["location"] = place.concept
    if not c.done():
        return None
    return "REQUEST-ACTION", verb.concept, bindings


_PATTERNS = (
    _p_clarify,
    _p_ack_stop,
    _p_ack,
    _p_inform_negative,
    _p_inform_past,
    _p_where,
    _p_statement,
    _p_stop,
    _p_bare_verb,
    _p_request,
)


def analyze(
    utterance: str,
    speaker: str,
    kb: Kb,
    tmr_id: str = "tmr-0",
    tick: int = 0,
    addressee: str = TEAM,
) -> TMR:
    """Analyze one utterance into a TMR; raises AnalysisError when the
    grammar cannot assign a single full-coverage reading."""
    if not utterance.strip():
        raise ValueError("utterance must be non-empty")
    tokens = tokenize(utterance, kb)
    for pattern in _PATTERNS:
        cursor = _Cursor(tokens, speaker)
        result = pattern(cursor)
        if result is not None:
            speech_act, head, bindings = result
            if speech_act == "REQUEST-ACTION":
                bindings = dict(bindings, requester=speaker)
            return TMR(
                tmr_id=tmr_id,
                speech_act=speech_act,
                head=head,
                bindings=bindings,
                speaker=speaker,
                addressee=addressee,
                source_text=utterance,
                tick=tick,
            )
    raise AnalysisError("Unparsed", f"no pattern covers {utterance!r}")
