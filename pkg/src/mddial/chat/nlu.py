"""Rule-based understanding of typed user utterances.

Keyword/synonym matches over the ontology become inform acts, interrogative
patterns naming requestable slots become requests, and small lexicons handle
yes/no and social acts. Exact value matches score 0.9, synonym matches 0.7,
so typed input behaves like low-error speech in the tracker. When no rule
fires the result is null, which the tracker records as a processing problem.

Yes/no words only count at the start of an utterance (or in very short ones)
so that system phrasings like "...is that right?" can never be mistaken for
user confirmations.
"""

from __future__ import annotations

import re

from ..acts import user_act
from ..domain import DONTCARE, Ontology
from ..simulator import ScoredHypothesis

EXACT_CONFIDENCE = 0.9
SYNONYM_CONFIDENCE = 0.7

# "okay"/"right" stay out of the lexicon: the system's own confirmation
# templates use them, and template text must never parse as user moves
AFFIRM_WORDS = frozenset({"yes", "yeah", "yep", "yup", "sure", "correct", "indeed"})
NEGATE_WORDS = frozenset({"no", "nope", "nah", "not", "wrong", "incorrect"})
THANK_WORDS = frozenset({"thanks", "thank", "thx", "cheers", "ty"})
BYE_WORDS = frozenset({"bye", "goodbye", "farewell"})
HELLO_WORDS = frozenset({"hi", "hello", "hey", "greetings"})
REQALTS_PHRASES = ("anything else", "something else", "other option", "what else", "another one", "alternatives")

_WH_STARTS = (
    "what", "whats", "which", "where", "wheres", "when", "how", "who",
    "can", "could", "do", "does", "may", "please", "tell", "give", "is", "are", "i need", "i want to know",
)

# requestable detail slots only; informable-slot words (food/area/price) appear
# inside system request templates and would collide
REQUEST_KEYWORDS = {
    "phone": ("phone", "telephone", "number"),
    "address": ("address", "located", "location", "where is", "where it is"),
    "postcode": ("postcode", "post code", "zip"),
    "name": ("name", "called"),
}

_DONTCARE_PATTERNS = {
    "food": ("any food", "any kind of food", "any cuisine", "dont care about the food"),
    "area": ("any area", "anywhere", "any part of town", "dont care where"),
    "pricerange": ("any price", "any price range", "dont care about the price"),
}


def _normalise(text: str) -> str:
    text = text.lower().replace("'", "")
    return re.sub(r"[^a-z0-9? ]+", " ", text).strip()


def parse_utterance(text: str, ontology: Ontology) -> list[ScoredHypothesis] | None:
    """Turn typed text into scored user-act hypotheses, or None if nothing fires."""
    cleaned = _normalise(text)
    tokens = cleaned.replace("?", " ").split()
    if not tokens:
        return None
    padded = f" {cleaned.replace('?', ' ')} "
    hypotheses: list[ScoredHypothesis] = []
    informed_slots: set[str] = set()

    for slot, values in ontology.informable.items():
        for value in values:
            if f" {value} " in padded:
                hypotheses.append(ScoredHypothesis(
                    act=user_act("inform", ((slot, value),)), confidence=EXACT_CONFIDENCE))
                informed_slots.add(slot)
                break
        else:
            for surface, value in ontology.synonyms.items():
                if value in values and f" {surface.lower()} " in padded:
                    hypotheses.append(ScoredHypothesis(
                        act=user_act("inform", ((slot, value),)), confidence=SYNONYM_CONFIDENCE))
                    informed_slots.add(slot)
                    break
    for slot, patterns in _DONTCARE_PATTERNS.items():
        if slot in ontology.informable and slot not in informed_slots:
            if any(p in padded for p in patterns):
                hypotheses.append(ScoredHypothesis(
                    act=user_act("inform", ((slot, DONTCARE),)), confidence=EXACT_CONFIDENCE))
                informed_slots.add(slot)

    interrogative = "?" in cleaned or any(cleaned.startswith(w) for w in _WH_STARTS)
    if interrogative:
        for slot, keywords in REQUEST_KEYWORDS.items():
            if slot not in ontology.requestable or slot in informed_slots:
                continue
            for keyword in keywords:
                if f" {keyword} " in padded or padded.strip().endswith(f" {keyword}"):
                    hypotheses.append(ScoredHypothesis(
                        act=user_act("request", ((slot, None),)), confidence=EXACT_CONFIDENCE))
                    break

    sentence_initial = tokens[0]
    short = len(tokens) <= 3
    if sentence_initial in AFFIRM_WORDS or (short and any(t in AFFIRM_WORDS for t in tokens)):
        hypotheses.append(ScoredHypothesis(act=user_act("affirm"), confidence=EXACT_CONFIDENCE))
    elif sentence_initial in NEGATE_WORDS or (short and any(t in NEGATE_WORDS for t in tokens)):
        hypotheses.append(ScoredHypothesis(act=user_act("negate"), confidence=EXACT_CONFIDENCE))

    if any(t in THANK_WORDS for t in tokens):
        hypotheses.append(ScoredHypothesis(act=user_act("thank"), confidence=EXACT_CONFIDENCE))
    if any(t in BYE_WORDS for t in tokens) or " see you " in padded:
        hypotheses.append(ScoredHypothesis(act=user_act("bye"), confidence=EXACT_CONFIDENCE))
    if any(t in HELLO_WORDS for t in tokens):
        hypotheses.append(ScoredHypothesis(act=user_act("hello"), confidence=EXACT_CONFIDENCE))
    if any(p in padded for p in REQALTS_PHRASES):
        hypotheses.append(ScoredHypothesis(act=user_act("reqalts"), confidence=EXACT_CONFIDENCE))

    return hypotheses or None
