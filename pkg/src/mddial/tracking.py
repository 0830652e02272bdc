"""Rule-based dialogue state tracker and policy feature extraction.

The tracker consumes scored user act hypotheses (or null on a processing
problem) plus the system's own acts, and maintains per-slot beliefs as
(value, confidence) with a simple overwrite-by-confidence rule. The feature
vector layout is fixed per domain and published via ``FeatureMap.index_map``
so that policy weights stay valid for an entire training run.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .acts import DialogueAct, USER_ACT_TYPES
from .domain import DONTCARE, Ontology

# value, confidence, update sequence number (for recency tie-breaks)
Belief = tuple[str, float, int]

SOCIAL_STATES = ("none", "thanking", "goodbye")


@dataclass(frozen=True, slots=True)
class DialogueState:
    beliefs: dict[str, Belief] = field(default_factory=dict)
    requested: frozenset[str] = frozenset()
    offered_venue: str | None = None
    discussed: tuple[str, ...] = ()
    processing_problem: bool = False
    problem_signalled: bool = False
    last_user_acts: tuple[str, ...] = ()
    last_system_acts: tuple[DialogueAct, ...] = ()
    repeat_count: int = 0
    social_pending: str = "none"
    pending_confirm: tuple[str, str] | None = None  # expl_confirm target
    turn_index: int = 0
    update_seq: int = 0
    warning_count: int = 0

    def belief_value(self, slot: str) -> str | None:
        b = self.beliefs.get(slot)
        return b[0] if b else None

    def belief_confidence(self, slot: str) -> float:
        b = self.beliefs.get(slot)
        return b[1] if b else 0.0

    def constraints(self, min_confidence: float = 0.5) -> dict[str, str]:
        """Beliefs usable as database constraints (dontcare excluded)."""
        return {
            slot: value
            for slot, (value, conf, _) in self.beliefs.items()
            if conf > min_confidence and value != DONTCARE
        }

    def to_record(self) -> dict:
        return {
            "beliefs": {s: [v, c] for s, (v, c, _) in self.beliefs.items()},
            "requested": sorted(self.requested),
            "offered_venue": self.offered_venue,
            "processing_problem": self.processing_problem,
            "problem_signalled": self.problem_signalled,
            "social_pending": self.social_pending,
            "repeat_count": self.repeat_count,
            "turn_index": self.turn_index,
        }


def init_state() -> DialogueState:
    return DialogueState()


def update_with_user_input(state: DialogueState, hypotheses, ontology: Ontology) -> DialogueState:
    """Apply one user turn (a list of ScoredHypothesis, or None on a processing problem)."""
    turn = state.turn_index + 1
    if not hypotheses:  # null or empty: understanding returned no results
        return replace(
            state,
            processing_problem=True,
            problem_signalled=False,
            last_user_acts=("null",),
            turn_index=turn,
        )

    beliefs = dict(state.beliefs)
    requested = set(state.requested)
    social = "none"  # a thank/bye is pending for one exchange only
    seq = state.update_seq
    warnings = state.warning_count
    tags = []

    for hyp in hypotheses:
        act: DialogueAct = hyp.act
        conf = hyp.confidence
        tags.append(act.act_type)
        if act.act_type == "inform":
            for slot, value in act.payload:
                if slot not in ontology.informable or (
                    value not in ontology.values(slot) and value != DONTCARE
                ):
                    warnings += 1
                    continue
                current = beliefs.get(slot)
                if current is None or conf >= current[1]:
                    seq += 1
                    beliefs[slot] = (value, conf, seq)
                elif value == current[0]:
                    seq += 1
                    beliefs[slot] = (value, max(conf, current[1]), seq)
        elif act.act_type == "negate":
            payload = act.payload
            if not payload and state.pending_confirm is not None:
                payload = (state.pending_confirm,)  # bare "no" rejects the confirmation
            for slot, value in payload:
                current = beliefs.get(slot)
                if current is not None and current[0] == value:
                    del beliefs[slot]
        elif act.act_type == "affirm":
            if state.pending_confirm is not None:
                slot, value = state.pending_confirm
                current = beliefs.get(slot)
                seq += 1
                new_conf = max(conf, current[1]) if current and current[0] == value else conf
                beliefs[slot] = (value, new_conf, seq)
        elif act.act_type == "request":
            for slot, _ in act.payload:
                if slot in ontology.requestable:
                    requested.add(slot)
                else:
                    warnings += 1
        elif act.act_type == "thank":
            social = "thanking"
        elif act.act_type == "bye":
            social = "goodbye"
        elif act.act_type not in USER_ACT_TYPES:
            warnings += 1

    return replace(
        state,
        beliefs=beliefs,
        requested=frozenset(requested),
        processing_problem=False,
        problem_signalled=False,
        social_pending=social,
        last_user_acts=tuple(tags),
        pending_confirm=state.pending_confirm,
        turn_index=turn,
        update_seq=seq,
        warning_count=warnings,
    )


def update_with_system_acts(state: DialogueState, acts: list[DialogueAct]) -> DialogueState:
    """Record the system's own turn: repeats, offers, answered requests, feedback context."""
    signature = tuple(acts)
    repeat = state.repeat_count + 1 if signature == state.last_system_acts and signature else 0

    offered = state.offered_venue
    discussed = state.discussed
    requested = state.requested
    signalled = state.problem_signalled
    social = state.social_pending
    pending = None  # expl_confirm context lives for exactly one exchange

    for act in acts:
        if act.act_type == "offer":
            for slot, value in act.payload:
                if slot == "name" and value is not None:
                    offered = value
                    if value not in discussed:
                        discussed = discussed + (value,)
        elif act.act_type == "answer":
            answered = {slot for slot, _ in act.payload}
            if answered & requested:
                requested = frozenset(requested - answered)
        elif act.act_type == "auto_negative":
            signalled = True
        elif act.act_type in ("accept_thanking", "return_goodbye"):
            social = "none"
        elif act.act_type == "expl_confirm":
            slot, value = act.payload[0]
            if value is not None:
                pending = (slot, value)

    return replace(
        state,
        offered_venue=offered,
        discussed=discussed,
        requested=requested,
        problem_signalled=signalled,
        social_pending=social,
        pending_confirm=pending,
        last_system_acts=signature,
        repeat_count=repeat,
    )


# ---------------------------------------------------------------------------
# Feature extraction

_CONF_BINS = ("zero", "low", "mid", "high")       # 0, (0,0.3], (0.3,0.7], (0.7,1]
_MATCH_BINS = ("0", "1", "2-4", "5+")
_REPEAT_BINS = ("0", "1", "2+")


def _conf_bin(conf: float) -> int:
    if conf <= 0.0:
        return 0
    if conf <= 0.3:
        return 1
    if conf <= 0.7:
        return 2
    return 3


def _match_bin(count: int) -> int:
    if count <= 0:
        return 0
    if count == 1:
        return 1
    if count <= 4:
        return 2
    return 3


class FeatureMap:
    """Published feature layout for a domain; all policies share it.

    Entries are in [0,1]; everything is a binary flag except the clipped
    turn-progress entry. The layout (and therefore ``feature_hash``) must not
    change within a training run, since weight vectors index into it.
    """

    def __init__(self, ontology: Ontology, max_turns: int = 30):
        self.ontology = ontology
        self.max_turns = max_turns
        self.informable = ontology.informable_slots
        self.requestable = ontology.requestable
        names: list[str] = []
        for slot in self.informable:
            names.extend(f"belief_{slot}_conf_{b}" for b in _CONF_BINS)
        names.extend(f"constrained_{slot}" for slot in self.informable)
        names.extend(f"requested_{slot}" for slot in self.requestable)
        names.extend(f"db_matches_{b}" for b in _MATCH_BINS)
        names.append("offered_venue_present")
        names.append("offer_matches_beliefs")
        names.append("processing_problem")
        names.append("problem_signalled")
        names.extend(f"social_pending_{s}" for s in SOCIAL_STATES)
        names.extend(f"last_user_act_{t}" for t in USER_ACT_TYPES)
        names.extend(f"repeat_count_{b}" for b in _REPEAT_BINS)
        names.append("pending_expl_confirm")
        names.append("turn_progress")
        names.append("bias")
        self.names = tuple(names)
        self.index = {name: i for i, name in enumerate(names)}
        self._user_act_index = {t: self.index[f"last_user_act_{t}"] for t in USER_ACT_TYPES}

    def __len__(self) -> int:
        return len(self.names)

    def index_map(self) -> list[tuple[int, str]]:
        return list(enumerate(self.names))

    def feature_hash(self) -> str:
        return hashlib.sha1("|".join(self.names).encode()).hexdigest()[:16]

    def extract(self, state: DialogueState, db_match_count: int, offer_matches: bool = False) -> np.ndarray:
        out = np.zeros(len(self.names))
        i = 0
        for slot in self.informable:
            b = state.beliefs.get(slot)
            out[i + _conf_bin(b[1] if b else 0.0)] = 1.0
            i += 4
        for slot in self.informable:
            b = state.beliefs.get(slot)
            if b is not None and b[0] != DONTCARE:
                out[i] = 1.0
            i += 1
        for slot in self.requestable:
            if slot in state.requested:
                out[i] = 1.0
            i += 1
        out[i + _match_bin(db_match_count)] = 1.0
        i += 4
        if state.offered_venue is not None:
            out[i] = 1.0
        if offer_matches:
            out[i + 1] = 1.0
        if state.processing_problem:
            out[i + 2] = 1.0
        if state.problem_signalled:
            out[i + 3] = 1.0
        i += 4
        out[i + SOCIAL_STATES.index(state.social_pending)] = 1.0
        i += 3
        for tag in state.last_user_acts:
            idx = self._user_act_index.get(tag)
            if idx is not None:
                out[idx] = 1.0
        i += len(USER_ACT_TYPES)
        out[i + min(state.repeat_count, 2)] = 1.0
        i += 3
        if state.pending_confirm is not None:
            out[i] = 1.0
        out[i + 1] = min(state.turn_index / self.max_turns, 1.0)
        out[i + 2] = 1.0  # bias
        return out
