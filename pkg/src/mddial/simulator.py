"""Agenda-based simulated user with error model and patience limits.

The user keeps a stack of pending acts derived from its goal (informs for the
constraints, requests, then bye) and reacts to each system turn by pushing
responses: answers to slot requests, corrections to wrong confirmations,
requests after a matching offer, repeats after negative feedback. It loses
patience after ``max_turns`` user turns or ``max_repeats`` identical
consecutive system turns.

The semantic error model corrupts each outgoing act independently, producing
scored hypotheses for the tracker; the true acts stay untouched for oracle
bookkeeping and are never shown to the policies.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .acts import DialogueAct, user_act
from .domain import DONTCARE, Ontology, UserGoal, Venue, venue_matches


@dataclass(frozen=True)
class UserConfig:
    max_turns: int = 30
    max_repeats: int = 3
    error_rate: float = 0.25
    problem_rate: float = 0.05


@dataclass(frozen=True)
class ScoredHypothesis:
    act: DialogueAct
    confidence: float
    corrupted: bool = False  # oracle flag: logging only, invisible to policies


@dataclass(frozen=True)
class UserTurnOutcome:
    true_acts: tuple[DialogueAct, ...]
    task_completed_now: bool
    social_penalty_events: int
    hung_up: bool
    hypotheses: list[ScoredHypothesis] | None = None  # filled in by the harness


@dataclass(frozen=True)
class AgendaState:
    goal: UserGoal
    agenda: tuple[DialogueAct, ...]  # index 0 = top of stack; bye at the bottom
    config: UserConfig = field(default_factory=UserConfig)
    satisfied: frozenset[str] = frozenset()
    current_offer: str | None = None
    offer_matching: bool = False
    completed: bool = False
    thanked: bool = False
    said_bye: bool = False
    hung_up: bool = False
    turn_count: int = 0
    last_emitted: tuple[DialogueAct, ...] = ()
    pending_social: str = "none"  # thanking | goodbye | none
    last_system_sig: tuple[DialogueAct, ...] = ()
    system_repeat_run: int = 0


def init_user(goal: UserGoal, rng: np.random.Generator, config: UserConfig | None = None) -> AgendaState:
    """Fresh agenda: constraint informs in random order, then requests, then bye."""
    informs = [
        user_act("inform", ((slot, value),))
        for slot, value in goal.constraints.items()
    ]
    order = rng.permutation(len(informs))
    agenda = [informs[i] for i in order]
    agenda.extend(user_act("request", ((slot, None),)) for slot in goal.requests)
    agenda.append(user_act("bye"))
    return AgendaState(goal=goal, agenda=tuple(agenda), config=config or UserConfig())


def _push(agenda: list[DialogueAct], act: DialogueAct) -> None:
    """Push on top, removing any identical act deeper in the stack."""
    while act in agenda:
        agenda.remove(act)
    agenda.insert(0, act)


def _constraint_inform(goal: UserGoal, slot: str) -> DialogueAct:
    value = goal.constraints.get(slot, DONTCARE)
    return user_act("inform", ((slot, value),))


def user_respond(
    user: AgendaState,
    system_acts: list[DialogueAct],
    db: list[Venue],
    lookup: dict[str, Venue] | None = None,
) -> tuple[AgendaState, UserTurnOutcome]:
    """React to a system turn and produce the next user turn (empty on hang-up).

    Called with an empty system turn to obtain the opening user turn.
    ``lookup`` is an optional prebuilt name->venue map (hot-path shortcut).
    """
    if user.hung_up:
        raise RuntimeError("user_respond called after hang-up")

    goal = user.goal
    venues = lookup if lookup is not None else {v.name: v for v in db}

    # --- social accounting: one chance to respond to a pending thank/bye
    events = 0
    has_accept = any(a.act_type == "accept_thanking" for a in system_acts)
    if user.pending_social == "thanking" and not has_accept:
        events += 1
    if user.pending_social == "none":
        events += sum(1 for a in system_acts if a.act_type in ("accept_thanking", "return_goodbye"))

    # --- patience: identical consecutive system turns
    sig = tuple(system_acts)
    if sig and sig == user.last_system_sig:
        repeat_run = user.system_repeat_run + 1
    else:
        repeat_run = 1 if sig else 0
    out_of_patience = repeat_run >= user.config.max_repeats

    # --- response rules, in system-act order; first rule's pushes pop first
    agenda = list(user.agenda)
    pushes: list[DialogueAct] = []
    satisfied = set(user.satisfied)
    current_offer = user.current_offer
    offer_matching = user.offer_matching
    goodbye_received = False

    for act in system_acts:
        kind = act.act_type
        if kind in ("request_slot", "request"):
            slot = act.payload[0][0]
            pushes.append(_constraint_inform(goal, slot))
        elif kind == "expl_confirm":
            slot, value = act.first_pair()
            goal_value = goal.constraints.get(slot)
            if goal_value is None or goal_value == value:
                pushes.append(user_act("affirm", ((slot, value),)))
            else:
                pushes.append(user_act("negate", ((slot, value),)))
                pushes.append(_constraint_inform(goal, slot))
        elif kind == "impl_confirm":
            slot, value = act.first_pair()
            goal_value = goal.constraints.get(slot)
            if goal_value is not None and goal_value != value:
                pushes.append(user_act("negate", ((slot, value),)))
                pushes.append(_constraint_inform(goal, slot))
        elif kind == "offer":
            payload = dict(act.payload)
            name = payload.get("name")
            venue = venues.get(name)
            if venue is None:
                continue
            if name != current_offer:
                satisfied = set()  # answers referred to the previous venue
                current_offer = name
            if venue_matches(venue, goal.constraints):
                offer_matching = True
                satisfied.add("name")
                for slot in goal.requests:
                    if slot in payload and payload[slot] == venue.value(slot):
                        satisfied.add(slot)
                for slot in goal.requests:
                    if slot not in satisfied:
                        pushes.append(user_act("request", ((slot, None),)))
            else:
                offer_matching = False
                for slot, value in goal.constraints.items():
                    if venue.informable.get(slot) != value:
                        pushes.append(_constraint_inform(goal, slot))
                        break
        elif kind == "answer":
            for slot, _value in act.payload:
                if slot in goal.requests:
                    satisfied.add(slot)
        elif kind == "accept_thanking":
            if user.completed and user.thanked:
                agenda = [a for a in agenda if a.act_type == "bye"]
        elif kind == "return_goodbye":
            goodbye_received = True
        elif kind == "auto_negative":
            pushes.extend(user.last_emitted)

    # --- task completion transition
    all_satisfied = all(slot in satisfied for slot in goal.requests)
    completed = offer_matching and all_satisfied
    completed_now = completed and not user.completed
    if completed_now:
        # pending moves are moot once the task is done: thank, then leave
        agenda = [user_act("thank"), user_act("bye")]
        pushes = []

    for act in reversed(pushes):
        _push(agenda, act)

    # --- emit the next user turn (or hang up)
    new_state = replace(
        user,
        agenda=tuple(agenda),
        satisfied=frozenset(satisfied),
        current_offer=current_offer,
        offer_matching=offer_matching,
        completed=user.completed or completed,
        pending_social="none",
        last_system_sig=sig,
        system_repeat_run=repeat_run,
    )

    if user.said_bye or goodbye_received or out_of_patience or user.turn_count >= user.config.max_turns:
        new_state = replace(new_state, hung_up=True)
        outcome = UserTurnOutcome(
            true_acts=(),
            task_completed_now=completed_now,
            social_penalty_events=events,
            hung_up=True,
        )
        return new_state, outcome

    agenda = list(new_state.agenda)
    emitted: list[DialogueAct] = []
    while agenda:
        act = agenda[0]
        if act.act_type == "request" and act.payload[0][0] in satisfied:
            agenda.pop(0)  # already have this information
            continue
        if act.act_type == "bye" and offer_matching and not new_state.completed:
            # a fitting venue is on the table: keep re-asking for the missing
            # details until patience runs out rather than giving up
            retries = [user_act("request", ((s, None),))
                       for s in goal.requests if s not in satisfied]
            for retry in reversed(retries):
                _push(agenda, retry)
            continue
        emitted.append(agenda.pop(0))
        break
    true_acts = tuple(emitted)

    pending = "none"
    thanked = new_state.thanked
    said_bye = new_state.said_bye
    for act in true_acts:
        if act.act_type == "thank":
            pending, thanked = "thanking", True
        elif act.act_type == "bye":
            pending, said_bye = "goodbye", True

    new_state = replace(
        new_state,
        agenda=tuple(agenda),
        turn_count=new_state.turn_count + 1,
        last_emitted=true_acts,
        pending_social=pending,
        thanked=thanked,
        said_bye=said_bye,
    )
    outcome = UserTurnOutcome(
        true_acts=true_acts,
        task_completed_now=completed_now,
        social_penalty_events=events,
        hung_up=False,
    )
    return new_state, outcome


# ---------------------------------------------------------------------------
# Semantic error model and processing problems

_NEIGHBOUR_TYPES = {
    "inform": "negate",
    "negate": "inform",
    "affirm": "negate",
    "thank": "bye",
    "bye": "thank",
    "request": "reqalts",
    "hello": "thank",
    "reqalts": "request",
}


def _substitute_value(act: DialogueAct, ontology: Ontology, rng: np.random.Generator) -> DialogueAct | None:
    """Swap one payload value (or requested slot) for a plausible wrong one."""
    if act.act_type == "request" and act.payload:
        slot = act.payload[0][0]
        others = [s for s in ontology.requestable if s != slot]
        if not others:
            return None
        return user_act("request", ((others[rng.integers(len(others))], None),))
    if act.act_type in ("inform", "negate", "affirm") and act.payload:
        slot, value = act.payload[0]
        if slot not in ontology.informable:
            return None
        others = [v for v in ontology.values(slot) if v != value]
        if not others:
            return None
        return user_act(act.act_type, ((slot, others[rng.integers(len(others))]),))
    return None


def _substitute_type(act: DialogueAct) -> DialogueAct:
    new_type = _NEIGHBOUR_TYPES.get(act.act_type, "null")
    payload = act.payload if new_type in ("inform", "negate", "affirm") else ()
    if new_type == "request" and act.payload:
        payload = act.payload
    return user_act(new_type, payload)


def apply_error_model(
    true_acts: tuple[DialogueAct, ...] | list[DialogueAct],
    error_rate: float,
    ontology: Ontology,
    rng: np.random.Generator,
) -> list[ScoredHypothesis]:
    """Independently corrupt each act; returns scored hypotheses for the tracker.

    Given corruption the mixture is value substitution 0.7, deletion 0.2,
    act-type substitution 0.1 (renormalised when a kind does not apply).
    """
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError("error_rate must be in [0,1]")
    hypotheses: list[ScoredHypothesis] = []
    for act in true_acts:
        if rng.random() >= error_rate:
            hypotheses.append(ScoredHypothesis(act=act, confidence=float(rng.uniform(0.6, 1.0)), corrupted=False))
            continue
        u = rng.random()
        corrupted_act: DialogueAct | None
        if u < 0.7:
            corrupted_act = _substitute_value(act, ontology, rng)
            if corrupted_act is None:
                # no value to substitute: split the remaining mass 2:1 deletion:type-sub
                corrupted_act = None if rng.random() < 2 / 3 else _substitute_type(act)
        elif u < 0.9:
            corrupted_act = None
        else:
            corrupted_act = _substitute_type(act)
        if corrupted_act is not None:
            hypotheses.append(
                ScoredHypothesis(act=corrupted_act, confidence=float(rng.uniform(0.3, 0.8)), corrupted=True)
            )
    return hypotheses


def maybe_processing_problem(p: float, rng: np.random.Generator) -> bool:
    """True when this user turn is lost to a recognition/understanding failure."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("problem probability must be in [0,1]")
    return bool(rng.random() < p)
