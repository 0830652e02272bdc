"""Per-turn response selection for all four system variants.

Multi-dimensional variants run one policy per dimension to propose candidate
acts, realize them against the current state, and let a learned Evaluation
agent pick which dimensions' acts form the final turn (subject to the
combination mask). The one-dimensional baseline picks one flattened action
from the combined set and realizes its components directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .acts import (
    COMBINATIONS,
    DIMENSIONS,
    ActionSet,
    DialogueAct,
    Dimension,
    action_set,
    combination_mask,
    combine,
    none_act,
    sys_act,
)
from .domain import DONTCARE, DatabaseIndex, Ontology, venue_matches
from .policy import EpisodeTrace, LinearPolicy, new_policy, select_action
from .tracking import DialogueState, FeatureMap

VARIANTS = ("one_dim", "multi_dim", "mdim_ada", "mdim_src")

MDIM_AGENTS = ("task", "autofeedback", "som", "evaluation")

# extra evaluation-agent inputs: which realized candidates are non-none
EVAL_EXTRA_FEATURES = ("task_candidate", "autofeedback_candidate", "som_candidate")


@dataclass(frozen=True)
class SelectionThresholds:
    request_threshold: float = 0.5   # summary request targets slots below this
    use_threshold: float = 0.5       # beliefs above this constrain offers/matches
    impl_low: float = 0.5            # impl band [impl_low, impl_high)
    impl_high: float = 0.9
    expl_low: float = 0.3            # expl band [expl_low, impl_low)


@dataclass
class AgentEnsemble:
    variant: str
    scenario: str
    policies: dict[str, LinearPolicy]
    feature_map: FeatureMap
    thresholds: SelectionThresholds = field(default_factory=SelectionThresholds)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        expected = ("onedim",) if self.variant == "one_dim" else MDIM_AGENTS
        if set(self.policies) != set(expected):
            raise ValueError(f"variant {self.variant} needs policies {expected}, got {tuple(self.policies)}")

    @property
    def agent_kinds(self) -> tuple[str, ...]:
        return ("onedim",) if self.variant == "one_dim" else MDIM_AGENTS


def evaluation_feature_length(feature_map: FeatureMap) -> int:
    return len(feature_map) + len(EVAL_EXTRA_FEATURES)


def fresh_ensemble(
    variant: str,
    scenario: str,
    feature_map: FeatureMap,
    thresholds: SelectionThresholds | None = None,
) -> AgentEnsemble:
    """Zero-weight policies for every agent the variant needs."""
    slots = feature_map.ontology.informable_slots
    fhash = feature_map.feature_hash()
    if variant == "one_dim":
        policies = {"onedim": new_policy(action_set("onedim", scenario, slots), len(feature_map), fhash)}
    else:
        policies = {
            kind: new_policy(
                action_set(kind, scenario, slots),
                evaluation_feature_length(feature_map) if kind == "evaluation" else len(feature_map),
                fhash,
            )
            for kind in MDIM_AGENTS
        }
    return AgentEnsemble(
        variant=variant,
        scenario=scenario,
        policies=policies,
        feature_map=feature_map,
        thresholds=thresholds or SelectionThresholds(),
    )


# ---------------------------------------------------------------------------
# Realization: abstract policy actions -> concrete dialogue acts

def realize_request(slot_or_summary: str | None, state: DialogueState, ontology: Ontology,
                    thresholds: SelectionThresholds) -> DialogueAct:
    """Summary form picks the first low-confidence slot by fixed priority; the
    slot-specific form passes its slot through unchanged."""
    if slot_or_summary is not None:
        return sys_act("request_slot", ((slot_or_summary, None),))
    for slot in ontology.informable_slots:
        if state.belief_confidence(slot) < thresholds.request_threshold:
            return sys_act("request_slot", ((slot, None),))
    lowest = min(ontology.informable_slots, key=lambda s: (state.belief_confidence(s),))
    return sys_act("request_slot", ((lowest, None),))


def realize_offer(state: DialogueState, index: DatabaseIndex,
                  thresholds: SelectionThresholds) -> DialogueAct:
    """Offer the first venue matching all confident beliefs, else the venue
    matching the largest belief subset (database order breaks ties)."""
    if not index.db:
        raise ValueError("cannot offer from an empty database")
    constraints = state.constraints(thresholds.use_threshold)
    venue = index.first_match(constraints)
    if venue is None:
        best, best_count = None, -1
        for candidate in index.db:
            count = sum(1 for s, v in constraints.items() if candidate.informable.get(s) == v)
            if count > best_count:
                best, best_count = candidate, count
        venue = best
    payload = (("name", venue.name),) + tuple(venue.informable.items())
    return sys_act("offer", payload)


def realize_confirm(kind: str, state: DialogueState, thresholds: SelectionThresholds) -> DialogueAct:
    """Confirm one belief whose confidence sits in the kind's band; degrade to
    none when there is nothing to confirm."""
    if not state.beliefs:
        return none_act(Dimension.AUTOFEEDBACK)
    if kind == "impl_confirm":
        low, high = thresholds.impl_low, thresholds.impl_high
    else:
        low, high = thresholds.expl_low, thresholds.impl_low
    in_band = [(seq, slot, value) for slot, (value, conf, seq) in state.beliefs.items() if low <= conf < high]
    if in_band:
        _, slot, value = max(in_band)
    else:
        _, slot, value = max((seq, slot, value) for slot, (value, conf, seq) in state.beliefs.items())
    return sys_act(kind, ((slot, value),))


def realize_answer(state: DialogueState, index: DatabaseIndex) -> DialogueAct:
    """Answer every currently requested slot with the offered venue's values."""
    if state.offered_venue is None or not state.requested:
        return none_act(Dimension.TASK)
    venue = index.by_name.get(state.offered_venue)
    if venue is None:
        return none_act(Dimension.TASK)
    payload = tuple((slot, venue.value(slot)) for slot in sorted(state.requested))
    return sys_act("answer", payload)


def realize_abstract(label: str, state: DialogueState, index: DatabaseIndex,
                     ontology: Ontology, thresholds: SelectionThresholds,
                     dimension: Dimension) -> DialogueAct:
    if label == "none":
        return none_act(dimension)
    if label == "offer":
        return realize_offer(state, index, thresholds)
    if label == "request":
        return realize_request(None, state, ontology, thresholds)
    if label.startswith("request_"):
        return realize_request(label[len("request_"):], state, ontology, thresholds)
    if label == "answer":
        return realize_answer(state, index)
    if label in ("impl_confirm", "expl_confirm"):
        return realize_confirm(label, state, thresholds)
    if label in ("auto_negative", "accept_thanking", "return_goodbye"):
        return sys_act(label)
    raise ValueError(f"unknown abstract action {label!r}")


_KIND_DIMENSION = {
    "task": Dimension.TASK,
    "autofeedback": Dimension.AUTOFEEDBACK,
    "som": Dimension.SOM,
}

FALLBACK_ACT = sys_act("auto_negative")


@dataclass
class AgentStep:
    features: np.ndarray
    mask: np.ndarray
    action: int
    probabilities: np.ndarray


@dataclass
class SelectionTrace:
    steps: dict[str, AgentStep]
    final_acts: list[DialogueAct]


def state_features(state: DialogueState, index: DatabaseIndex, feature_map: FeatureMap,
                   thresholds: SelectionThresholds) -> np.ndarray:
    constraints = state.constraints(thresholds.use_threshold)
    match_count = index.count(constraints)
    offer_matches = False
    if state.offered_venue is not None:
        venue = index.by_name.get(state.offered_venue)
        offer_matches = venue is not None and venue_matches(venue, constraints)
    return feature_map.extract(state, match_count, offer_matches)


def select_response(
    ensemble: AgentEnsemble,
    state: DialogueState,
    index: DatabaseIndex,
    temperature: float,
    explore: bool = True,
    rng: np.random.Generator | None = None,
) -> tuple[list[DialogueAct], SelectionTrace]:
    """One system turn: never returns an empty act list."""
    ontology = ensemble.feature_map.ontology
    thresholds = ensemble.thresholds
    phi = state_features(state, index, ensemble.feature_map, thresholds)
    steps: dict[str, AgentStep] = {}

    if ensemble.variant == "one_dim":
        policy = ensemble.policies["onedim"]
        mask = np.ones(policy.n_actions, dtype=bool)
        action, probs = select_action(policy, phi, mask, temperature, rng, explore)
        steps["onedim"] = AgentStep(phi, mask, action, probs)
        label = policy.action_set.actions[action]
        acts = []
        for part in reversed(label.split("+")):  # feedback act precedes the task act
            dim = Dimension.AUTOFEEDBACK if part in ("impl_confirm", "expl_confirm", "auto_negative") else (
                Dimension.SOM if part in ("accept_thanking", "return_goodbye") else Dimension.TASK)
            act = realize_abstract(part, state, index, ontology, thresholds, dim)
            if not act.is_none:
                acts.append(act)
        if not acts:
            acts = [FALLBACK_ACT]
        return acts, SelectionTrace(steps=steps, final_acts=acts)

    candidates: dict[Dimension, DialogueAct] = {}
    for kind in ("task", "autofeedback", "som"):
        policy = ensemble.policies[kind]
        mask = np.ones(policy.n_actions, dtype=bool)
        action, probs = select_action(policy, phi, mask, temperature, rng, explore)
        steps[kind] = AgentStep(phi, mask, action, probs)
        label = policy.action_set.actions[action]
        dim = _KIND_DIMENSION[kind]
        candidates[dim] = realize_abstract(label, state, index, ontology, thresholds, dim)

    eval_policy = ensemble.policies["evaluation"]
    eval_phi = np.empty(len(phi) + 3)
    eval_phi[: len(phi)] = phi
    eval_phi[len(phi)] = 0.0 if candidates[Dimension.TASK].is_none else 1.0
    eval_phi[len(phi) + 1] = 0.0 if candidates[Dimension.AUTOFEEDBACK].is_none else 1.0
    eval_phi[len(phi) + 2] = 0.0 if candidates[Dimension.SOM].is_none else 1.0

    allowed = combination_mask(candidates)
    mask = np.fromiter((c in allowed for c in COMBINATIONS), dtype=bool, count=len(COMBINATIONS))
    action, probs = select_action(eval_policy, eval_phi, mask, temperature, rng, explore)
    steps["evaluation"] = AgentStep(eval_phi, mask, action, probs)

    acts = combine(COMBINATIONS[action], candidates)
    if not acts:
        acts = [FALLBACK_ACT]  # a system turn is never silent
    return acts, SelectionTrace(steps=steps, final_acts=acts)


def record_traces(traces: dict[str, EpisodeTrace], selection: SelectionTrace) -> None:
    """Append one turn's per-agent decisions to the running episode traces."""
    for kind, step in selection.steps.items():
        traces[kind].append(step.features, step.action)


def set_last_rewards(traces: dict[str, EpisodeTrace], reward: float) -> None:
    for trace in traces.values():
        trace.rewards[-1] = reward
