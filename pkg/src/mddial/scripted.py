"""Hand-written reference behaviour: a rule responder and its linear-weight twin.

``scripted_response`` is the obvious optimal strategy for the restaurant task
(signal problems, honour social obligations, answer open requests, request
unfilled slots in priority order, otherwise offer). It is the liveness oracle
for the simulator and a debugging baseline.

``handcrafted_ensemble`` renders the same strategy as explicit weight vectors
over the published feature layout, giving real ``LinearPolicy`` objects that
behave sensibly without training — used to seed demo chat pools and to drive
service contract tests.
"""

from __future__ import annotations

import numpy as np

from .acts import DialogueAct, sys_act
from .domain import DatabaseIndex, Ontology
from .selection import (
    AgentEnsemble,
    SelectionThresholds,
    fresh_ensemble,
    realize_answer,
    realize_offer,
    realize_request,
)
from .tracking import DialogueState, FeatureMap


def scripted_response(
    state: DialogueState,
    ontology: Ontology,
    index: DatabaseIndex,
    thresholds: SelectionThresholds | None = None,
) -> list[DialogueAct]:
    thresholds = thresholds or SelectionThresholds()
    if state.processing_problem:
        return [sys_act("auto_negative")]
    if state.social_pending == "thanking":
        return [sys_act("accept_thanking")]
    if state.social_pending == "goodbye":
        return [sys_act("return_goodbye")]
    if state.requested and state.offered_venue is not None:
        act = realize_answer(state, index)
        if not act.is_none:
            return [act]
    for slot in ontology.informable_slots:
        if state.belief_confidence(slot) < thresholds.request_threshold:
            return [realize_request(slot, state, ontology, thresholds)]
    return [realize_offer(state, index, thresholds)]


def make_scripted_responder(ontology: Ontology, index: DatabaseIndex):
    def respond(state: DialogueState) -> list[DialogueAct]:
        return scripted_response(state, ontology, index)
    return respond


# ---------------------------------------------------------------------------
# The same strategy as linear weights

def _w(policy_weights: np.ndarray, action_idx: int, fmap: FeatureMap, name: str, value: float) -> None:
    policy_weights[action_idx, fmap.index[name]] = value


def _task_weights(weights: np.ndarray, actions: tuple[str, ...], fmap: FeatureMap) -> None:
    slots = fmap.informable
    for i, label in enumerate(actions):
        if "+" in label:  # combined one-dim actions stay unused in the scripted strategy
            _w(weights, i, fmap, "bias", -1.0)
        elif label == "offer":
            for slot in slots:
                _w(weights, i, fmap, f"belief_{slot}_conf_mid", 3.0)
                _w(weights, i, fmap, f"belief_{slot}_conf_high", 3.0)
        elif label == "request":
            for slot in slots:
                _w(weights, i, fmap, f"belief_{slot}_conf_zero", 8.0)
                _w(weights, i, fmap, f"belief_{slot}_conf_low", 8.0)
        elif label.startswith("request_"):
            slot = label[len("request_"):]
            _w(weights, i, fmap, f"belief_{slot}_conf_zero", 8.0)
            _w(weights, i, fmap, f"belief_{slot}_conf_low", 8.0)
        elif label == "answer":
            for slot in fmap.requestable:
                _w(weights, i, fmap, f"requested_{slot}", 10.0)
            _w(weights, i, fmap, "offered_venue_present", 10.0)
            _w(weights, i, fmap, "bias", -10.0)


def _feedback_weights(weights: np.ndarray, actions: tuple[str, ...], fmap: FeatureMap) -> None:
    for i, label in enumerate(actions):
        if label == "auto_negative":
            _w(weights, i, fmap, "processing_problem", 50.0)
            _w(weights, i, fmap, "bias", -5.0)
        elif label in ("impl_confirm", "expl_confirm"):
            _w(weights, i, fmap, "bias", -1.0)


def _social_weights(weights: np.ndarray, actions: tuple[str, ...], fmap: FeatureMap) -> None:
    for i, label in enumerate(actions):
        if label == "accept_thanking":
            _w(weights, i, fmap, "social_pending_thanking", 50.0)
            _w(weights, i, fmap, "bias", -5.0)
        elif label == "return_goodbye":
            _w(weights, i, fmap, "social_pending_goodbye", 50.0)
            _w(weights, i, fmap, "bias", -5.0)


def handcrafted_ensemble(
    variant: str,
    scenario: str,
    feature_map: FeatureMap,
    thresholds: SelectionThresholds | None = None,
) -> AgentEnsemble:
    """An untrained-but-competent ensemble encoding the scripted strategy."""
    ensemble = fresh_ensemble(variant, scenario, feature_map, thresholds)
    fmap = feature_map
    if variant == "one_dim":
        policy = ensemble.policies["onedim"]
        _task_weights(policy.weights, policy.action_set.actions, fmap)
        _feedback_weights(policy.weights, policy.action_set.actions, fmap)
        _social_weights(policy.weights, policy.action_set.actions, fmap)
        return ensemble

    task = ensemble.policies["task"]
    _task_weights(task.weights, task.action_set.actions, fmap)
    feedback = ensemble.policies["autofeedback"]
    _feedback_weights(feedback.weights, feedback.action_set.actions, fmap)
    social = ensemble.policies["som"]
    _social_weights(social.weights, social.action_set.actions, fmap)

    evaluation = ensemble.policies["evaluation"]
    bias = fmap.index["bias"]
    base = len(fmap)
    task_bit, af_bit, som_bit = base, base + 1, base + 2
    for i, label in enumerate(evaluation.action_set.actions):
        evaluation.weights[i, bias] = -10.0
        if label == "task":
            evaluation.weights[i, task_bit] = 20.0
        elif label == "autofeedback":
            evaluation.weights[i, af_bit] = 40.0
        elif label == "som":
            evaluation.weights[i, som_bit] = 60.0
        elif label == "task+autofeedback":
            evaluation.weights[i, task_bit] = 5.0
            evaluation.weights[i, af_bit] = 5.0
    return ensemble
