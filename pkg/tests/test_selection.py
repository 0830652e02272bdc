from __future__ import annotations

import numpy as np
import pytest

from mddial.acts import Dimension, sys_act, user_act
from mddial.selection import (
    SelectionThresholds,
    fresh_ensemble,
    realize_answer,
    realize_confirm,
    realize_offer,
    realize_request,
    select_response,
)
from mddial.scripted import handcrafted_ensemble
from mddial.simulator import ScoredHypothesis
from mddial.tracking import init_state, update_with_system_acts, update_with_user_input

TH = SelectionThresholds()


def state_with(ontology, informs, system_acts=(), requests=()):
    state = init_state()
    hyps = [ScoredHypothesis(act=user_act("inform", ((s, v),)), confidence=c) for s, v, c in informs]
    hyps += [ScoredHypothesis(act=user_act("request", ((s, None),)), confidence=0.9) for s in requests]
    if hyps:
        state = update_with_user_input(state, hyps, ontology)
    if system_acts:
        state = update_with_system_acts(state, list(system_acts))
    return state


class TestRealizeRequest:
    def test_summary_picks_first_low_confidence_by_priority(self, ontology):
        state = state_with(ontology, [("food", "indian", 0.9)])
        act = realize_request(None, state, ontology, TH)
        assert act.payload == (("area", None),)

    def test_slot_specific_passthrough(self, ontology):
        act = realize_request("pricerange", init_state(), ontology, TH)
        assert act.act_type == "request_slot"
        assert act.payload == (("pricerange", None),)

    def test_all_confident_falls_back_to_lowest(self, ontology):
        state = state_with(ontology, [("food", "indian", 0.9), ("area", "north", 0.7), ("pricerange", "cheap", 0.8)])
        act = realize_request(None, state, ontology, TH)
        assert act.payload == (("area", None),)


class TestRealizeOffer:
    def test_unique_match_offered(self, domain):
        venue = domain.db[10]
        informs = [(s, v, 0.9) for s, v in venue.informable.items()]
        state = state_with(domain.ontology, informs)
        act = realize_offer(state, domain.index, TH)
        offered = dict(act.payload)["name"]
        match = domain.index.by_name[offered]
        assert match.informable == venue.informable

    def test_empty_beliefs_offer_first_venue(self, domain):
        act = realize_offer(init_state(), domain.index, TH)
        assert dict(act.payload)["name"] == domain.db[0].name

    def test_no_full_match_maximal_subset_oracle(self, domain):
        """No venue matches all three -> offer must equal the brute-force best-subset scan."""
        combos = [
            {"food": f, "area": a, "pricerange": p}
            for f in domain.ontology.values("food")
            for a in domain.ontology.values("area")
            for p in domain.ontology.values("pricerange")
        ]
        unmatched = next(c for c in combos if not any(
            all(v.informable[s] == val for s, val in c.items()) for v in domain.db))
        state = state_with(domain.ontology, [(s, v, 0.9) for s, v in unmatched.items()])
        act = realize_offer(state, domain.index, TH)
        offered = dict(act.payload)["name"]

        best, best_count = None, -1
        for venue in domain.db:  # independent subset scan
            count = sum(1 for s, v in unmatched.items() if venue.informable[s] == v)
            if count > best_count:
                best, best_count = venue, count
        assert offered == best.name

    def test_empty_database_rejected(self, domain):
        from mddial.domain import DatabaseIndex

        with pytest.raises(ValueError):
            realize_offer(init_state(), DatabaseIndex([]), TH)


class TestRealizeConfirm:
    def test_impl_band_selection(self, ontology):
        state = state_with(ontology, [("food", "indian", 0.65)])
        act = realize_confirm("impl_confirm", state, TH)
        assert act.act_type == "impl_confirm"
        assert act.payload == (("food", "indian"),)

    def test_no_beliefs_degrades_to_none(self, ontology):
        act = realize_confirm("impl_confirm", init_state(), TH)
        assert act.is_none

    def test_two_in_band_most_recent_wins(self, ontology):
        state = state_with(ontology, [("food", "indian", 0.65)])
        state = update_with_user_input(
            state, [ScoredHypothesis(act=user_act("inform", (("area", "north"),)), confidence=0.6)], ontology)
        act = realize_confirm("impl_confirm", state, TH)
        assert act.payload == (("area", "north"),)

    def test_expl_band(self, ontology):
        state = state_with(ontology, [("food", "indian", 0.4), ("area", "north", 0.9)])
        act = realize_confirm("expl_confirm", state, TH)
        assert act.payload == (("food", "indian"),)


class TestRealizeAnswer:
    def test_answers_requested_slot(self, domain):
        venue = domain.db[2]
        state = state_with(domain.ontology, [], requests=["phone"],
                           system_acts=[sys_act("offer", (("name", venue.name),))])
        state = update_with_user_input(
            state, [ScoredHypothesis(act=user_act("request", (("phone", None),)), confidence=0.9)], domain.ontology)
        act = realize_answer(state, domain.index)
        assert act.payload == (("phone", venue.extra["phone"]),)

    def test_no_requests_degrades_to_none(self, domain):
        state = update_with_system_acts(init_state(), [sys_act("offer", (("name", domain.db[0].name),))])
        assert realize_answer(state, domain.index).is_none

    def test_multiple_requests_one_act(self, domain):
        venue = domain.db[2]
        state = update_with_system_acts(init_state(), [sys_act("offer", (("name", venue.name),))])
        state = update_with_user_input(state, [
            ScoredHypothesis(act=user_act("request", (("phone", None),)), confidence=0.9),
            ScoredHypothesis(act=user_act("request", (("address", None),)), confidence=0.9),
        ], domain.ontology)
        act = realize_answer(state, domain.index)
        assert dict(act.payload) == {"phone": venue.extra["phone"], "address": venue.extra["address"]}


class TestSelectResponse:
    def test_processing_problem_with_competent_feedback_yields_auto_negative(self, domain):
        ensemble = handcrafted_ensemble("multi_dim", "target", domain.feature_map)
        state = update_with_user_input(init_state(), None, domain.ontology)
        acts, trace = select_response(ensemble, state, domain.index, temperature=1.0, explore=False)
        assert [a.act_type for a in acts] == ["auto_negative"]

    def test_one_dim_returns_at_most_two_acts(self, domain):
        ensemble = fresh_ensemble("one_dim", "target", domain.feature_map)
        rng = np.random.default_rng(3)
        state = state_with(domain.ontology, [("food", "indian", 0.8)])
        for _ in range(60):
            acts, _ = select_response(ensemble, state, domain.index, 5.0, explore=True, rng=rng)
            assert 1 <= len(acts) <= 2

    def test_evaluation_pair_selection_emits_two_acts(self, domain):
        ensemble = fresh_ensemble("multi_dim", "target", domain.feature_map)
        idx = ensemble.policies["task"].action_set.index("offer")
        ensemble.policies["task"].weights[idx, domain.feature_map.index["bias"]] = 50.0
        idx = ensemble.policies["autofeedback"].action_set.index("impl_confirm")
        ensemble.policies["autofeedback"].weights[idx, domain.feature_map.index["bias"]] = 50.0
        pair = ensemble.policies["evaluation"].action_set.index("task+autofeedback")
        ensemble.policies["evaluation"].weights[pair, len(domain.feature_map) + 0] = 30.0
        ensemble.policies["evaluation"].weights[pair, len(domain.feature_map) + 1] = 30.0
        state = state_with(domain.ontology, [("food", "indian", 0.65)])
        acts, _ = select_response(ensemble, state, domain.index, 1.0, explore=False)
        assert [a.act_type for a in acts] == ["impl_confirm", "offer"]

    def test_never_empty_and_deterministic_when_greedy(self, domain):
        ensemble = fresh_ensemble("multi_dim", "target", domain.feature_map)
        state = init_state()
        first, _ = select_response(ensemble, state, domain.index, 1.0, explore=False)
        second, _ = select_response(ensemble, state, domain.index, 1.0, explore=False)
        assert first and first == second

    def test_all_none_fallback_is_auto_negative(self, domain):
        ensemble = fresh_ensemble("multi_dim", "target", domain.feature_map)
        # force every agent toward "none": hand-set a large bias on the none rows
        for kind in ("task", "autofeedback", "som"):
            policy = ensemble.policies[kind]
            none_idx = policy.action_set.index("none")
            policy.weights[none_idx, domain.feature_map.index["bias"]] = 99.0
        acts, _ = select_response(ensemble, init_state(), domain.index, 1.0, explore=False)
        assert [a.act_type for a in acts] == ["auto_negative"]


class TestFunctionalEquivalence:
    @pytest.mark.parametrize("scenario", ["source", "target"])
    def test_onedim_realizations_subset_of_multidim_combinations(self, domain, scenario):
        """Each one-dim action realizes to act sequences reachable by legal combinations."""
        from mddial.acts import action_set, combination_mask, combine
        from mddial.selection import realize_abstract

        onedim = action_set("onedim", scenario, domain.ontology.informable_slots)
        state = state_with(domain.ontology, [("food", "indian", 0.65), ("area", "north", 0.8)])

        multi_sequences = set()
        task_set = action_set("task", scenario, domain.ontology.informable_slots)
        af_set = action_set("autofeedback", scenario, domain.ontology.informable_slots)
        som_set = action_set("som", scenario, domain.ontology.informable_slots)
        for t in task_set.actions:
            for a in af_set.actions:
                for s in som_set.actions:
                    candidates = {
                        Dimension.TASK: realize_abstract(t, state, domain.index, domain.ontology, TH, Dimension.TASK),
                        Dimension.AUTOFEEDBACK: realize_abstract(a, state, domain.index, domain.ontology, TH, Dimension.AUTOFEEDBACK),
                        Dimension.SOM: realize_abstract(s, state, domain.index, domain.ontology, TH, Dimension.SOM),
                    }
                    for selection in combination_mask(candidates):
                        seq = tuple(combine(selection, candidates))
                        if seq:
                            multi_sequences.add(seq)

        from mddial.selection import FALLBACK_ACT

        for label in onedim.actions:
            acts = []
            for part in reversed(label.split("+")):
                dim = (Dimension.AUTOFEEDBACK if part in ("impl_confirm", "expl_confirm", "auto_negative")
                       else Dimension.SOM if part in ("accept_thanking", "return_goodbye")
                       else Dimension.TASK)
                act = realize_abstract(part, state, domain.index, domain.ontology, TH, dim)
                if not act.is_none:
                    acts.append(act)
            if not acts:  # both designs fall back to negative feedback on an empty turn
                acts = [FALLBACK_ACT]
            assert tuple(acts) in multi_sequences

    def test_summary_and_slot_specific_requests_cover_same_space(self, domain):
        state = state_with(domain.ontology, [("food", "indian", 0.9)])
        summary = realize_request(None, state, domain.ontology, TH)
        specific = {realize_request(s, state, domain.ontology, TH).payload[0][0]
                    for s in domain.ontology.informable_slots}
        assert summary.payload[0][0] in specific
        assert specific == set(domain.ontology.informable_slots)
