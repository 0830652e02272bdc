from __future__ import annotations

import numpy as np
import pytest

from mddial.acts import sys_act, user_act
from mddial.domain import UserGoal, query_database
from mddial.harness import run_dialogue
from mddial.scripted import make_scripted_responder
from mddial.simulator import (
    AgendaState,
    UserConfig,
    apply_error_model,
    init_user,
    maybe_processing_problem,
    user_respond,
)


def goal_for(domain, constraints, requests=("name", "phone")):
    assert query_database(domain.db, constraints), "test goal must be satisfiable"
    return UserGoal(constraints=constraints, requests=tuple(requests), satisfiable=True)


def matching_venue(domain, goal):
    return query_database(domain.db, goal.constraints)[0]


def offer_act(venue):
    return sys_act("offer", (("name", venue.name),) + tuple(venue.informable.items()))


def drain_first_turn(user, domain):
    user, out = user_respond(user, [], domain.db)
    return user, out


class TestAgendaInit:
    def test_order_informs_requests_bye(self, domain, rng):
        goal = goal_for(domain, {"food": domain.db[0].informable["food"]}, ("name", "phone"))
        user = init_user(goal, rng)
        kinds = [a.act_type for a in user.agenda]
        assert kinds[0] == "inform"
        assert kinds[1:3] == ["request", "request"]
        assert kinds[-1] == "bye"

    def test_fixed_seed_fixed_order(self, domain):
        goal = goal_for(domain, {"food": "indian", "area": "north", "pricerange": "cheap"}
                        if query_database(domain.db, {"food": "indian", "area": "north", "pricerange": "cheap"})
                        else dict(domain.db[0].informable))
        a = init_user(goal, np.random.default_rng(4))
        b = init_user(goal, np.random.default_rng(4))
        assert a.agenda == b.agenda

    def test_bye_always_bottom(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[3].informable))
        user = init_user(goal, rng)
        assert user.agenda[-1].act_type == "bye"


class TestResponseRules:
    def test_request_constrained_slot_informs_goal_value(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        slot = next(iter(goal.constraints))
        user, out = user_respond(user, [sys_act("request_slot", ((slot, None),))], domain.db)
        assert out.true_acts[0].act_type == "inform"
        assert out.true_acts[0].payload == ((slot, goal.constraints[slot]),)

    def test_request_unconstrained_slot_informs_dontcare(self, domain, rng):
        venue = domain.db[0]
        goal = goal_for(domain, {"food": venue.informable["food"]})
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [sys_act("request_slot", (("area", None),))], domain.db)
        assert out.true_acts[0].payload == (("area", "dontcare"),)

    def test_expl_confirm_correct_affirms(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        slot, value = next(iter(goal.constraints.items()))
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [sys_act("expl_confirm", ((slot, value),))], domain.db)
        assert out.true_acts[0].act_type == "affirm"

    def test_expl_confirm_wrong_negates_then_corrects(self, domain, rng):
        goal = goal_for(domain, {"food": domain.db[0].informable["food"]})
        wrong = next(v for v in domain.ontology.values("food") if v != goal.constraints["food"])
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [sys_act("expl_confirm", (("food", wrong),))], domain.db)
        assert out.true_acts[0].act_type == "negate"
        user, out = user_respond(user, [sys_act("request_slot", (("area", None),))], domain.db)
        # correction inform was pushed beneath the negate, area answer replaces it on top
        assert out.true_acts[0].act_type == "inform"

    def test_wrong_impl_confirm_triggers_correction(self, domain, rng):
        goal = goal_for(domain, {"food": domain.db[0].informable["food"]})
        wrong = next(v for v in domain.ontology.values("food") if v != goal.constraints["food"])
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [sys_act("impl_confirm", (("food", wrong),))], domain.db)
        assert out.true_acts[0] == user_act("negate", (("food", wrong),))

    def test_matching_offer_pushes_requests_then_thank_on_answer(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[5].informable), ("name", "phone"))
        venue = matching_venue(domain, goal)
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [offer_act(venue)], domain.db)
        assert out.true_acts[0] == user_act("request", (("phone", None),))
        assert not out.task_completed_now
        user, out = user_respond(user, [sys_act("answer", (("phone", venue.extra["phone"]),))], domain.db)
        assert out.task_completed_now
        assert out.true_acts[0].act_type == "thank"

    def test_nonmatching_offer_corrects_violated_constraint(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[5].informable))
        wrong_venue = next(
            v for v in domain.db
            if any(v.informable[s] != val for s, val in goal.constraints.items())
        )
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [offer_act(wrong_venue)], domain.db)
        assert out.true_acts[0].act_type == "inform"
        slot, value = out.true_acts[0].payload[0]
        assert goal.constraints[slot] == value
        assert wrong_venue.informable[slot] != value

    def test_auto_negative_repeats_previous_turn(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        user, out = drain_first_turn(init_user(goal, rng), domain)
        first = out.true_acts
        user, out = user_respond(user, [sys_act("auto_negative")], domain.db)
        assert out.true_acts == first

    def test_unprompted_goodbye_counts_social_penalty_and_hangs_up(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [sys_act("return_goodbye")], domain.db)
        assert out.social_penalty_events >= 1
        assert out.hung_up and user.hung_up

    def test_ignored_thank_counts_social_penalty(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[5].informable), ("name",))
        venue = matching_venue(domain, goal)
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [offer_act(venue)], domain.db)
        assert out.task_completed_now  # name satisfied by the offer itself
        assert out.true_acts[0].act_type == "thank"
        user, out = user_respond(user, [sys_act("request_slot", (("food", None),))], domain.db)
        assert out.social_penalty_events == 1

    def test_called_for_som_act_no_penalty(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[5].informable), ("name",))
        venue = matching_venue(domain, goal)
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, out = user_respond(user, [offer_act(venue)], domain.db)
        user, out = user_respond(user, [sys_act("accept_thanking")], domain.db)
        assert out.social_penalty_events == 0
        assert out.true_acts[0].act_type == "bye"
        user, out = user_respond(user, [sys_act("return_goodbye")], domain.db)
        assert out.social_penalty_events == 0
        assert out.hung_up

    def test_three_identical_system_turns_hang_up(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        turn = [offer_act(domain.db[1])]
        user, out = user_respond(user, turn, domain.db)
        assert not out.hung_up
        user, out = user_respond(user, turn, domain.db)
        assert not out.hung_up
        user, out = user_respond(user, turn, domain.db)
        assert out.hung_up

    def test_max_turns_cap(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        user, out = drain_first_turn(init_user(goal, np.random.default_rng(0), UserConfig(max_turns=5)), domain)
        turns = 1
        while not out.hung_up:
            user, out = user_respond(user, [sys_act("expl_confirm", (("food", "indian"),))], domain.db)
            turns += len(out.true_acts)
        assert user.turn_count <= 5

    def test_respond_after_hangup_rejected(self, domain, rng):
        goal = goal_for(domain, dict(domain.db[0].informable))
        user, _ = drain_first_turn(init_user(goal, rng), domain)
        user, _ = user_respond(user, [sys_act("return_goodbye")], domain.db)
        with pytest.raises(RuntimeError):
            user_respond(user, [], domain.db)


class TestCompletionIntegrity:
    def test_completion_implies_offered_venue_matches(self, domain):
        """Against random-ish system behaviour, completion always means a truly matching offer."""
        from mddial.selection import fresh_ensemble

        ensemble = fresh_ensemble("multi_dim", "target", domain.feature_map)
        ucfg = UserConfig(error_rate=0.25, problem_rate=0.05)
        completions = 0
        for i in range(400):
            rng = np.random.default_rng((77, i))
            result = run_dialogue(ensemble, domain, ucfg, rng, temperature=8.0, collect_log=True)
            if result.success:
                completions += 1
                offers = [
                    act for t in result.log["turns"] for act in t["system"]
                    if act.startswith("task.offer")
                ]
                last_offer = offers[-1]
                name = last_offer.split("name=")[1].split(",")[0].rstrip(")")
                venue = domain.index.by_name[name]
                for slot, value in result.log["goal"]["constraints"].items():
                    assert venue.informable[slot] == value
        assert completions > 0  # the check must have exercised real completions


class TestErrorModel:
    def test_zero_rate_identity(self, domain, rng):
        acts = (user_act("inform", (("food", "indian"),)), user_act("request", (("phone", None),)))
        hyps = apply_error_model(acts, 0.0, domain.ontology, rng)
        assert [h.act for h in hyps] == list(acts)
        assert all(not h.corrupted for h in hyps)
        assert all(0.6 <= h.confidence <= 1.0 for h in hyps)

    def test_full_rate_all_corrupted(self, domain, rng):
        acts = tuple(user_act("inform", (("food", "indian"),)) for _ in range(200))
        hyps = apply_error_model(acts, 1.0, domain.ontology, rng)
        assert all(h.corrupted for h in hyps)
        assert all(0.3 <= h.confidence <= 0.8 for h in hyps)
        assert len(hyps) < len(acts)  # some deletions occurred

    def test_true_acts_untouched(self, domain, rng):
        acts = (user_act("inform", (("food", "indian"),)),)
        apply_error_model(acts, 1.0, domain.ontology, rng)
        assert acts[0].payload == (("food", "indian"),)

    def test_rate_calibration(self, domain):
        rng = np.random.default_rng(2024)
        act = user_act("inform", (("food", "indian"),))
        n = 100_000
        corrupted = 0
        for _ in range(20):
            hyps = apply_error_model([act] * (n // 20), 0.25, domain.ontology, rng)
            corrupted += sum(h.corrupted for h in hyps)
            corrupted += (n // 20) - len(hyps)  # deletions count as corrupted
        assert corrupted / n == pytest.approx(0.25, abs=0.01)

    def test_value_substitution_stays_in_ontology(self, domain):
        rng = np.random.default_rng(5)
        acts = tuple(user_act("inform", (("food", "indian"),)) for _ in range(500))
        hyps = apply_error_model(acts, 1.0, domain.ontology, rng)
        for h in hyps:
            if h.act.act_type == "inform":
                slot, value = h.act.payload[0]
                assert value in domain.ontology.values(slot)
                assert value != "indian"


class TestProcessingProblems:
    def test_extremes(self, rng):
        assert not any(maybe_processing_problem(0.0, rng) for _ in range(1000))
        assert all(maybe_processing_problem(1.0, rng) for _ in range(1000))

    def test_rate_calibration(self):
        rng = np.random.default_rng(31)
        hits = sum(maybe_processing_problem(0.05, rng) for _ in range(100_000))
        assert hits / 100_000 == pytest.approx(0.05, abs=0.005)

    def test_invalid_probability(self, rng):
        with pytest.raises(ValueError):
            maybe_processing_problem(1.5, rng)


class TestLiveness:
    def test_scripted_policy_always_succeeds_without_errors(self, domain):
        responder = make_scripted_responder(domain.ontology, domain.index)
        ucfg = UserConfig(error_rate=0.0, problem_rate=0.0)
        for i in range(300):
            rng = np.random.default_rng((9, i))
            result = run_dialogue(responder, domain, ucfg, rng)
            assert result.success
            goal_size = len(result.goal.constraints) + len(result.goal.requests)
            assert result.length <= goal_size + 3
            assert result.length <= 30
