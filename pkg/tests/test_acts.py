from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mddial.acts import (
    COMBINATIONS,
    DIMENSIONS,
    DialogueAct,
    Dimension,
    action_set,
    combination_mask,
    combine,
    none_act,
    parse_act,
    serialize_act,
    sys_act,
    user_act,
)

SLOTS = ("food", "area", "pricerange")


def make_candidate(dim: Dimension, act_type: str) -> DialogueAct:
    """A representative concrete act for an abstract per-dimension type."""
    if act_type == "none":
        return none_act(dim)
    payloads = {
        "offer": (("name", "the golden fork"), ("food", "indian")),
        "answer": (("phone", "01223 111222"),),
        "request": (("area", None),),
        "request_slot": (("area", None),),
        "impl_confirm": (("food", "indian"),),
        "expl_confirm": (("food", "indian"),),
    }
    return sys_act(act_type, payloads.get(act_type, ()))


class TestActionSetCardinalities:
    @pytest.mark.parametrize("kind,scenario,expected", [
        ("task", "source", 4),
        ("task", "target", 6),
        ("autofeedback", "source", 4),
        ("autofeedback", "target", 4),
        ("som", "source", 3),
        ("som", "target", 3),
        ("onedim", "source", 9),
        ("onedim", "target", 13),
        ("evaluation", "source", 8),
        ("evaluation", "target", 8),
    ])
    def test_sizes(self, kind, scenario, expected):
        assert len(action_set(kind, scenario, SLOTS)) == expected

    def test_task_target_contents(self):
        assert action_set("task", "target", SLOTS).actions == (
            "offer", "request_food", "request_area", "request_pricerange", "answer", "none",
        )

    def test_som_contents(self):
        for scenario in ("source", "target"):
            assert action_set("som", scenario, SLOTS).actions == (
                "accept_thanking", "return_goodbye", "none",
            )

    def test_onedim_source_includes_req_plus_confirm(self):
        actions = action_set("onedim", "source", SLOTS).actions
        assert "request+impl_confirm" in actions
        assert "offer+impl_confirm" in actions

    def test_ordering_stable(self):
        assert action_set("task", "target", SLOTS) == action_set("task", "target", SLOTS)

    def test_signature_shared_across_scenarios_for_transferables(self):
        for kind in ("autofeedback", "som"):
            assert action_set(kind, "source", SLOTS).signature() == action_set(kind, "target", SLOTS).signature()
        assert action_set("task", "source", SLOTS).signature() != action_set("task", "target", SLOTS).signature()


class TestCombinationMask:
    def test_offer_with_impl_confirm_allows_pair(self):
        candidates = {
            Dimension.TASK: make_candidate(Dimension.TASK, "offer"),
            Dimension.AUTOFEEDBACK: make_candidate(Dimension.AUTOFEEDBACK, "impl_confirm"),
            Dimension.SOM: none_act(Dimension.SOM),
        }
        assert combination_mask(candidates) == {
            frozenset({Dimension.TASK}),
            frozenset({Dimension.AUTOFEEDBACK}),
            frozenset({Dimension.TASK, Dimension.AUTOFEEDBACK}),
        }

    def test_expl_confirm_only_alone(self):
        candidates = {
            Dimension.TASK: make_candidate(Dimension.TASK, "offer"),
            Dimension.AUTOFEEDBACK: make_candidate(Dimension.AUTOFEEDBACK, "expl_confirm"),
            Dimension.SOM: none_act(Dimension.SOM),
        }
        assert combination_mask(candidates) == {
            frozenset({Dimension.TASK}),
            frozenset({Dimension.AUTOFEEDBACK}),
        }

    def test_all_none_allows_only_empty(self):
        candidates = {d: none_act(d) for d in DIMENSIONS}
        assert combination_mask(candidates) == {frozenset()}

    TASK_TYPES = {"source": ("offer", "request", "answer", "none"),
                  "target": ("offer", "request_slot", "answer", "none")}
    AF_TYPES = ("impl_confirm", "expl_confirm", "auto_negative", "none")
    SOM_TYPES = ("accept_thanking", "return_goodbye", "none")

    @pytest.mark.parametrize("scenario", ["source", "target"])
    def test_exhaustive_mask_and_combine(self, scenario):
        """Every candidate triple: the mask obeys the rules and combine round-trips."""
        for t_type, a_type, s_type in itertools.product(
            self.TASK_TYPES[scenario], self.AF_TYPES, self.SOM_TYPES
        ):
            candidates = {
                Dimension.TASK: make_candidate(Dimension.TASK, t_type),
                Dimension.AUTOFEEDBACK: make_candidate(Dimension.AUTOFEEDBACK, a_type),
                Dimension.SOM: make_candidate(Dimension.SOM, s_type),
            }
            mask = combination_mask(candidates)
            non_none = {d for d in DIMENSIONS if not candidates[d].is_none}
            for dim in DIMENSIONS:
                assert (frozenset({dim}) in mask) == (dim in non_none)
            pair_expected = a_type == "impl_confirm" and t_type in ("offer", "request", "request_slot")
            assert (frozenset({Dimension.TASK, Dimension.AUTOFEEDBACK}) in mask) == pair_expected
            assert frozenset(DIMENSIONS) not in mask
            assert (frozenset() in mask) == (not non_none)
            assert not any(len(sel) == 2 and sel != {Dimension.TASK, Dimension.AUTOFEEDBACK} for sel in mask)
            for selection in mask:
                acts = combine(selection, candidates)
                assert len(acts) == len(selection)
                assert all(not a.is_none for a in acts)

    def test_combine_orders_feedback_before_task(self):
        candidates = {
            Dimension.TASK: sys_act("request_slot", (("pricerange", None),)),
            Dimension.AUTOFEEDBACK: sys_act("impl_confirm", (("food", "indian"),)),
            Dimension.SOM: none_act(Dimension.SOM),
        }
        acts = combine(frozenset({Dimension.TASK, Dimension.AUTOFEEDBACK}), candidates)
        assert [a.act_type for a in acts] == ["impl_confirm", "request_slot"]

    def test_combine_rejects_masked_selection(self):
        candidates = {d: none_act(d) for d in DIMENSIONS}
        with pytest.raises(ValueError):
            combine(frozenset({Dimension.TASK}), candidates)

    def test_combine_empty_selection(self):
        candidates = {d: none_act(d) for d in DIMENSIONS}
        assert combine(frozenset(), candidates) == []


class TestOneDimEquivalence:
    @pytest.mark.parametrize("scenario", ["source", "target"])
    def test_onedim_set_equals_legal_combination_image(self, scenario):
        """The flattened action set is exactly the set of legal non-empty combinations."""
        task_labels = [a for a in action_set("task", scenario, SLOTS).actions if a != "none"]
        combined = set(task_labels)
        combined.update({"expl_confirm", "auto_negative"})
        combined.update({f"{t}+impl_confirm" for t in task_labels if t.startswith(("offer", "request"))})
        combined.update({"accept_thanking", "return_goodbye"})
        assert combined == set(action_set("onedim", scenario, SLOTS).actions)


class TestDimensionLegality:
    def test_system_act_dimension_enforced(self):
        with pytest.raises(ValueError):
            DialogueAct(dimension=Dimension.TASK, act_type="expl_confirm", payload=(("food", "thai"),))

    def test_request_slot_payload_arity(self):
        with pytest.raises(ValueError):
            sys_act("request_slot", (("food", None), ("area", None)))

    def test_confirm_needs_payload(self):
        with pytest.raises(ValueError):
            sys_act("impl_confirm")

    def test_exactly_three_dimensions(self):
        assert len(DIMENSIONS) == 3
        assert len(COMBINATIONS) == 8


_slot_values = st.sampled_from([
    ("food", "indian"), ("area", "north"), ("pricerange", "cheap"),
    ("name", "the rice boat"), ("phone", "01223 360966"),
])


@st.composite
def acts(draw):
    side = draw(st.sampled_from(["system", "user"]))
    if side == "system":
        act_type = draw(st.sampled_from(
            ["offer", "answer", "impl_confirm", "expl_confirm", "auto_negative",
             "accept_thanking", "return_goodbye"]))
        if act_type in ("impl_confirm", "expl_confirm"):
            payload = (draw(_slot_values),)
        elif act_type in ("offer", "answer"):
            payload = tuple(draw(st.lists(_slot_values, max_size=3, unique_by=lambda p: p[0])))
        else:
            payload = ()
        return sys_act(act_type, payload)
    act_type = draw(st.sampled_from(["inform", "request", "affirm", "negate", "thank", "bye"]))
    if act_type in ("inform", "negate"):
        payload = (draw(_slot_values),)
    elif act_type == "request":
        payload = ((draw(_slot_values)[0], None),)
    else:
        payload = ()
    return user_act(act_type, payload)


class TestSerialization:
    def test_canonical_examples(self):
        assert serialize_act(sys_act("request_slot", (("pricerange", None),))) == "task.request_slot(pricerange)"
        assert serialize_act(sys_act("impl_confirm", (("food", "indian"),))) == "autofeedback.impl_confirm(food=indian)"
        assert serialize_act(sys_act("accept_thanking")) == "som.accept_thanking"

    @given(acts())
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, act):
        assert parse_act(serialize_act(act)) == act

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_act("not an act")
