"""Dialogue-act taxonomy, per-dimension action sets, and combination rules.

Three dimensions, each with its own agent: Task (the slot-filling activity),
AutoFeedback (the system reporting on its own processing of user input), and
SOM (social obligations: thanking responses, goodbyes). The system emits a
turn built from at most two of the per-dimension candidate acts; which
combinations are legal is decided by ``combination_mask``.

Canonical text form, used in logs and over the chat wire::

    task.request_slot(pricerange)
    autofeedback.impl_confirm(food=indian)
    som.accept_thanking
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class Dimension(Enum):
    TASK = "task"
    AUTOFEEDBACK = "autofeedback"
    SOM = "som"


DIMENSIONS = (Dimension.TASK, Dimension.AUTOFEEDBACK, Dimension.SOM)

# System-side act types and the single dimension each is legal in.
SYSTEM_ACT_DIMENSION = {
    "offer": Dimension.TASK,
    "answer": Dimension.TASK,
    "request": Dimension.TASK,
    "request_slot": Dimension.TASK,
    "impl_confirm": Dimension.AUTOFEEDBACK,
    "expl_confirm": Dimension.AUTOFEEDBACK,
    "auto_negative": Dimension.AUTOFEEDBACK,
    "accept_thanking": Dimension.SOM,
    "return_goodbye": Dimension.SOM,
}

USER_ACT_TYPES = ("inform", "request", "affirm", "negate", "thank", "bye", "hello", "reqalts", "null")
_USER_SOM_TYPES = {"thank", "bye", "hello"}

NONE_TYPE = "none"


@dataclass(frozen=True)
class DialogueAct:
    dimension: Dimension
    act_type: str
    # (slot, value) pairs; value None for slot-only payloads such as request(phone)
    payload: tuple[tuple[str, str | None], ...] = ()

    def __post_init__(self):
        if self.act_type in SYSTEM_ACT_DIMENSION:
            expected = SYSTEM_ACT_DIMENSION[self.act_type]
            if self.dimension is not expected:
                raise ValueError(f"{self.act_type} is a {expected.value} act, not {self.dimension.value}")
        if self.act_type == "request_slot" and len(self.payload) != 1:
            raise ValueError("request_slot carries exactly one slot name")
        if self.act_type in ("impl_confirm", "expl_confirm") and not self.payload:
            raise ValueError(f"{self.act_type} carries at least one slot-value pair")

    @property
    def is_none(self) -> bool:
        return self.act_type == NONE_TYPE

    def slots(self) -> tuple[str, ...]:
        return tuple(slot for slot, _ in self.payload)

    def first_pair(self) -> tuple[str, str | None]:
        return self.payload[0]

    def __str__(self) -> str:
        return serialize_act(self)


def sys_act(act_type: str, payload: tuple[tuple[str, str | None], ...] = ()) -> DialogueAct:
    """Build a system act in its canonical dimension (``none`` defaults to Task)."""
    dim = SYSTEM_ACT_DIMENSION.get(act_type, Dimension.TASK)
    return DialogueAct(dimension=dim, act_type=act_type, payload=payload)


def user_act(act_type: str, payload: tuple[tuple[str, str | None], ...] = ()) -> DialogueAct:
    if act_type not in USER_ACT_TYPES:
        raise ValueError(f"unknown user act type {act_type!r}")
    dim = Dimension.SOM if act_type in _USER_SOM_TYPES else Dimension.TASK
    return DialogueAct(dimension=dim, act_type=act_type, payload=payload)


def none_act(dimension: Dimension) -> DialogueAct:
    return DialogueAct(dimension=dimension, act_type=NONE_TYPE)


# ---------------------------------------------------------------------------
# Action sets

@dataclass(frozen=True)
class ActionSet:
    kind: str       # task | autofeedback | som | onedim | evaluation
    scenario: str   # source (summary request) | target (slot-specific requests)
    actions: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.actions)

    def index(self, action: str) -> int:
        return self.actions.index(action)

    def signature(self) -> str:
        # scenario intentionally excluded: AutoFeedback/SOM sets are identical
        # across scenarios, which is what makes their policies transferable
        return f"{self.kind}:" + ",".join(self.actions)


SCENARIOS = ("source", "target")
AGENT_KINDS = ("task", "autofeedback", "som", "onedim", "evaluation")

# Subsets of dimensions the Evaluation agent can select, smallest first.
COMBINATIONS: tuple[frozenset[Dimension], ...] = (
    frozenset(),
    frozenset({Dimension.TASK}),
    frozenset({Dimension.AUTOFEEDBACK}),
    frozenset({Dimension.SOM}),
    frozenset({Dimension.TASK, Dimension.AUTOFEEDBACK}),
    frozenset({Dimension.TASK, Dimension.SOM}),
    frozenset({Dimension.AUTOFEEDBACK, Dimension.SOM}),
    frozenset({Dimension.TASK, Dimension.AUTOFEEDBACK, Dimension.SOM}),
)


def combination_label(selection: frozenset[Dimension]) -> str:
    if not selection:
        return "none"
    return "+".join(d.value for d in DIMENSIONS if d in selection)


def task_actions(scenario: str, informable_slots: tuple[str, ...]) -> tuple[str, ...]:
    if scenario == "source":
        return ("offer", "request", "answer", "none")
    return ("offer", *(f"request_{s}" for s in informable_slots), "answer", "none")


def action_set(kind: str, scenario: str, informable_slots: tuple[str, ...] = ("food", "area", "pricerange")) -> ActionSet:
    """The ordered abstract action list for one agent; ordering is the weight index."""
    if kind not in AGENT_KINDS:
        raise ValueError(f"unknown agent kind {kind!r}")
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    if kind == "task":
        actions = task_actions(scenario, informable_slots)
    elif kind == "autofeedback":
        actions = ("impl_confirm", "expl_confirm", "auto_negative", "none")
    elif kind == "som":
        actions = ("accept_thanking", "return_goodbye", "none")
    elif kind == "evaluation":
        actions = tuple(combination_label(c) for c in COMBINATIONS)
    else:  # onedim: every legal non-empty combination flattened into single actions
        requests = ("request",) if scenario == "source" else tuple(f"request_{s}" for s in informable_slots)
        actions = (
            "offer",
            "offer+impl_confirm",
            "answer",
            *requests,
            *(f"{r}+impl_confirm" for r in requests),
            "expl_confirm",
            "auto_negative",
            "accept_thanking",
            "return_goodbye",
        )
    return ActionSet(kind=kind, scenario=scenario, actions=actions)


# ---------------------------------------------------------------------------
# Combination legality

_COMBINABLE_TASK_TYPES = ("offer", "request", "request_slot")


def combination_mask(candidates: dict[Dimension, DialogueAct]) -> set[frozenset[Dimension]]:
    """Allowed dimension subsets for one turn's realized candidate acts.

    Singletons of non-none candidates are always allowed. The only pair is
    Task+AutoFeedback, and only for an implicit confirmation joining an offer
    or a request. The empty selection exists only when nothing was generated.
    """
    if set(candidates) != set(DIMENSIONS):
        raise ValueError("need exactly one candidate act per dimension")
    allowed: set[frozenset[Dimension]] = set()
    for dim in DIMENSIONS:
        if not candidates[dim].is_none:
            allowed.add(frozenset({dim}))
    task, af = candidates[Dimension.TASK], candidates[Dimension.AUTOFEEDBACK]
    if af.act_type == "impl_confirm" and task.act_type in _COMBINABLE_TASK_TYPES:
        allowed.add(frozenset({Dimension.TASK, Dimension.AUTOFEEDBACK}))
    if not allowed:
        allowed.add(frozenset())
    return allowed


def combine(selection: frozenset[Dimension], candidates: dict[Dimension, DialogueAct]) -> list[DialogueAct]:
    """Final acts for a selection; the Task act goes last (confirmation first)."""
    if selection not in combination_mask(candidates):
        raise ValueError(f"selection {combination_label(selection)} not allowed for these candidates")
    ordered = (Dimension.SOM, Dimension.AUTOFEEDBACK, Dimension.TASK)
    return [candidates[d] for d in ordered if d in selection]


# ---------------------------------------------------------------------------
# Canonical text serialization

_ACT_RE = re.compile(r"^(\w+)\.(\w+)(?:\((.*)\))?$")


def serialize_act(act: DialogueAct) -> str:
    parts = []
    for slot, value in act.payload:
        parts.append(slot if value is None else f"{slot}={value}")
    payload = f"({', '.join(parts)})" if parts else ""
    return f"{act.dimension.value}.{act.act_type}{payload}"


def parse_act(text: str) -> DialogueAct:
    m = _ACT_RE.match(text.strip())
    if not m:
        raise ValueError(f"unparseable dialogue act: {text!r}")
    dim_name, act_type, payload_text = m.groups()
    try:
        dimension = Dimension(dim_name)
    except ValueError:
        raise ValueError(f"unknown dimension {dim_name!r} in {text!r}") from None
    payload: list[tuple[str, str | None]] = []
    if payload_text:
        for item in payload_text.split(","):
            item = item.strip()
            if not item:
                raise ValueError(f"empty payload item in {text!r}")
            if "=" in item:
                slot, value = item.split("=", 1)
                payload.append((slot.strip(), value.strip()))
            else:
                payload.append((item, None))
    return DialogueAct(dimension=dimension, act_type=act_type, payload=tuple(payload))
