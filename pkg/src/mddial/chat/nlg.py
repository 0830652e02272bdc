"""Template natural-language generation for system dialogue acts.

Every system act type has a deterministic template; a combined turn renders
the feedback act first, except that impl_confirm+offer fuses into the single
"<venue> is a nice <description> restaurant" form. Template coverage is
validated at import time so a missing template can never surface mid-chat.
"""

from __future__ import annotations

from ..acts import DialogueAct
from ..domain import DONTCARE

_PRICE_PHRASES = {
    "cheap": "cheap",
    "moderate": "moderately priced",
    "expensive": "expensive",
}

REQUEST_TEMPLATES = {
    "food": "What kind of food would you like?",
    "area": "Which area of town did you have in mind?",
    "pricerange": "What price range did you have in mind?",
}
_REQUEST_FALLBACK = "Which {slot} would you like?"


def _title(name: str) -> str:
    return " ".join(w if w == "of" else w.capitalize() for w in name.split())


def _value_phrase(slot: str, value: str) -> str:
    """Slot-value pair as a noun phrase: 'indian' -> 'Indian food'."""
    if value == DONTCARE:
        return {
            "food": "any kind of food",
            "area": "any area",
            "pricerange": "any price range",
        }.get(slot, f"any {slot}")
    if slot == "food":
        return f"{value.capitalize()} food"
    if slot == "area":
        return f"the {value} of town"
    if slot == "pricerange":
        return f"the {_PRICE_PHRASES.get(value, value)} price range"
    return f"{value} {slot}"


def _offer_description(payload: dict[str, str | None], confirmed: tuple[str, str] | None) -> str:
    """'nice Indian restaurant in the north of town' from the offer payload."""
    lead = "nice"
    price = payload.get("pricerange")
    food = payload.get("food")
    area = payload.get("area")
    if confirmed is not None:
        slot, value = confirmed
        if slot == "pricerange":
            price = value
        elif slot == "food":
            food = value
        elif slot == "area":
            area = value
    if price and price != DONTCARE:
        lead = _PRICE_PHRASES.get(price, price)
    descr = f"{lead} {food.capitalize()} restaurant" if food and food != DONTCARE else f"{lead} restaurant"
    if area and area != DONTCARE:
        descr += f" in the {area} of town"
    return descr


def _render(act: DialogueAct) -> str:
    kind = act.act_type
    if kind == "offer":
        payload = dict(act.payload)
        return f"How about {_title(payload.get('name', 'this venue'))}?"
    if kind == "request_slot" or kind == "request":
        slot = act.payload[0][0]
        return REQUEST_TEMPLATES.get(slot, _REQUEST_FALLBACK.format(slot=slot))
    if kind == "answer":
        parts = []
        for slot, value in act.payload:
            if slot == "name":
                parts.append(f"The venue is called {_title(value)}.")
            else:
                parts.append(f"The {slot} is {value}.")
        return " ".join(parts)
    if kind == "impl_confirm":
        slot, value = act.payload[0]
        return f"Okay, {_value_phrase(slot, value)}."
    if kind == "expl_confirm":
        slot, value = act.payload[0]
        return f"You want {_value_phrase(slot, value)}, is that right?"
    if kind == "auto_negative":
        return "I did not quite catch that, could you please rephrase?"
    if kind == "accept_thanking":
        return "You're welcome"
    if kind == "return_goodbye":
        return "Have a nice day"
    raise ValueError(f"no template for system act type {kind!r}")


def generate_utterance(acts: list[DialogueAct], state=None) -> str:
    """Deterministic text for one system turn."""
    if not acts:
        raise ValueError("cannot generate an utterance for an empty turn")
    if len(acts) == 2 and acts[0].act_type == "impl_confirm" and acts[1].act_type == "offer":
        payload = dict(acts[1].payload)
        confirmed = acts[0].payload[0]
        name = _title(payload.get("name", "this venue"))
        return f"{name} is a {_offer_description(payload, confirmed)}."
    return " ".join(_render(act) for act in acts)


def _validate_templates() -> None:
    from ..acts import SYSTEM_ACT_DIMENSION, sys_act

    samples = {
        "offer": sys_act("offer", (("name", "the golden fork"), ("food", "indian"))),
        "answer": sys_act("answer", (("phone", "01223 123456"),)),
        "request": sys_act("request", (("food", None),)),
        "request_slot": sys_act("request_slot", (("food", None),)),
        "impl_confirm": sys_act("impl_confirm", (("food", "indian"),)),
        "expl_confirm": sys_act("expl_confirm", (("food", "indian"),)),
        "auto_negative": sys_act("auto_negative"),
        "accept_thanking": sys_act("accept_thanking"),
        "return_goodbye": sys_act("return_goodbye"),
    }
    missing = [t for t in SYSTEM_ACT_DIMENSION if t not in samples]
    if missing:
        raise RuntimeError(f"no template sample for system act types {missing}")
    for act in samples.values():
        text = _render(act)
        if not text:
            raise RuntimeError(f"empty template for {act.act_type}")


_validate_templates()
