"""Restaurant-search domain: ontology, synthetic venue database, user goals.

The ontology document is YAML with two sections::

    informable:
      food: [british, chinese, ...]
      area: [centre, north, ...]
      pricerange: [cheap, moderate, expensive]
    requestable: [name, phone, address, postcode]
    synonyms:            # optional, used by the chat NLU
      cheap: [cheaper, inexpensive]

Requestable slots are the listed extras plus every informable slot.
Venue databases round-trip through CSV keyed by venue name.
"""

from __future__ import annotations

import csv
import importlib.resources
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

DONTCARE = "dontcare"

# Slots a venue carries beyond the informables.
EXTRA_REQUESTABLES = ("name", "phone", "address", "postcode")


class DomainError(ValueError):
    """Malformed ontology/database document."""


@dataclass(frozen=True)
class Ontology:
    informable: dict[str, tuple[str, ...]]  # slot -> allowed values
    requestable: tuple[str, ...]            # includes the informables
    synonyms: dict[str, str] = field(default_factory=dict)  # surface form -> value

    @property
    def informable_slots(self) -> tuple[str, ...]:
        return tuple(self.informable.keys())

    def values(self, slot: str) -> tuple[str, ...]:
        return self.informable[slot]

    def n_constraint_combinations(self) -> int:
        n = 1
        for vals in self.informable.values():
            n *= len(vals)
        return n


@dataclass(frozen=True)
class Venue:
    name: str
    informable: dict[str, str]   # one value per informable slot
    extra: dict[str, str]        # phone, address, postcode

    def value(self, slot: str) -> str:
        if slot == "name":
            return self.name
        if slot in self.informable:
            return self.informable[slot]
        return self.extra[slot]


@dataclass(frozen=True)
class UserGoal:
    constraints: dict[str, str]  # informable slot -> required value
    requests: tuple[str, ...]    # requestable slot names
    satisfiable: bool


def load_ontology(source: str | Path | None = None) -> Ontology:
    """Load and validate an ontology document; ``None`` loads the bundled restaurant domain."""
    if source is None:
        text = importlib.resources.files("mddial.data").joinpath("restaurant.yaml").read_text()
    else:
        text = Path(source).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DomainError(f"unparseable ontology document: {exc}") from exc
    if not isinstance(doc, dict) or "informable" not in doc:
        raise DomainError("ontology document must contain an 'informable' section")

    informable: dict[str, tuple[str, ...]] = {}
    for slot, values in doc["informable"].items():
        if not values:
            raise DomainError(f"informable slot {slot!r} has an empty value list")
        values = [str(v) for v in values]
        if len(set(values)) != len(values):
            raise DomainError(f"informable slot {slot!r} has duplicate values")
        if DONTCARE in values:
            raise DomainError(f"{DONTCARE!r} is reserved and cannot be an ontology value")
        informable[str(slot)] = tuple(values)

    extras = tuple(str(s) for s in doc.get("requestable", EXTRA_REQUESTABLES))
    requestable = tuple(informable.keys()) + tuple(s for s in extras if s not in informable)

    synonyms: dict[str, str] = {}
    for value, forms in (doc.get("synonyms") or {}).items():
        for form in forms:
            synonyms[str(form)] = str(value)

    return Ontology(informable=informable, requestable=requestable, synonyms=synonyms)


_NAME_LEFT = (
    "golden", "royal", "old", "little", "blue", "silver", "happy", "grand",
    "corner", "garden", "river", "city", "lucky", "velvet", "ivory", "amber",
)
_NAME_RIGHT = (
    "fork", "lantern", "table", "kitchen", "spoon", "orchid", "boat", "palace",
    "house", "tavern", "pearl", "cellar", "terrace", "pantry", "anchor", "rose",
)
_STREETS = (
    "mill road", "bridge street", "king street", "hills road", "regent street",
    "station road", "market square", "castle hill", "east avenue", "rose crescent",
)


def generate_database(ontology: Ontology, n_venues: int = 100, seed: int = 0) -> list[Venue]:
    """Sample a deterministic synthetic venue database from the ontology."""
    if n_venues < 1:
        raise ValueError("n_venues must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xD8)))
    combos = [f"the {l} {r}" for l in _NAME_LEFT for r in _NAME_RIGHT]
    order = rng.permutation(len(combos))
    venues = []
    for i in range(n_venues):
        if i < len(combos):
            name = combos[order[i]]
        else:
            name = f"the venue {i}"  # beyond the combination pool; still unique
        informable = {
            slot: values[rng.integers(len(values))]
            for slot, values in ontology.informable.items()
        }
        extra = {
            "phone": f"01223 {rng.integers(100000, 999999)}",
            "address": f"{rng.integers(1, 199)} {_STREETS[rng.integers(len(_STREETS))]}",
            "postcode": f"cb{rng.integers(1, 9)} {rng.integers(1, 9)}{chr(97 + rng.integers(26))}{chr(97 + rng.integers(26))}",
        }
        venues.append(Venue(name=name, informable=informable, extra=extra))
    return venues


def venue_matches(venue: Venue, constraints: dict[str, str]) -> bool:
    """True when the venue satisfies every constraint; DONTCARE matches anything."""
    for slot, value in constraints.items():
        if value == DONTCARE:
            continue
        if venue.informable.get(slot) != value:
            return False
    return True


def query_database(db: list[Venue], constraints: dict[str, str]) -> list[Venue]:
    """Venues matching every constraint, in database order. Unknown slots are an error."""
    known = set(db[0].informable.keys()) if db else set()
    for slot in constraints:
        if db and slot not in known:
            raise DomainError(f"unknown informable slot in query: {slot!r}")
    return [v for v in db if venue_matches(v, constraints)]


def sample_goal(
    ontology: Ontology,
    db: list[Venue],
    rng: np.random.Generator,
    require_satisfiable: bool = True,
    constrain_prob: float = 0.8,
    request_prob: float = 0.5,
    max_retries: int = 200,
) -> UserGoal:
    """Sample a user goal: random constraints plus requested slots.

    Each informable slot is constrained with probability ``constrain_prob``
    (at least one forced). Requests are ``name`` plus each non-informable
    requestable with probability ``request_prob`` (at least one forced).
    """
    if not db:
        raise ValueError("database is empty")
    slots = ontology.informable_slots
    for _ in range(max_retries):
        picked = [s for s in slots if rng.random() < constrain_prob]
        if not picked:
            picked = [slots[rng.integers(len(slots))]]
        constraints = {s: ontology.values(s)[rng.integers(len(ontology.values(s)))] for s in picked}
        extras = [s for s in ontology.requestable if s not in ontology.informable and s != "name"]
        requested = [s for s in extras if rng.random() < request_prob]
        if not requested:
            requested = [extras[rng.integers(len(extras))]] if extras else []
        requests = ("name", *requested)
        satisfiable = bool(query_database(db, constraints))
        if satisfiable or not require_satisfiable:
            return UserGoal(constraints=constraints, requests=requests, satisfiable=satisfiable)
    raise DomainError(f"no satisfiable goal found after {max_retries} samples")


class DatabaseIndex:
    """Inverted index over venue informables: constraint lookups in O(#constraints)."""

    def __init__(self, db: list[Venue]):
        self.db = db
        self.by_name = {v.name: v for v in db}
        self._ids_by_pair: dict[tuple[str, str], frozenset[int]] = {}
        for i, venue in enumerate(db):
            for slot, value in venue.informable.items():
                key = (slot, value)
                ids = self._ids_by_pair.get(key)
                self._ids_by_pair[key] = (ids | {i}) if ids else frozenset({i})
        self._all = frozenset(range(len(db)))
        self._empty: frozenset[int] = frozenset()

    def match_ids(self, constraints: dict[str, str]) -> frozenset[int]:
        ids = self._all
        for slot, value in constraints.items():
            if value == DONTCARE:
                continue
            ids = ids & self._ids_by_pair.get((slot, value), self._empty)
            if not ids:
                return ids
        return ids

    def count(self, constraints: dict[str, str]) -> int:
        return len(self.match_ids(constraints))

    def first_match(self, constraints: dict[str, str]) -> Venue | None:
        ids = self.match_ids(constraints)
        return self.db[min(ids)] if ids else None


# ---------------------------------------------------------------------------
# Database round-trip (CSV keyed by venue name)

def export_database(db: list[Venue], destination: str | Path) -> None:
    ontology_slots = list(db[0].informable.keys()) if db else []
    fields = ["name", *ontology_slots, "phone", "address", "postcode"]
    with open(destination, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for v in db:
            writer.writerow({"name": v.name, **v.informable, **v.extra})


def import_database(source: str | Path) -> list[Venue]:
    with open(source, newline="") as fh:
        return _read_database(fh)


def _read_database(fh: io.TextIOBase) -> list[Venue]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or "name" not in reader.fieldnames:
        raise DomainError("database file lacks a 'name' column")
    extra_cols = [c for c in ("phone", "address", "postcode") if c in reader.fieldnames]
    info_cols = [c for c in reader.fieldnames if c not in ("name", *extra_cols)]
    venues = []
    seen = set()
    for row in reader:
        name = row["name"]
        if name in seen:
            raise DomainError(f"duplicate venue name {name!r}")
        seen.add(name)
        venues.append(Venue(
            name=name,
            informable={c: row[c] for c in info_cols},
            extra={c: row[c] for c in extra_cols},
        ))
    return venues
