"""Monte Carlo control with linear value-function approximation.

Each agent owns a ``LinearPolicy``: one weight vector per abstract action
over a fixed feature layout. Actions are sampled from a Boltzmann (softmax)
distribution over the estimated values, with the temperature decayed linearly
across training; after every dialogue the weights move toward the observed
episode returns (every-visit updates).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acts import ActionSet

FORMAT_VERSION = 1


class IncompatiblePolicyError(ValueError):
    """Loaded policy does not match the expected action set or feature layout."""


@dataclass
class LinearPolicy:
    action_set: ActionSet
    weights: np.ndarray          # shape (n_actions, feature_length)
    feature_hash: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def feature_length(self) -> int:
        return self.weights.shape[1]

    @property
    def n_actions(self) -> int:
        return self.weights.shape[0]


def new_policy(action_set: ActionSet, feature_length: int, feature_hash: str = "") -> LinearPolicy:
    weights = np.zeros((len(action_set), feature_length))
    return LinearPolicy(action_set=action_set, weights=weights, feature_hash=feature_hash)


def q_value(policy: LinearPolicy, features: np.ndarray, action: int) -> float:
    if features.shape[0] != policy.feature_length:
        raise ValueError(
            f"feature length {features.shape[0]} does not match policy ({policy.feature_length})"
        )
    return float(policy.weights[action] @ features)


def q_values(policy: LinearPolicy, features: np.ndarray) -> np.ndarray:
    if features.shape[0] != policy.feature_length:
        raise ValueError(
            f"feature length {features.shape[0]} does not match policy ({policy.feature_length})"
        )
    return policy.weights @ features


def softmax_probabilities(q: np.ndarray, mask: np.ndarray, temperature: float) -> np.ndarray:
    """Softmax of q/temperature restricted to the mask; zero off-mask."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    probs = np.zeros_like(q)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("action mask is empty")
    z = q[idx] / temperature
    z -= z.max()  # shift invariance keeps exp() in range
    e = np.exp(z)
    probs[idx] = e / e.sum()
    return probs


def select_action(
    policy: LinearPolicy,
    features: np.ndarray,
    mask: np.ndarray,
    temperature: float,
    rng: np.random.Generator | None = None,
    explore: bool = True,
) -> tuple[int, np.ndarray]:
    """Pick an action id from the masked set; returns (action, probabilities).

    With exploration off the choice is greedy; ties break toward the lowest
    action index so evaluation is deterministic for fixed weights.
    """
    q = q_values(policy, features)
    if not explore:
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise ValueError("action mask is empty")
        action = int(idx[np.argmax(q[idx])])
        probs = np.zeros_like(q)
        probs[action] = 1.0
        return action, probs
    probs = softmax_probabilities(q, mask, temperature)
    if rng is None:
        rng = np.random.default_rng()
    cumulative = np.cumsum(probs)
    action = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    action = min(action, len(q) - 1)
    return action, probs


@dataclass(frozen=True)
class TemperatureSchedule:
    t_start: float = 1.0
    t_end: float = 0.05
    decay_episodes: int = 1

    def __post_init__(self):
        if not (self.t_start >= self.t_end > 0):
            raise ValueError("need t_start >= t_end > 0")


def temperature_at(schedule: TemperatureSchedule, episode: int) -> float:
    if episode < 0:
        raise ValueError("episode must be >= 0")
    if schedule.decay_episodes <= 0 or episode >= schedule.decay_episodes:
        return schedule.t_end
    frac = episode / schedule.decay_episodes
    return schedule.t_start + frac * (schedule.t_end - schedule.t_start)


# ---------------------------------------------------------------------------
# Learning

class EpisodeTrace:
    """Per-agent record of one dialogue: (features, action, shared reward) per turn."""

    __slots__ = ("features", "actions", "rewards")

    def __init__(self):
        self.features: list[np.ndarray] = []
        self.actions: list[int] = []
        self.rewards: list[float] = []

    def append(self, features: np.ndarray, action: int, reward: float = 0.0) -> None:
        self.features.append(features)
        self.actions.append(action)
        self.rewards.append(reward)

    def __len__(self) -> int:
        return len(self.actions)


def mc_update(policy: LinearPolicy, trace: EpisodeTrace, learning_rate: float, discount: float = 1.0) -> LinearPolicy:
    """Every-visit Monte Carlo update toward the episode returns (in place)."""
    if len(trace) == 0:
        raise ValueError("cannot update from an empty trace")
    g = 0.0
    w = policy.weights
    for t in range(len(trace) - 1, -1, -1):
        g = trace.rewards[t] + discount * g
        if not np.isfinite(g):
            raise FloatingPointError(f"non-finite return at turn {t}")
        phi = trace.features[t]
        a = trace.actions[t]
        w[a] += learning_rate * (g - w[a] @ phi) * phi
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("policy weights diverged")
    return policy


# ---------------------------------------------------------------------------
# Persistence
#
# A policy file is a one-line JSON header followed by the raw little-endian
# float64 weight matrix. Writing is byte-deterministic, so identical training
# runs produce identical files (unlike zip-based containers, which embed
# timestamps).

_MAGIC = "mddial-policy"


def save_policy(policy: LinearPolicy, destination: str | Path) -> None:
    """Write weights plus a header identifying the action set and feature layout."""
    meta = {
        "format": _MAGIC,
        "format_version": FORMAT_VERSION,
        "kind": policy.action_set.kind,
        "scenario": policy.action_set.scenario,
        "actions": list(policy.action_set.actions),
        "signature": policy.action_set.signature(),
        "feature_length": policy.feature_length,
        "feature_hash": policy.feature_hash,
        **policy.metadata,
    }
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with open(destination, "wb") as fh:
        fh.write(json.dumps(meta, sort_keys=True).encode())
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(policy.weights, dtype="<f8").tobytes())


def load_policy(
    source: str | Path,
    expected_signature: str | None = None,
    expected_feature_hash: str | None = None,
) -> LinearPolicy:
    """Load a policy; signature/feature mismatches raise rather than silently transfer."""
    raw = Path(source).read_bytes()
    header, _, body = raw.partition(b"\n")
    try:
        meta = json.loads(header.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IncompatiblePolicyError(f"not a policy file: {source}") from exc
    if meta.get("format") != _MAGIC or meta.get("format_version") != FORMAT_VERSION:
        raise IncompatiblePolicyError(f"unsupported policy format {meta.get('format_version')!r}")
    n_actions, feature_length = len(meta["actions"]), int(meta["feature_length"])
    weights = np.frombuffer(body, dtype="<f8").reshape(n_actions, feature_length).copy()
    action_set = ActionSet(kind=meta["kind"], scenario=meta["scenario"], actions=tuple(meta["actions"]))
    if expected_signature is not None and action_set.signature() != expected_signature:
        raise IncompatiblePolicyError(
            f"action-set signature mismatch: file has {action_set.signature()!r}, expected {expected_signature!r}"
        )
    if expected_feature_hash is not None and meta.get("feature_hash") != expected_feature_hash:
        raise IncompatiblePolicyError(
            f"feature-map hash mismatch: file has {meta.get('feature_hash')!r}, expected {expected_feature_hash!r}"
        )
    extra = {
        k: v for k, v in meta.items()
        if k not in ("format", "format_version", "kind", "scenario", "actions", "signature", "feature_length", "feature_hash")
    }
    return LinearPolicy(
        action_set=action_set,
        weights=weights,
        feature_hash=meta.get("feature_hash", ""),
        metadata=extra,
    )
