"""Shared per-turn reward: simulated-user rewards plus internal penalties."""

from __future__ import annotations

from dataclasses import dataclass

from .acts import DialogueAct
from .tracking import DialogueState

TASK_COMPLETION_REWARD = 100
SOCIAL_PENALTY = -5
TURN_PENALTY = -1
UNSIGNALLED_PROBLEM_PENALTY = -25


@dataclass(frozen=True)
class RewardBreakdown:
    task_completion: int
    social_penalty: int
    turn_penalty: int
    unsignalled_problem_penalty: int

    @property
    def total(self) -> int:
        return (
            self.task_completion
            + self.social_penalty
            + self.turn_penalty
            + self.unsignalled_problem_penalty
        )

    def to_record(self) -> dict:
        return {
            "task_completion": self.task_completion,
            "social_penalty": self.social_penalty,
            "turn_penalty": self.turn_penalty,
            "unsignalled_problem_penalty": self.unsignalled_problem_penalty,
            "total": self.total,
        }


def turn_reward(outcome, state_before_system_turn: DialogueState, system_acts: list[DialogueAct]) -> RewardBreakdown:
    """Reward for one system turn, given the user's reaction to it.

    +100 when this turn completed the task, -5 per social misstep reported by
    the user, -1 per turn, and -25 when the turn followed a processing problem
    the system failed to signal with negative feedback.
    """
    signalled = any(act.act_type == "auto_negative" for act in system_acts)
    return RewardBreakdown(
        task_completion=TASK_COMPLETION_REWARD if outcome.task_completed_now else 0,
        social_penalty=SOCIAL_PENALTY * outcome.social_penalty_events,
        turn_penalty=TURN_PENALTY,
        unsignalled_problem_penalty=(
            UNSIGNALLED_PROBLEM_PENALTY
            if state_before_system_turn.processing_problem and not signalled
            else 0
        ),
    )
