"""Matplotlib renderings of learning curves, written next to the CSV exports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .harness import CurveSummary

_COLOURS = {
    "one_dim": "tab:blue",
    "multi_dim": "tab:green",
    "mdim_ada": "tab:red",
    "mdim_src": "tab:purple",
}


def plot_learning_curves(
    summaries: list[CurveSummary],
    destination: str | Path,
    metric: str = "success",
    title: str | None = None,
) -> Path:
    """One figure: per-variant mean curve with a ±1 stddev band."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for s in summaries:
        mean = s.success_mean if metric == "success" else s.reward_mean
        std = s.success_std if metric == "success" else s.reward_std
        colour = _COLOURS.get(s.label)
        ax.plot(s.episodes, mean, label=f"{s.label} (n={s.n_runs})", color=colour, linewidth=1.6)
        ax.fill_between(s.episodes, mean - std, mean + std, alpha=0.15, color=colour)
    ax.set_xlabel("training dialogues")
    if metric == "success":
        ax.set_ylabel("success rate over sliding window [%]")
        ax.set_ylim(0, 102)
    else:
        ax.set_ylabel("average reward over sliding window")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    destination = Path(destination)
    destination.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(destination, dpi=150)
    plt.close(fig)
    return destination
