"""Multi-dimensional statistical dialogue manager with Monte Carlo RL policies."""

__version__ = "0.1.0"
