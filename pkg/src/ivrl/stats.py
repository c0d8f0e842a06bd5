"""Per-episode training record shared by both agents and the harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EpisodeStats:
    """What one training episode produced.

    weights is the episode mean of the operating needs weights (selected
    candidates for the value-based agent, needs-head outputs for the
    actor-critic), so it stays on the simplex. losses holds (main, needs,
    value); agents without a component report 0.0 there. score is the
    scenario's native evaluation number.
    """

    episode: int
    steps: int
    reward: float
    utility_sums: np.ndarray
    weights: np.ndarray
    losses: tuple[float, float, float]
    score: float
