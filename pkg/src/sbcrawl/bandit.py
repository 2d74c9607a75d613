"""Sleeping-bandit (AUER) action selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .actions import Action


class AllAsleepError(LookupError):
    pass


@dataclass(frozen=True)
class BanditConfig:
    alpha: float = 2 * math.sqrt(2)
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def _log_t(t: int) -> float:
    return math.log(t) if t > 1 else 0.0


def score(action: Action, awake: bool, t: int, cfg: BanditConfig) -> float:
    """Mean reward plus exploration bonus; zero for a sleeping action."""
    if not awake:
        return 0.0
    return action.mean_reward + cfg.alpha * math.sqrt(_log_t(t) / (action.pulls + cfg.epsilon))


def select_action(candidates: Sequence[tuple[Action, bool]], t: int, cfg: BanditConfig) -> int:
    """Id of the best awake action; ties go to the lowest id."""
    best_id: int | None = None
    best = -math.inf
    for action, awake in sorted(candidates, key=lambda c: c[0].id):
        if not awake:
            continue
        s = score(action, True, t, cfg)
        if s > best:
            best, best_id = s, action.id
    if best_id is None:
        raise AllAsleepError("no awake action to select")
    return best_id


def select_vectorized(
    pulls: np.ndarray,
    means: np.ndarray,
    awake: np.ndarray,
    t: int,
    cfg: BanditConfig,
) -> int:
    """Array form of :func:`select_action` for the crawl loop (ids are array positions)."""
    if not awake.any():
        raise AllAsleepError("no awake action to select")
    scores = means + cfg.alpha * np.sqrt(_log_t(t) / (pulls + cfg.epsilon))
    scores = np.where(awake, scores, -np.inf)
    return int(np.argmax(scores))


def update_reward(action: Action, reward: float) -> Action:
    """Fold one reward into the action's running mean (pull count already incremented)."""
    if action.pulls < 1:
        raise ValueError(f"action {action.id} updated before being pulled")
    action.mean_reward += (reward - action.mean_reward) / action.pulls
    return action
