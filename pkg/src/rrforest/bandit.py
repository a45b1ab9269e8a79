"""Mortal multi-armed bandit allocating growth effort across trees.

Each arm tracks one tree's extension-success probability with an
exponentially discounted average; local arms die when their estimate falls
below the pruning threshold, rooted arms are immortal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cspace import ContractError

ROOTED = "rooted"
LOCAL = "local"


@dataclass
class Arm:
    id: int
    tree_id: int
    kind: str
    prob: float = 0.5
    pulls: int = 0
    successes: int = 0
    alive: bool = True


@dataclass(frozen=True)
class BanditConfig:
    eta: float = 0.1          # prune local arms when prob < eta
    discount: float = 0.1     # recency weight of the latest reward
    prob_floor: float = 0.02  # minimum selection weight, prevents starvation
    initial_prob: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.discount <= 1.0:
            raise ContractError("discount must be in (0, 1]")
        if not 0.0 < self.prob_floor < self.eta < 1.0:
            raise ContractError("need 0 < prob_floor < eta < 1")
        if not 0.0 <= self.initial_prob <= 1.0:
            raise ContractError("initial_prob must be in [0, 1]")


def pick_arm(arms, cfg: BanditConfig, rng) -> Arm:
    """Multinomial draw over alive arms, weighted by max(prob, floor)."""
    alive = [a for a in arms if a.alive]
    if not alive:
        raise ContractError("pick_arm requires at least one alive arm")
    if len(alive) == 1:
        return alive[0]
    weights = np.array([max(a.prob, cfg.prob_floor) for a in alive])
    cum = np.cumsum(weights)
    r = rng.random() * cum[-1]
    return alive[int(np.searchsorted(cum, r, side="right"))]


def reward(extension_succeeded) -> int:
    """1 iff the attempted extension placed a new valid node, else 0."""
    return 1 if extension_succeeded else 0


def update_prob(arm: Arm, r: int, cfg: BanditConfig) -> None:
    """Exponentially discounted success estimate; tracks non-stationary payoffs."""
    if not arm.alive:
        raise ContractError("cannot update a dead arm")
    arm.prob = (1.0 - cfg.discount) * arm.prob + cfg.discount * r
    arm.pulls += 1
    arm.successes += r


def prune_check(arm: Arm, cfg: BanditConfig) -> bool:
    """True when the arm should be retired (local and prob strictly below eta)."""
    return arm.kind == LOCAL and arm.prob < cfg.eta
