"""Game bookkeeping shared by every policy and the simulation engine.

Arms are numbered from 1 in the order they are opened.  A policy's decision
is encoded as a plain ``int``: a positive value ``k`` means "play arm k" and
``NEW_ARM`` (0) means "open and play a fresh arm".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

NEW_ARM = 0


class BanditError(Exception):
    """Base class for errors raised by this package."""


class UndefinedStatisticError(BanditError, ValueError):
    """A statistic was requested for an arm that has no observations."""


class ConfigurationError(BanditError, ValueError):
    """Invalid experiment, prior or policy configuration."""


class ContractViolation(BanditError, RuntimeError):
    """A policy returned an action the game cannot execute."""


def play(k: int) -> int:
    """Action that plays the already opened arm ``k``."""
    if k < 1:
        raise ValueError(f"arm indices start at 1, got {k}")
    return k


@dataclass(slots=True)
class ArmState:
    index: int
    t: int = 0
    sum: float = 0.0
    sum_sq: float = 0.0

    def add(self, reward: float) -> None:
        """Record one reward in place (engine hot path)."""
        self.t += 1
        self.sum += reward
        self.sum_sq += reward * reward

    @property
    def mean(self) -> float:
        if self.t == 0:
            raise UndefinedStatisticError(f"arm {self.index} has not been played")
        return self.sum / self.t


def update_arm(state: ArmState, reward: float) -> ArmState:
    """Return a copy of ``state`` with one more observed reward."""
    if reward < 0:
        raise ValueError(f"rewards must be non-negative, got {reward}")
    return replace(
        state,
        t=state.t + 1,
        sum=state.sum + reward,
        sum_sq=state.sum_sq + reward * reward,
    )


def arm_mean_and_sd(state: ArmState) -> tuple[float, float]:
    """Sample mean and biased (divide-by-t) standard deviation of an arm."""
    t = state.t
    if t == 0:
        raise UndefinedStatisticError(f"arm {state.index} has not been played")
    mean = state.sum / t
    var = state.sum_sq / t - mean * mean
    # cancellation can leave a tiny negative variance
    return mean, math.sqrt(var) if var > 0.0 else 0.0


@dataclass
class GameState:
    n: int
    m: int = 0
    arms: list[ArmState] = field(default_factory=list)
    total_reward: float = 0.0
    last_arm: int = 0
    last_reward: float = 0.0

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def remaining(self) -> int:
        return self.n - self.m


@dataclass
class RunRecord:
    """Outcome of one simulated game.

    ``realized_regret`` is the sum of ``pulls[k] * true_means[k]``;
    ``excess_regret`` subtracts ``n`` times the best mean available to the
    game (0 for priors supported on (0, 1), the best pool arm for datasets).
    """

    K: int
    pulls: list[int]
    true_means: list[float]
    realized_regret: float
    excess_regret: float

    @property
    def n(self) -> int:
        return sum(self.pulls)
