"""Bandit strategies for the infinite-arms problem.

Every policy is built fresh for one game from a frozen ``*Spec`` and exposes
``step(game) -> action`` (see :mod:`cbt_bandit.core` for the action
encoding).  Policies read the per-arm statistics held by the game; the ones
that only make sense for 0/1 rewards treat a 0 as a success and a 1 as a
failure.

Specs round-trip through strings such as ``cbt:zeta=auto,b=loglog`` or
``two-target:f=3``; see :func:`parse_policy`.
"""

from __future__ import annotations

import functools
import heapq
import math
from dataclasses import dataclass, fields
from typing import ClassVar

import numpy as np

from .core import NEW_ARM, ArmState, ConfigurationError, GameState, UndefinedStatisticError
from .priors import HorizonTooSmallError, PriorModel, asymptotic_constant, asymptotic_target, optimal_target


def loglog(n: int) -> float:
    """``log log n``, clamped to 1 where it would drop below 1."""
    if n <= math.e**math.e:
        return 1.0
    return math.log(math.log(n))


def _floor(x: float) -> int:
    # guard against 9.999999 when x is an exact integer in real arithmetic
    return int(math.floor(x + 1e-9))


@functools.lru_cache(maxsize=256)
def _target(prior: PriorModel, lam: float, n: int) -> float:
    return optimal_target(prior, lam, n)


def cbt_bound(state: ArmState, b: float, c: float) -> float:
    """Confidence bound ``max(mean / b, mean - c * sd / sqrt(t))``."""
    t = state.t
    if t == 0:
        raise UndefinedStatisticError(f"arm {state.index} has not been played")
    mean = state.sum / t
    var = state.sum_sq / t - mean * mean
    if var <= 0.0:
        return mean / b if mean / b > mean else mean
    lower = mean - c * math.sqrt(var / t)
    scaled = mean / b
    return scaled if scaled > lower else lower


@dataclass
class PolicyContext:
    """What a spec needs to resolve ``auto`` parameters for one game."""

    n: int
    rng: np.random.Generator
    prior: PriorModel | None = None
    lam: float = 1.0
    pool_size: int | None = None

    @property
    def beta(self) -> float:
        return self.prior.beta if self.prior is not None else 1.0

    @property
    def alpha(self) -> float:
        return self.prior.alpha if self.prior is not None else 1.0


def ucbf_arm_count(alpha: float, beta: float, n: int) -> int:
    """``floor((beta/alpha)^(1/(beta+1)) (n/(beta+1))^(beta/(beta+1)))``, at least 1."""
    k = (beta / alpha) ** (1 / (beta + 1)) * (n / (beta + 1)) ** (beta / (beta + 1))
    return max(1, _floor(k))


class Policy:
    binary_rewards: ClassVar[bool] = False

    def step(self, game: GameState) -> int:
        raise NotImplementedError

    @staticmethod
    def _check_binary(game: GameState) -> None:
        r = game.last_reward
        if r != 0.0 and r != 1.0:
            raise ValueError(f"this policy needs 0/1 rewards, observed {r}")


def _best_proportion(arms: list[ArmState]) -> int:
    # highest success (zero-reward) proportion; ties go to the lowest index
    best, best_p = arms[0].index, -1.0
    for arm in arms:
        prop = (arm.t - arm.sum) / arm.t
        if prop > best_p:
            best, best_p = arm.index, prop
    return best


def _best_mean(arms: list[ArmState]) -> int:
    best, best_mean = NEW_ARM, math.inf
    for arm in arms:
        if arm.t:
            mean = arm.sum / arm.t
            if mean < best_mean:
                best, best_mean = arm.index, mean
    return best


class CBT(Policy):
    """Play the newest arm until its confidence bound exceeds the target."""

    def __init__(self, zeta: float, b: float, c: float):
        self.zeta, self.b, self.c = zeta, b, c

    def step(self, game):
        arms = game.arms
        if not arms:
            return NEW_ARM
        arm = arms[-1]
        if cbt_bound(arm, self.b, self.c) > self.zeta:
            return NEW_ARM
        return arm.index


class EmpiricalCBT(Policy):
    """Recalling CBT with the data-driven target ``total_reward / n``."""

    def __init__(self, b: float, c: float):
        self.b, self.c = b, c
        self._bounds = [math.nan]  # 1-based
        self._heap: list[tuple[float, int]] = []

    def step(self, game):
        if game.m == 0:
            return NEW_ARM
        k = game.last_arm
        bound = cbt_bound(game.arms[k - 1], self.b, self.c)
        if k == len(self._bounds):
            self._bounds.append(bound)
        else:
            self._bounds[k] = bound
        heap = self._heap
        heapq.heappush(heap, (bound, k))
        # only the last played arm's bound moved; drop stale heap entries
        while heap[0][0] != self._bounds[heap[0][1]]:
            heapq.heappop(heap)
        best_bound, best = heap[0]
        if best_bound <= game.total_reward / game.n:
            return best
        return NEW_ARM


class TwoTarget(Policy):
    binary_rewards = True

    def __init__(self, f: int, s1: int, sf: int):
        self.f, self.s1, self.sf = f, s1, sf
        self.committed = 0

    def step(self, game):
        if self.committed:
            return self.committed
        arms = game.arms
        if not arms:
            return NEW_ARM
        self._check_binary(game)
        arm = arms[-1]
        if game.last_reward == 1.0:
            failures = round(arm.sum)
            successes = arm.t - failures
            if failures == 1 and successes < self.s1:
                return NEW_ARM
            if failures == self.f:
                if successes < self.sf:
                    return NEW_ARM
                self.committed = arm.index
        return arm.index


class FFailure(Policy):
    binary_rewards = True

    def __init__(self, f: int):
        self.f = f

    def step(self, game):
        arms = game.arms
        if not arms:
            return NEW_ARM
        self._check_binary(game)
        arm = arms[-1]
        if game.last_reward == 1.0 and round(arm.sum) >= self.f:
            return NEW_ARM
        return arm.index


class SRun(Policy):
    """At most ``s`` arms under 1-failure; commit to a run of ``s`` successes,
    else to the best success proportion once all ``s`` arms have failed."""

    binary_rewards = True

    def __init__(self, s: int):
        self.s = s
        self.committed = 0

    def step(self, game):
        if self.committed:
            return self.committed
        arms = game.arms
        if not arms:
            return NEW_ARM
        self._check_binary(game)
        arm = arms[-1]
        if arm.sum == 0.0 and arm.t >= self.s:
            self.committed = arm.index
        elif game.last_reward == 1.0:
            if len(arms) < self.s:
                return NEW_ARM
            self.committed = _best_proportion(arms)
            return self.committed
        return arm.index


class NonRecallSRun(Policy):
    binary_rewards = True

    def __init__(self, s: int):
        self.s = s
        self.committed = 0

    def step(self, game):
        if self.committed:
            return self.committed
        arms = game.arms
        if not arms:
            return NEW_ARM
        self._check_binary(game)
        arm = arms[-1]
        if arm.sum == 0.0 and arm.t >= self.s:
            self.committed = arm.index
        elif game.last_reward == 1.0:
            return NEW_ARM
        return arm.index


class MLearning(Policy):
    binary_rewards = True

    def __init__(self, m: int):
        self.m = m
        self.committed = 0

    def step(self, game):
        if self.committed:
            return self.committed
        arms = game.arms
        if not arms:
            return NEW_ARM
        self._check_binary(game)
        if game.last_reward == 1.0:
            if game.m < self.m:
                return NEW_ARM
            self.committed = _best_proportion(arms)
            return self.committed
        return arms[-1].index


class UCBF(Policy):
    """Fixed pool of ``K`` arms with a variance-aware lower confidence index."""

    def __init__(self, K: int):
        self.K = K

    def step(self, game):
        arms = game.arms
        if len(arms) < self.K:
            return NEW_ARM
        explore = math.sqrt(math.log(game.m)) if game.m > 1 else 0.0
        best, best_index = 0, math.inf
        for arm in arms:
            t = arm.t
            mean = arm.sum / t
            var = arm.sum_sq / t - mean * mean
            index = mean - math.sqrt(2.0 * max(var, 0.0) * explore / t) - explore / t
            if index < best_index:
                best, best_index = arm.index, index
        return best


class EpsilonPolicy(Policy):
    """Epsilon-greedy / -first / -decreasing over a finite pool of arms.

    A uniformly random pool arm that has not been opened yet is the same as
    a fresh arm, so random exploration maps onto ``NEW_ARM`` with
    probability ``(pool - K) / pool``.
    """

    def __init__(self, kind: str, eps: float, pool: int, rng: np.random.Generator, n: int):
        self.kind, self.eps, self.pool, self.n = kind, eps, pool, n
        self._rand = rng.random

    def _random_arm(self, game):
        j = int(self._rand() * self.pool) + 1
        return j if j <= len(game.arms) else NEW_ARM

    def step(self, game):
        if self.kind == "first":
            explore = game.m < self.eps * self.n
        elif self.kind == "greedy":
            explore = self._rand() < self.eps
        else:
            explore = self._rand() < min(1.0, self.eps / (game.m + 1))
        if explore:
            return self._random_arm(game)
        best = _best_mean(game.arms)
        return best if best else self._random_arm(game)


# ---------------------------------------------------------------- specs


def _resolve_scale(value, n: int) -> float:
    if value == "loglog":
        return loglog(n)
    value = float(value)
    if value <= 0:
        raise ConfigurationError("b and c must be positive")
    return value


def _fmt(value) -> str:
    return f"{value:g}" if isinstance(value, float) else str(value)


class PolicySpec:
    kind: ClassVar[str]

    def build(self, ctx: PolicyContext) -> Policy:
        raise NotImplementedError

    def __str__(self) -> str:
        parts = [f"{f.name}={_fmt(getattr(self, f.name))}" for f in fields(self)]
        parts = [p for p in parts if not p.endswith("=None")]
        return self.kind + (":" + ",".join(parts) if parts else "")


@dataclass(frozen=True)
class CBTSpec(PolicySpec):
    """``zeta`` is a number, ``auto`` (solve v(z) = lam/n) or ``asymptotic`` (C n^(-1/(beta+1)))."""

    kind: ClassVar[str] = "cbt"
    zeta: float | str = "auto"
    b: float | str = "loglog"
    c: float | str = "loglog"

    def resolve_zeta(self, ctx: PolicyContext) -> float:
        if self.zeta in ("auto", "asymptotic"):
            if ctx.prior is None:
                raise ConfigurationError("zeta=auto needs a known prior; give zeta explicitly")
            if self.zeta == "auto":
                try:
                    return _target(ctx.prior, ctx.lam, ctx.n)
                except HorizonTooSmallError:
                    # r_n decreases over the whole support: accept any arm
                    return ctx.prior.upper
            return asymptotic_target(ctx.prior.alpha, ctx.prior.beta, ctx.lam, ctx.n)
        zeta = float(self.zeta)
        if zeta < 0:
            raise ConfigurationError("zeta must be non-negative")
        return zeta

    def build(self, ctx):
        return CBT(self.resolve_zeta(ctx), _resolve_scale(self.b, ctx.n), _resolve_scale(self.c, ctx.n))


@dataclass(frozen=True)
class EmpiricalCBTSpec(PolicySpec):
    kind: ClassVar[str] = "empirical-cbt"
    b: float | str = "loglog"
    c: float | str = "loglog"

    def build(self, ctx):
        return EmpiricalCBT(_resolve_scale(self.b, ctx.n), _resolve_scale(self.c, ctx.n))


def two_target_thresholds(f: int, n: int, alpha: float = 1.0, beta: float = 1.0) -> tuple[int, int]:
    """Early and late success targets ``(s1, sf)``.

    Reduces to ``(floor((n/2)^(1/3)), floor(f sqrt(n/2)))`` for the uniform prior.
    """
    scale = n ** (1 / (beta + 1)) / asymptotic_constant(alpha, beta)
    return _floor(scale ** ((beta + 1) / (beta + 2))), _floor(f * scale)


@dataclass(frozen=True)
class TwoTargetSpec(PolicySpec):
    kind: ClassVar[str] = "two-target"
    f: int = 3
    s1: int | None = None
    sf: int | None = None

    def __post_init__(self):
        if self.f < 2:
            raise ConfigurationError("two-target needs f >= 2")

    def build(self, ctx):
        s1, sf = two_target_thresholds(self.f, ctx.n, ctx.alpha, ctx.beta)
        return TwoTarget(self.f, self.s1 if self.s1 is not None else s1, self.sf if self.sf is not None else sf)


@dataclass(frozen=True)
class FFailureSpec(PolicySpec):
    kind: ClassVar[str] = "f-failure"
    f: int = 1

    def __post_init__(self):
        if self.f < 1:
            raise ConfigurationError("f-failure needs f >= 1")

    def build(self, ctx):
        return FFailure(self.f)


def _default_run_length(ctx: PolicyContext) -> int:
    return max(1, _floor(ctx.n ** (1 / (ctx.beta + 1))))


@dataclass(frozen=True)
class SRunSpec(PolicySpec):
    """``s`` defaults to ``floor(n^(1/(beta+1)))``, i.e. sqrt(n) for the uniform prior."""

    kind: ClassVar[str] = "s-run"
    s: int | None = None

    def build(self, ctx):
        return SRun(self.s or _default_run_length(ctx))


@dataclass(frozen=True)
class NonRecallSRunSpec(PolicySpec):
    kind: ClassVar[str] = "nonrecall-s-run"
    s: int | None = None

    def build(self, ctx):
        return NonRecallSRun(self.s or _default_run_length(ctx))


@dataclass(frozen=True)
class MLearningSpec(PolicySpec):
    """``m`` defaults to ``floor(log(n) sqrt(n))``."""

    kind: ClassVar[str] = "m-learning"
    m: int | None = None

    def build(self, ctx):
        return MLearning(self.m or max(1, _floor(math.log(ctx.n) * math.sqrt(ctx.n))))


@dataclass(frozen=True)
class UCBFSpec(PolicySpec):
    kind: ClassVar[str] = "ucbf"
    K: int | str = "auto"

    def build(self, ctx):
        if self.K == "auto":
            return UCBF(ucbf_arm_count(ctx.alpha, ctx.beta, ctx.n))
        return UCBF(int(self.K))


@dataclass(frozen=True)
class EpsilonSpec(PolicySpec):
    kind: ClassVar[str] = "eps"
    variant: str = "greedy"
    eps: float = 0.05
    pool: int | None = None

    def __post_init__(self):
        if self.variant not in ("greedy", "first", "decreasing"):
            raise ConfigurationError(f"unknown epsilon variant {self.variant!r}")
        if not 0 < self.eps <= 1:
            raise ConfigurationError("eps must lie in (0, 1]")

    def __str__(self):
        text = f"eps-{self.variant}:eps={self.eps:g}"
        return text + (f",pool={self.pool}" if self.pool else "")

    def build(self, ctx):
        pool = self.pool or ctx.pool_size or ucbf_arm_count(ctx.alpha, ctx.beta, ctx.n)
        return EpsilonPolicy(self.variant, self.eps, pool, ctx.rng, ctx.n)


_SPECS = {
    "cbt": CBTSpec,
    "empirical-cbt": EmpiricalCBTSpec,
    "two-target": TwoTargetSpec,
    "f-failure": FFailureSpec,
    "s-run": SRunSpec,
    "nonrecall-s-run": NonRecallSRunSpec,
    "m-learning": MLearningSpec,
    "ucbf": UCBFSpec,
}


def _coerce(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_policy(text: str) -> PolicySpec:
    """Parse ``name[:key=value,...]`` into a policy spec."""
    name, _, args = text.strip().partition(":")
    name = name.lower()
    kwargs = {}
    for item in filter(None, (a.strip() for a in args.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigurationError(f"policy parameter {item!r} is not key=value")
        kwargs[key.strip()] = _coerce(val.strip())
    if name.startswith("eps-"):
        cls, kwargs = EpsilonSpec, {"variant": name[4:], **kwargs}
    elif name in _SPECS:
        cls = _SPECS[name]
    else:
        raise ConfigurationError(f"unknown policy {name!r}; choose from {sorted(_SPECS)} or eps-*")
    known = {f.name for f in fields(cls)}
    unknown = set(kwargs) - known
    if unknown:
        raise ConfigurationError(f"{name}: unknown parameters {sorted(unknown)}")
    for key in ("zeta", "b", "c", "eps"):
        if key in kwargs and isinstance(kwargs[key], int):
            kwargs[key] = float(kwargs[key])
    return cls(**kwargs)
