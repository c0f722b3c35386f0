"""Game loop, regret accounting and Monte Carlo replication.

Replication ``r`` of an experiment is seeded with ``seed + r``, so results do
not depend on execution order or on the number of worker processes, and the
first ``R`` replications of a larger experiment are identical to an
experiment of size ``R``.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import NEW_ARM, ArmState, ConfigurationError, ContractViolation, GameState, RunRecord
from .policies import PolicyContext, PolicySpec
from .priors import PriorModel, lambda_of
from .rewards import Bernoulli, DatasetPool, RewardModel, replay_arm


@dataclass(frozen=True)
class ExperimentConfig:
    policy: PolicySpec
    n: int
    prior: PriorModel | None = None
    reward: RewardModel = field(default_factory=Bernoulli)
    dataset: DatasetPool | None = None
    reps: int = 10_000
    seed: int = 0
    jobs: int = 1
    keep_records: bool = False

    def __post_init__(self):
        if self.n < 1 or self.reps < 1:
            raise ConfigurationError("need n >= 1 and reps >= 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if (self.prior is None) == (self.dataset is None):
            raise ConfigurationError("give exactly one of a prior or a dataset")
        if self.dataset is not None and self.n > self.dataset.min_trace_length:
            raise ConfigurationError(
                f"horizon {self.n} exceeds the shortest dataset trace "
                f"({self.dataset.min_trace_length} rewards)"
            )

    @property
    def arm_label(self) -> str:
        if self.dataset is not None:
            return "dataset"
        return str(self.prior)


class _PoolExhausted(Exception):
    pass


class _SyntheticArms:
    best_mean = 0.0

    def __init__(self, prior: PriorModel, reward: RewardModel, rng):
        self.prior, self.reward, self.rng = prior, reward, rng

    def open(self):
        mu = float(self.prior.sample(self.rng))
        return mu, self.reward.sampler(mu, self.rng)


class _DatasetArms:
    def __init__(self, pool: DatasetPool, rng):
        self.pool, self.rng = pool, rng
        self.order = rng.permutation(len(pool)).tolist()
        self.best_mean = pool.best_mean

    def open(self):
        if not self.order:
            raise _PoolExhausted
        idx = self.order.pop()
        return self.pool.arm_means[idx], replay_arm(self.pool, idx, self.rng).__next__


def _lam(config: ExperimentConfig) -> float:
    if config.prior is None:
        return 1.0
    return lambda_of(config.prior, config.reward)


def simulate_run(config: ExperimentConfig, seed: int, lam: float | None = None) -> RunRecord:
    """Play one game of ``config.n`` trials with its own generator."""
    rng = np.random.default_rng(seed)
    if config.dataset is not None:
        source = _DatasetArms(config.dataset, rng)
        pool_size = len(config.dataset)
    else:
        source = _SyntheticArms(config.prior, config.reward, rng)
        pool_size = None
    if lam is None:
        lam = _lam(config)
    ctx = PolicyContext(config.n, rng, config.prior, lam, pool_size)
    policy = config.policy.build(ctx)

    game = GameState(config.n)
    arms = game.arms
    means: list[float] = []
    samplers = []
    step = policy.step
    for _ in range(config.n):
        k = step(game)
        if k == NEW_ARM:
            try:
                mu, sampler = source.open()
            except _PoolExhausted:
                # every pool arm is open: fall back to the best sample mean
                k = min(arms, key=lambda a: (a.sum / a.t, a.index)).index
            else:
                arms.append(ArmState(len(arms) + 1))
                means.append(mu)
                samplers.append(sampler)
                k = len(arms)
        elif not 0 < k <= len(arms):
            raise ContractViolation(f"policy chose arm {k} but only {len(arms)} are open")
        x = samplers[k - 1]()
        arm = arms[k - 1]
        arm.t += 1
        arm.sum += x
        arm.sum_sq += x * x
        game.m += 1
        game.total_reward += x
        game.last_arm = k
        game.last_reward = x

    pulls = [a.t for a in arms]
    regret = math.fsum(t * mu for t, mu in zip(pulls, means))
    return RunRecord(
        K=len(arms),
        pulls=pulls,
        true_means=means,
        realized_regret=regret,
        excess_regret=regret - config.n * source.best_mean,
    )


@dataclass
class MonteCarloSummary:
    mean_regret: float
    se: float
    reps: int
    mean_excess: float
    se_excess: float
    mean_arms: float
    wall_time_ms: float = 0.0
    records: list[RunRecord] | None = None


def _mean_se(values: list[float]) -> tuple[float, float]:
    r = len(values)
    mean = math.fsum(values) / r
    if r < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (r - 1)
    return mean, math.sqrt(var / r)


def _run_block(config: ExperimentConfig, first: int, last: int, lam: float) -> list[RunRecord]:
    return [simulate_run(config, config.seed + r, lam) for r in range(first, last)]


def run_records(config: ExperimentConfig) -> list[RunRecord]:
    """All replications of ``config``, in replication order."""
    lam = _lam(config)
    if config.jobs <= 1 or config.reps < 2:
        return _run_block(config, 0, config.reps, lam)
    blocks = max(config.jobs * 4, 1)
    edges = np.linspace(0, config.reps, blocks + 1).astype(int)
    with ProcessPoolExecutor(max_workers=config.jobs) as pool:
        futures = [
            pool.submit(_run_block, config, int(lo), int(hi), lam)
            for lo, hi in zip(edges[:-1], edges[1:])
            if hi > lo
        ]
        return [rec for fut in futures for rec in fut.result()]


def monte_carlo(config: ExperimentConfig) -> MonteCarloSummary:
    start = time.perf_counter()
    records = run_records(config)
    mean, se = _mean_se([r.realized_regret for r in records])
    excess, se_excess = _mean_se([r.excess_regret for r in records])
    return MonteCarloSummary(
        mean_regret=mean,
        se=se,
        reps=len(records),
        mean_excess=excess,
        se_excess=se_excess,
        mean_arms=math.fsum(r.K for r in records) / len(records),
        wall_time_ms=1000.0 * (time.perf_counter() - start),
        records=records if config.keep_records else None,
    )


RESULT_COLUMNS = [
    "table",
    "policy",
    "prior",
    "reward",
    "n",
    "reps",
    "mean_regret",
    "se",
    "mean_excess",
    "se_excess",
    "mean_arms",
    "wall_time_ms",
    "base_seed",
]


def result_row(config: ExperimentConfig, summary: MonteCarloSummary, table: str = "", timing: bool = False) -> dict:
    """CSV row for one cell; ``wall_time_ms`` is left blank unless ``timing``
    so that reruns with the same flags produce identical files."""
    return {
        "table": table,
        "policy": str(config.policy),
        "prior": config.arm_label,
        "reward": "dataset" if config.dataset is not None else str(config.reward),
        "n": config.n,
        "reps": summary.reps,
        "mean_regret": f"{summary.mean_regret:.6f}",
        "se": f"{summary.se:.6f}",
        "mean_excess": f"{summary.mean_excess:.6f}",
        "se_excess": f"{summary.se_excess:.6f}",
        "mean_arms": f"{summary.mean_arms:.4f}",
        "wall_time_ms": f"{summary.wall_time_ms:.0f}" if timing else "",
        "base_seed": config.seed,
    }


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
