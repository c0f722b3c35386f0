"""Reward distributions for synthetic arms, and replay of recorded latencies.

Rewards are costs: smaller is better, and every model produces non-negative
values whose mean given the arm is ``mu``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import stats

from .core import BanditError, ConfigurationError


class DatasetFormatError(BanditError, ValueError):
    pass


class ReplayExhaustedError(BanditError, RuntimeError):
    """An arm was played more often than its recorded trace allows."""


class RewardModel:
    name = "reward"
    binary = False
    # lam is exactly 1 when every non-zero reward equals 1
    unit_positive_mean = False
    # set when E(X | X > 0) = scale * mu
    positive_mean_scale: float | None = None
    max_mean = math.inf

    def check_mean(self, mu: float) -> None:
        if not 0.0 <= mu <= self.max_mean:
            raise ValueError(f"{self.name}: mean {mu} outside [0, {self.max_mean}]")

    def sampler(self, mu: float, rng: np.random.Generator) -> Callable[[], float]:
        """Zero-argument callable drawing i.i.d. rewards of mean ``mu``."""
        raise NotImplementedError

    def draw_many(self, mu: float, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def positive_mean(self, mu: float) -> float:
        """``E_mu(X | X > 0)``."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name


class Bernoulli(RewardModel):
    name = "bernoulli"
    binary = True
    unit_positive_mean = True
    max_mean = 1.0

    def sampler(self, mu, rng):
        self.check_mean(mu)
        rand = rng.random
        return lambda: 1.0 if rand() < mu else 0.0

    def draw_many(self, mu, rng, size):
        self.check_mean(mu)
        return (rng.random(size) < mu).astype(float)

    def positive_mean(self, mu):
        return 1.0


class Poisson(RewardModel):
    name = "poisson"

    def sampler(self, mu, rng):
        self.check_mean(mu)
        pois = rng.poisson
        return lambda: float(pois(mu))

    def draw_many(self, mu, rng, size):
        self.check_mean(mu)
        return rng.poisson(mu, size).astype(float)

    def positive_mean(self, mu):
        if mu <= 0.0:
            return 1.0
        return mu / -math.expm1(-mu)


class BinomialBuilder:
    """Distribution on ``0..levels`` with mean ``mu``: Binomial(levels, mu/levels)."""

    def __init__(self, levels: int):
        self.levels = levels

    def __call__(self, mu: float) -> np.ndarray:
        return stats.binom.pmf(np.arange(self.levels + 1), self.levels, mu / self.levels)


class BoundedDiscrete(RewardModel):
    """Integer rewards on ``0..levels`` with a user-supplied pmf builder."""

    def __init__(self, levels: int, builder: Callable[[float], np.ndarray] | None = None):
        if levels < 2:
            raise ConfigurationError("bounded discrete rewards need at least 2 levels")
        self.levels = levels
        self.builder = builder or BinomialBuilder(levels)
        self.max_mean = float(levels)
        self.name = f"discrete:I={levels}"

    def pmf(self, mu: float) -> np.ndarray:
        probs = np.asarray(self.builder(mu), dtype=float)
        if probs.shape != (self.levels + 1,) or np.any(probs < -1e-12):
            raise ConfigurationError("pmf builder must return levels + 1 probabilities")
        if abs(probs.sum() - 1.0) > 1e-9 or abs(probs @ np.arange(self.levels + 1) - mu) > 1e-9:
            raise ConfigurationError(f"pmf built for mean {mu} has the wrong total or mean")
        return probs

    def sampler(self, mu, rng):
        self.check_mean(mu)
        cdf = np.cumsum(self.pmf(mu)).tolist()
        cdf[-1] = 1.0
        rand = rng.random
        return lambda: float(bisect.bisect_right(cdf, rand()))

    def draw_many(self, mu, rng, size):
        self.check_mean(mu)
        cdf = np.cumsum(self.pmf(mu))
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right").astype(float)

    def positive_mean(self, mu):
        p0 = self.pmf(mu)[0]
        return mu / (1.0 - p0) if p0 < 1.0 else 1.0


def _exponential(rng, size=None):
    return rng.exponential(1.0, size)


def _uniform(rng, size=None):
    return rng.uniform(0.0, 2.0, size)


def _gamma2(rng, size=None):
    return rng.gamma(2.0, 0.5, size)


# name -> (sampler of Z with EZ = 1, E(Z | Z > 0))
_BASES = {
    "exponential": (_exponential, 1.0),
    "uniform": (_uniform, 1.0),
    "gamma2": (_gamma2, 1.0),
}


class ScaledContinuous(RewardModel):
    """``X = mu * Z`` for a continuous non-negative ``Z`` with mean 1."""

    def __init__(self, base: str = "exponential"):
        if base not in _BASES:
            raise ConfigurationError(f"unknown base distribution {base!r}; choose from {sorted(_BASES)}")
        self.base = base
        self._z, self.positive_mean_scale = _BASES[base]
        self.name = f"scaled:{base}"

    def sampler(self, mu, rng):
        self.check_mean(mu)
        z = self._z
        return lambda: mu * float(z(rng))

    def draw_many(self, mu, rng, size):
        self.check_mean(mu)
        return mu * self._z(rng, size)

    def positive_mean(self, mu):
        return mu * self.positive_mean_scale


def parse_reward(text: str) -> RewardModel:
    """``bernoulli``, ``poisson``, ``discrete:I=4`` or ``scaled[:exponential|uniform|gamma2]``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    if name == "bernoulli":
        return Bernoulli()
    if name == "poisson":
        return Poisson()
    if name == "discrete":
        key, _, val = arg.partition("=")
        if key.upper() != "I" or not val:
            raise ConfigurationError("discrete rewards are given as discrete:I=<levels>")
        return BoundedDiscrete(int(val))
    if name in ("scaled", "continuous"):
        return ScaledContinuous(arg or "exponential")
    raise ConfigurationError(f"unknown reward model {text!r}")


def draw(model: RewardModel, mu: float, rng: np.random.Generator) -> float:
    return model.sampler(mu, rng)()


@dataclass(frozen=True)
class DatasetPool:
    """Recorded reward traces, one per arm (e.g. page retrieval latencies in ms)."""

    arms: tuple[np.ndarray, ...]
    arm_means: tuple[float, ...]
    source: str = ""

    @classmethod
    def from_traces(cls, traces: Sequence[Sequence[float]], source: str = "") -> "DatasetPool":
        arms = []
        for i, trace in enumerate(traces, start=1):
            arr = np.asarray(trace, dtype=float)
            if arr.size == 0:
                raise DatasetFormatError(f"arm {i} has no observations")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise DatasetFormatError(f"arm {i} has negative or non-finite values")
            arr.setflags(write=False)
            arms.append(arr)
        if not arms:
            raise DatasetFormatError("dataset contains no arms")
        return cls(tuple(arms), tuple(float(a.mean()) for a in arms), source)

    def __len__(self) -> int:
        return len(self.arms)

    @property
    def min_trace_length(self) -> int:
        return min(a.size for a in self.arms)

    @property
    def best_mean(self) -> float:
        return min(self.arm_means)


def _tokens(line: str) -> list[str]:
    if "," in line:
        return [tok.strip() for tok in line.split(",")]
    return line.split()


def load_dataset(path: str | Path, orientation: str = "auto") -> DatasetPool:
    """Read a numeric text file of traces.

    Values are separated by commas or whitespace.  With ``orientation="columns"``
    each column is one arm (empty comma fields count as missing); with
    ``"rows"`` each line is one arm.  ``"auto"`` picks columns when there are
    at least as many lines as columns.  Blank lines and ``#`` comments are
    skipped.
    """
    if orientation not in ("auto", "columns", "rows"):
        raise ValueError(f"orientation must be auto, columns or rows, not {orientation!r}")
    rows: list[list[float | None]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            row: list[float | None] = []
            for tok in _tokens(line):
                if tok == "":
                    row.append(None)
                    continue
                try:
                    val = float(tok)
                except ValueError:
                    raise DatasetFormatError(f"{path}: line {lineno}: cannot parse {tok!r}") from None
                if not math.isfinite(val) or val < 0:
                    raise DatasetFormatError(f"{path}: line {lineno}: invalid value {tok!r}")
                row.append(val)
            rows.append(row)
    if not rows:
        raise DatasetFormatError(f"{path}: no data")

    width = max(len(r) for r in rows)
    if orientation == "auto":
        orientation = "columns" if len(rows) >= width else "rows"
    if orientation == "rows":
        traces = [[v for v in r if v is not None] for r in rows]
    else:
        traces = [[r[j] for r in rows if j < len(r) and r[j] is not None] for j in range(width)]
    return DatasetPool.from_traces(traces, source=str(path))


def replay_arm(pool: DatasetPool, arm: int, rng: np.random.Generator) -> Iterator[float]:
    """Yield pool arm ``arm`` (0-based) in a fresh random order, without replacement."""
    if not 0 <= arm < len(pool):
        raise IndexError(f"pool has {len(pool)} arms, no arm {arm}")
    trace = pool.arms[arm]
    yield from trace[rng.permutation(trace.size)].tolist()
    raise ReplayExhaustedError(
        f"arm {arm} of the dataset has only {trace.size} rewards; reduce the horizon"
    )
