"""Reference models used to cross-check the simulator.

* The reveal-the-mean algorithm: an arm's mean becomes known at its first
  non-zero reward (costing ``lam`` on average), bad arms are dropped and the
  first arm below the target is exploited ``n`` times.  Its expected regret
  is ``r_n_of`` in :mod:`cbt_bandit.priors`.
* The same idea with the data-driven target ``k * lam / n`` after ``k`` arms,
  whose regret grows like ``C * I_beta * n^(beta/(beta+1))``.
* Tail probabilities of the stopping times at which CBT drops an arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .core import BanditError
from .priors import PriorModel, asymptotic_constant, i_beta
from .rewards import RewardModel


class TruncationError(BanditError, ValueError):
    """A truncated series was cut off before its tail became negligible."""


def mean_se(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), math.nan
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


# ------------------------------------------------------------ reveal-the-mean


def idealized_cbt_regret(prior: PriorModel, lam: float, n: int, zeta: float, rng: np.random.Generator) -> float:
    """One regret sample: ``lam * K + n * mu`` of the first arm with ``mu <= zeta``."""
    if prior.p(zeta) <= 0.0:
        raise ValueError(f"p({zeta}) = 0: no arm can be accepted")
    k = 0
    while True:
        k += 1
        mu = float(prior.sample(rng))
        if mu <= zeta:
            return lam * k + n * mu


def idealized_cbt_batch(
    prior: PriorModel, lam: float, n: int, zeta: float, reps: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`idealized_cbt_regret`; returns ``(regrets, arm_counts)``."""
    if prior.p(zeta) <= 0.0:
        raise ValueError(f"p({zeta}) = 0: no arm can be accepted")
    counts = np.zeros(reps, dtype=np.int64)
    accepted = np.full(reps, np.nan)
    active = np.arange(reps)
    while active.size:
        counts[active] += 1
        mu = prior.sample(rng, active.size)
        ok = mu <= zeta
        accepted[active[ok]] = mu[ok]
        active = active[~ok]
    return lam * counts + n * accepted, counts


@dataclass
class IdealizedOutcome:
    K: int
    mu_best: float
    regret: float


def idealized_empirical_cbt(prior: PriorModel, lam: float, n: int, rng: np.random.Generator) -> IdealizedOutcome:
    """Try arms until the best mean so far is at most ``k * lam / n``."""
    if lam <= 0 or n < 1:
        raise ValueError("need lam > 0 and n >= 1")
    best = math.inf
    k = 0
    while True:
        k += 1
        best = min(best, float(prior.sample(rng)))
        if best <= k * lam / n:
            return IdealizedOutcome(k, best, lam * k + n * best)


def idealized_empirical_batch(
    prior: PriorModel, lam: float, n: int, reps: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`idealized_empirical_cbt`; returns ``(regrets, stop_indices)``."""
    best = np.full(reps, np.inf)
    stop = np.zeros(reps, dtype=np.int64)
    active = np.arange(reps)
    k = 0
    while active.size:
        k += 1
        best[active] = np.minimum(best[active], prior.sample(rng, active.size))
        done = best[active] <= k * lam / n
        stop[active[done]] = k
        active = active[~done]
    return lam * stop + n * best, stop


def stop_index_pmf(prior: PriorModel, lam: float, n: int, k: int) -> float:
    """Exact ``P(K = k)`` for :func:`idealized_empirical_cbt`.

    Sum of the probability that an earlier arm first drops below the rising
    target at step ``k`` and the probability that arm ``k`` itself is the
    first to do so.
    """
    if k < 1:
        return 0.0
    target = k * lam / n
    p_now = prior.p(target)
    p_before = prior.p(target - lam / n)
    earlier = (1.0 - p_before) ** (k - 1) - (1.0 - p_now) ** (k - 1)
    newest = (1.0 - p_now) ** (k - 1) * p_now
    return earlier + newest


def stop_index_chisquare(prior: PriorModel, lam: float, n: int, stops: np.ndarray, min_expected: float = 5.0):
    """Chi-square goodness of fit of observed stop indices to :func:`stop_index_pmf`.

    Adjacent indices are pooled until every bin expects ``min_expected``
    counts; the last bin absorbs the upper tail.  Returns scipy's result.
    """
    stops = np.asarray(stops)
    total = stops.size
    kmax = int(stops.max())
    observed = np.bincount(stops, minlength=kmax + 1)[1:]
    pmf = np.array([stop_index_pmf(prior, lam, n, k) for k in range(1, kmax + 1)])
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, p in zip(observed, pmf):
        o_acc += o
        e_acc += p * total
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    tail = max(1.0 - pmf.sum(), 0.0) * total
    if obs_bins:
        obs_bins[-1] += o_acc
        exp_bins[-1] += e_acc + tail
    exp_arr = np.array(exp_bins)
    # rescale away the round-off between the pmf total and 1
    exp_arr *= total / exp_arr.sum()
    return stats.chisquare(np.array(obs_bins), exp_arr)


def theorem_a_summand(alpha: float, beta: float, lam: float, n: int, k) -> np.ndarray:
    """Term ``k`` of the series approximating the idealized empirical regret."""
    k = np.asarray(k, dtype=float)
    a = alpha * lam**beta / (beta * float(n) ** beta)
    x = a * k ** (beta + 1)
    return np.exp(-x) * lam * x * (2 * beta + 2 - 1 / (beta + 1))


def _series_tail_bound(alpha, beta, lam, n, k_max) -> float:
    # integral of the (eventually decreasing) summand beyond k_max
    a = alpha * lam**beta / (beta * float(n) ** beta)
    s = 1 + 1 / (beta + 1)
    x0 = a * k_max ** (beta + 1)
    integral = lam / (beta + 1) * a ** (-1 / (beta + 1)) * special.gammaincc(s, x0) * special.gamma(s)
    return integral * (2 * beta + 2 - 1 / (beta + 1))


def theorem_a_series(alpha: float, beta: float, lam: float, n: int, k_max: int | None = None) -> float:
    """Partial sum of the regret series up to ``k_max``.

    With ``k_max=None`` the cut-off is chosen automatically.  A given
    ``k_max`` whose neglected tail exceeds 1e-12 of the partial sum raises
    :class:`TruncationError`.
    """
    a = alpha * lam**beta / (beta * float(n) ** beta)
    if k_max is None:
        # exp(-x) x is below 1e-18 of its peak once x > 50
        k_max = int(math.ceil((60.0 / a) ** (1 / (beta + 1)))) + 1
    ks = np.arange(1, k_max + 1, dtype=float)
    total = math.fsum(theorem_a_summand(alpha, beta, lam, n, ks))
    if a * k_max ** (beta + 1) < 1.0 or _series_tail_bound(alpha, beta, lam, n, k_max) > 1e-12 * total:
        raise TruncationError(f"k_max={k_max} leaves a non-negligible tail")
    return total


def theorem_a_limit(alpha: float, beta: float, lam: float, n: int) -> float:
    """``C * I_beta * n^(beta/(beta+1))``."""
    return asymptotic_constant(alpha, beta, lam) * i_beta(beta) * n ** (beta / (beta + 1))


# ------------------------------------------------------------ stopping tails


@dataclass
class TailEstimate:
    probability: float
    se: float
    reps: int


def _bernoulli_stops(mu, zeta, b, c, horizon, reps, rng) -> np.ndarray:
    # Between failures S_t is flat while both thresholds grow with t, so a
    # crossing can only happen at a failure time; jump between those.
    stopped = np.zeros(reps, dtype=bool)
    times = np.zeros(reps, dtype=np.int64)
    active = np.arange(reps)
    j = 0
    while active.size:
        j += 1
        times[active] += rng.geometric(mu, active.size)
        t = times[active]
        live = t <= horizon
        active, t = active[live], t[live]
        tf = t.astype(float)
        spread = np.sqrt(np.maximum(j - j * j / tf, 0.0))
        cross = (j > b * tf * zeta) | (j > tf * zeta + c * spread)
        stopped[active[cross]] = True
        active = active[~cross]
    return stopped


def _generic_stops(model, mu, zeta, b, c, horizon, reps, rng, block=512) -> np.ndarray:
    stopped = np.zeros(reps, dtype=bool)
    active = np.arange(reps)
    s = np.zeros(reps)
    ss = np.zeros(reps)
    t0 = 0
    while active.size and t0 < horizon:
        width = min(block, horizon - t0)
        x = model.draw_many(mu, rng, (active.size, width))
        cs = s[active, None] + np.cumsum(x, axis=1)
        css = ss[active, None] + np.cumsum(x * x, axis=1)
        t = np.arange(t0 + 1, t0 + width + 1, dtype=float)
        var = np.maximum(css / t - (cs / t) ** 2, 0.0)
        spread = np.sqrt(var * t)
        cross = ((cs > b * t * zeta) | (cs > t * zeta + c * spread)).any(axis=1)
        stopped[active[cross]] = True
        s[active], ss[active] = cs[:, -1], css[:, -1]
        active = active[~cross]
        t0 += width
    return stopped


def stopping_tail_estimate(
    model: RewardModel,
    mu: float,
    zeta: float,
    b: float,
    c: float,
    horizon: int,
    reps: int,
    rng: np.random.Generator,
    method: str = "auto",
) -> TailEstimate:
    """Monte Carlo ``P(min(T_b, T_c) <= horizon)`` for an arm with mean ``mu``.

    ``T_b`` is the first ``t`` with ``S_t > b t zeta`` and ``T_c`` the first
    with ``S_t > t zeta + c sd_t sqrt(t)``: the times at which CBT with
    target ``zeta`` would drop the arm.  ``method="auto"`` uses an exact
    failure-time jump for 0/1 rewards and blockwise simulation otherwise.
    """
    if zeta <= 0 or horizon < 1 or reps < 1:
        raise ValueError("need zeta > 0, horizon >= 1 and reps >= 1")
    if method not in ("auto", "generic"):
        raise ValueError(f"unknown method {method!r}")
    if mu == 0.0:
        stopped = np.zeros(reps, dtype=bool)
    elif method == "auto" and model.binary:
        stopped = _bernoulli_stops(mu, zeta, b, c, horizon, reps, rng)
    else:
        stopped = _generic_stops(model, mu, zeta, b, c, horizon, reps, rng)
    prob, se = mean_se(stopped)
    return TailEstimate(prob, se, reps)
