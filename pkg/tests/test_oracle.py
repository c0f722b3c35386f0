import math
import zlib

import numpy as np
import pytest

from cbt_bandit import oracle
from cbt_bandit.oracle import TruncationError
from cbt_bandit.policies import loglog
from cbt_bandit.priors import (
    OneMinusCosPrior,
    SinPrior,
    Uniform01,
    asymptotic_constant,
    i_beta,
    optimal_target,
    r_n_of,
)
from cbt_bandit.rewards import Bernoulli, Poisson


class ScriptedRng:
    def __init__(self, values):
        self.values = list(values)

    def random(self, size=None):
        return self.values.pop(0)


# ------------------------------------------------------------ reveal-the-mean


def test_idealized_cbt_accepts_everything_above_support():
    rng = np.random.default_rng(0)
    regrets, counts = oracle.idealized_cbt_batch(Uniform01(), 1.0, 100, 2.0, 100_000, rng)
    assert np.all(counts == 1)
    mean, se = oracle.mean_se(regrets)
    assert abs(mean - 51.0) < 3 * se


def test_idealized_cbt_scalar_matches_definition():
    rng = ScriptedRng([0.9, 0.5, 0.05])
    assert oracle.idealized_cbt_regret(Uniform01(), 1.0, 100, 0.1, rng) == pytest.approx(3 + 5.0)


def test_idealized_cbt_uniform_matches_r_n():
    n = 100
    zeta = math.sqrt(2 / n)
    regrets, counts = oracle.idealized_cbt_batch(Uniform01(), 1.0, n, zeta, 10**6, np.random.default_rng(1))
    mean, se = oracle.mean_se(regrets)
    assert abs(mean - r_n_of(Uniform01(), 1.0, n, zeta)) < 3 * se
    assert r_n_of(Uniform01(), 1.0, n, zeta) == pytest.approx(14.1421, abs=1e-4)
    k_mean, k_se = oracle.mean_se(counts)
    assert abs(k_mean - 1 / zeta) < 3 * k_se


@pytest.mark.parametrize("prior", [Uniform01(), SinPrior(), OneMinusCosPrior()], ids=str)
@pytest.mark.parametrize("n", [100, 1000])
@pytest.mark.parametrize("scale", [0.5, 1.0, 2.0])
def test_idealized_cbt_grid(prior, n, scale):
    zeta = scale * optimal_target(prior, 1.0, n)
    seed = zlib.crc32(f"{prior}-{n}-{scale}".encode())
    regrets, _ = oracle.idealized_cbt_batch(prior, 1.0, n, zeta, 200_000, np.random.default_rng(seed))
    mean, se = oracle.mean_se(regrets)
    assert abs(mean - r_n_of(prior, 1.0, n, zeta)) < 3 * se


def test_idealized_cbt_zero_probability():
    with pytest.raises(ValueError):
        oracle.idealized_cbt_regret(Uniform01(), 1.0, 10, 0.0, np.random.default_rng(0))


def test_idealized_empirical_immediate_stop():
    out = oracle.idealized_empirical_cbt(Uniform01(), 1.0, 100, ScriptedRng([0.005]))
    assert out.K == 1
    assert out.regret == pytest.approx(1.0 + 0.5)


def test_idealized_empirical_threshold_invariant():
    rng = np.random.default_rng(4)
    for _ in range(2000):
        out = oracle.idealized_empirical_cbt(SinPrior(), 1.0, 500, rng)
        assert out.mu_best <= out.K / 500
        assert out.regret == pytest.approx(out.K + 500 * out.mu_best)


def test_idealized_empirical_uniform_limit():
    n = 10**5
    regrets, _ = oracle.idealized_empirical_batch(Uniform01(), 1.0, n, 10**5, np.random.default_rng(0))
    ratio = regrets.mean() / (math.sqrt(2) * i_beta(1) * math.sqrt(n))
    assert 0.9 <= ratio <= 1.1


def test_idealized_empirical_sin_limit():
    n = 10**5
    regrets, _ = oracle.idealized_empirical_batch(SinPrior(), 1.0, n, 10**5, np.random.default_rng(1))
    limit = asymptotic_constant(SinPrior().alpha, 2.0) * i_beta(2) * n ** (2 / 3)
    assert abs(regrets.mean() / limit - 1) <= 0.15


def test_stop_index_pmf_sums_to_one():
    total = sum(oracle.stop_index_pmf(Uniform01(), 1.0, 1000, k) for k in range(1, 400))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert oracle.stop_index_pmf(Uniform01(), 1.0, 1000, 0) == 0.0


@pytest.mark.parametrize("prior", [Uniform01(), SinPrior()], ids=str)
def test_stop_index_distribution(prior):
    n = 1000
    _, stops = oracle.idealized_empirical_batch(prior, 1.0, n, 100_000, np.random.default_rng(3))
    result = oracle.stop_index_chisquare(prior, 1.0, n, stops)
    assert result.pvalue > 0.001


# ------------------------------------------------------------ series


@pytest.mark.parametrize("prior", [Uniform01(), SinPrior(), OneMinusCosPrior()], ids=str)
def test_series_matches_limit(prior):
    n = 10**6
    ratio = oracle.theorem_a_series(prior.alpha, prior.beta, 1.0, n) / oracle.theorem_a_limit(
        prior.alpha, prior.beta, 1.0, n
    )
    assert abs(ratio - 1) <= 0.01


def test_uniform_limit_value():
    assert oracle.theorem_a_limit(1.0, 1.0, 1.0, 10**6) == pytest.approx(math.sqrt(2) * i_beta(1) * 1e3)


def test_series_summand_at_zero():
    assert oracle.theorem_a_summand(1.0, 1.0, 1.0, 1000, 0) == 0.0


def test_series_converged():
    auto = oracle.theorem_a_series(1.0, 1.0, 1.0, 10**4)
    a = 1.0 / 10**4
    k_max = int(math.ceil((60 / a) ** 0.5)) + 1
    doubled = oracle.theorem_a_series(1.0, 1.0, 1.0, 10**4, k_max=2 * k_max)
    assert abs(doubled - auto) <= 1e-10 * auto


def test_series_truncation_error():
    with pytest.raises(TruncationError):
        oracle.theorem_a_series(1.0, 1.0, 1.0, 10**4, k_max=50)


# ------------------------------------------------------------ stopping tails


def test_tail_zero_mean():
    est = oracle.stopping_tail_estimate(Bernoulli(), 0.0, 0.1, 2.0, 2.0, 1000, 100, np.random.default_rng(0))
    assert est.probability == 0.0


def test_tail_good_arm_trend():
    rng = np.random.default_rng(0)
    est = {}
    for n in (10**3, 10**4, 10**5):
        zeta = optimal_target(Uniform01(), 1.0, n)
        est[n] = oracle.stopping_tail_estimate(Bernoulli(), 0.5 * zeta, zeta, loglog(n), loglog(n), n, 10**4, rng)
    for lo, hi in ((10**3, 10**4), (10**4, 10**5)):
        slack = 3 * math.hypot(est[lo].se, est[hi].se)
        assert est[hi].probability < est[lo].probability + slack


def test_tail_bad_arm_rejected():
    n = 10**4
    zeta = optimal_target(Uniform01(), 1.0, n)
    est = oracle.stopping_tail_estimate(
        Bernoulli(), 10 * zeta, zeta, loglog(n), loglog(n), n, 10**4, np.random.default_rng(1)
    )
    assert est.probability > 0.99


def test_tail_bernoulli_fast_path_matches_generic():
    zeta, b = 0.05, loglog(300)
    args = (Bernoulli(), 0.5 * zeta, zeta, b, b, 300, 40_000)
    fast = oracle.stopping_tail_estimate(*args, np.random.default_rng(5))
    slow = oracle.stopping_tail_estimate(*args, np.random.default_rng(6), method="generic")
    assert abs(fast.probability - slow.probability) < 4 * math.hypot(fast.se, slow.se)


def test_tail_generic_model_runs():
    est = oracle.stopping_tail_estimate(Poisson(), 0.02, 0.05, 1.5, 1.5, 500, 2000, np.random.default_rng(2))
    assert 0.0 < est.probability < 1.0


def test_tail_rejects_bad_input():
    with pytest.raises(ValueError):
        oracle.stopping_tail_estimate(Bernoulli(), 0.1, 0.0, 1, 1, 10, 10, np.random.default_rng(0))
