import numpy as np
import pytest

from cbt_bandit.core import NEW_ARM, ContractViolation
from cbt_bandit.engine import (
    ExperimentConfig,
    monte_carlo,
    result_row,
    rows_to_csv,
    run_records,
    simulate_run,
)
from cbt_bandit.policies import CBTSpec, Policy, PolicySpec, parse_policy
from cbt_bandit.priors import SinPrior, Uniform01
from cbt_bandit.rewards import DatasetPool, Poisson, ScaledContinuous

POLICIES = [
    "cbt:zeta=auto",
    "empirical-cbt",
    "two-target:f=3",
    "f-failure:f=1",
    "s-run",
    "nonrecall-s-run",
    "m-learning",
    "ucbf",
    "eps-greedy:eps=0.05",
    "eps-first:eps=0.15",
    "eps-decreasing:eps=1",
]
NON_RECALLING = ["cbt:zeta=auto", "f-failure:f=1", "nonrecall-s-run", "two-target:f=3"]


def config(policy="cbt:zeta=auto", n=200, **kw):
    kw.setdefault("prior", Uniform01())
    return ExperimentConfig(parse_policy(policy), n, **kw)


@pytest.mark.parametrize("policy", POLICIES)
def test_pulls_sum_to_n(policy):
    for seed in range(5):
        rec = simulate_run(config(policy, 300), seed)
        assert rec.n == 300
        assert rec.K == len(rec.true_means) == len(rec.pulls)
        assert rec.realized_regret == pytest.approx(sum(t * mu for t, mu in zip(rec.pulls, rec.true_means)))
        assert rec.realized_regret >= 0


@pytest.mark.parametrize("policy", POLICIES)
def test_deterministic_given_seed(policy):
    cfg = config(policy, 300)
    assert simulate_run(cfg, 42) == simulate_run(cfg, 42)


@pytest.mark.parametrize("policy", POLICIES)
def test_single_trial(policy):
    rec = simulate_run(config(policy, 1), 3)
    assert rec.K == 1
    assert rec.realized_regret == rec.true_means[0]


def test_zero_target_rejects_every_arm_with_a_failure():
    rec = simulate_run(config("cbt:zeta=0,b=1,c=1", 500), 0)
    # an arm survives only while it has produced nothing but zeros
    assert rec.K > 10
    assert rec.realized_regret == pytest.approx(sum(t * m for t, m in zip(rec.pulls, rec.true_means)))
    # rejected arms were played until their first failure
    assert max(rec.pulls[:-1]) < 500


@pytest.mark.parametrize("policy", NON_RECALLING)
def test_non_recalling_single_pass(policy):
    class Recorder(Policy):
        def __init__(self, inner):
            self.inner, self.seq = inner, []

        def step(self, game):
            k = self.inner.step(game)
            self.seq.append(game.K + 1 if k == NEW_ARM else k)
            return k

    holder = {}

    class Wrap(PolicySpec):
        kind = "wrap"

        def build(self, ctx):
            holder["rec"] = Recorder(parse_policy(policy).build(ctx))
            return holder["rec"]

    cfg = ExperimentConfig(Wrap(), 500, prior=Uniform01())
    rec = simulate_run(cfg, 9)
    seq = holder["rec"].seq
    assert all(b in (a, a + 1) for a, b in zip(seq, seq[1:]))
    assert all(t > 0 for t in rec.pulls)


def test_contract_violation():
    class Bad(Policy):
        def step(self, game):
            return 5

    class BadSpec(PolicySpec):
        kind = "bad"

        def build(self, ctx):
            return Bad()

    with pytest.raises(ContractViolation):
        simulate_run(ExperimentConfig(BadSpec(), 10, prior=Uniform01()), 0)


def test_config_validation():
    spec = CBTSpec()
    with pytest.raises(ValueError):
        ExperimentConfig(spec, 0, prior=Uniform01())
    with pytest.raises(ValueError):
        ExperimentConfig(spec, 10, prior=Uniform01(), reps=0)
    with pytest.raises(ValueError):
        ExperimentConfig(spec, 10)
    pool = DatasetPool.from_traces([[1, 2, 3]])
    with pytest.raises(ValueError):
        ExperimentConfig(spec, 10, dataset=pool)


def test_prefix_stability():
    small = run_records(config(n=200, reps=20))
    large = run_records(config(n=200, reps=40))
    assert large[:20] == small


def test_jobs_do_not_change_results():
    one = monte_carlo(config("empirical-cbt", 200, reps=24, jobs=1, keep_records=True))
    two = monte_carlo(config("empirical-cbt", 200, reps=24, jobs=2, keep_records=True))
    assert one.records == two.records
    assert (one.mean_regret, one.se) == (two.mean_regret, two.se)


def test_summary_statistics():
    s = monte_carlo(config(n=100, reps=50, keep_records=True))
    regrets = np.array([r.realized_regret for r in s.records])
    assert s.mean_regret == pytest.approx(regrets.mean())
    assert s.se == pytest.approx(regrets.std(ddof=1) / np.sqrt(50))
    assert s.mean_excess == pytest.approx(s.mean_regret)
    assert s.mean_arms == pytest.approx(np.mean([r.K for r in s.records]))


def test_other_rewards_and_priors_run():
    for reward in (Poisson(), ScaledContinuous("exponential")):
        s = monte_carlo(config("cbt:zeta=auto", 200, prior=SinPrior(), reward=reward, reps=10))
        assert s.mean_regret > 0


def test_dataset_runs():
    rng = np.random.default_rng(0)
    traces = [rng.exponential(m, 60) + 1.0 for m in rng.uniform(10, 200, 30)]
    pool = DatasetPool.from_traces(traces)
    for policy in ("empirical-cbt", "eps-greedy:eps=0.05", "eps-first:eps=0.15", "eps-decreasing:eps=1"):
        cfg = ExperimentConfig(parse_policy(policy), 50, dataset=pool, reps=5)
        s = monte_carlo(cfg)
        assert s.mean_excess == pytest.approx(s.mean_regret - 50 * pool.best_mean)
        assert s.mean_excess >= 0


def test_dataset_pool_exhaustion_falls_back_to_recall():
    pool = DatasetPool.from_traces([[5, 5, 5, 5], [1, 1, 1, 1]])
    cfg = ExperimentConfig(parse_policy("eps-first:eps=1"), 4, dataset=pool, reps=1)
    rec = simulate_run(cfg, 0)
    assert rec.n == 4 and rec.K <= 2


def test_dataset_horizon_limited_by_trace():
    pool = DatasetPool.from_traces([[1, 2, 3], [1, 2]])
    with pytest.raises(ValueError):
        ExperimentConfig(parse_policy("empirical-cbt"), 3, dataset=pool)


def test_csv_rows_reproducible():
    cfg = config(n=100, reps=30, seed=5)
    a = rows_to_csv([result_row(cfg, monte_carlo(cfg), "x")])
    b = rows_to_csv([result_row(cfg, monte_carlo(cfg), "x")])
    assert a == b
    header, row = a.splitlines()
    assert header.startswith("table,policy,prior,reward,n,reps,mean_regret,se")
    assert ',"cbt:zeta=auto,b=loglog,c=loglog",' in row and row.endswith(",,5")
