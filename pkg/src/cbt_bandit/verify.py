"""Self-check suites run by ``cbt-bandit verify <suite>``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import oracle
from .policies import loglog
from .priors import (
    OneMinusCosPrior,
    PriorModel,
    SinPrior,
    Uniform01,
    i_beta,
    optimal_target,
    r_n_of,
)
from .rewards import Bernoulli

NAMED_PRIORS: tuple[PriorModel, ...] = (Uniform01(), SinPrior(), OneMinusCosPrior())


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def lemma1(grid_points: int = 10_000) -> list[Check]:
    """No grid target beats the solved optimal target, and its regret is ``n * zeta``."""
    checks = []
    for prior in NAMED_PRIORS:
        for n in (100, 10_000):
            zeta = optimal_target(prior, 1.0, n)
            best = r_n_of(prior, 1.0, n, zeta)
            grid = prior.upper * np.arange(1, grid_points + 1) / grid_points
            values = np.array([r_n_of(prior, 1.0, n, z) for z in grid])
            gap = values.min() - best
            ok = gap >= -1e-9 and math.isclose(best, n * zeta, rel_tol=1e-9)
            checks.append(
                Check(f"lemma1 {prior} n={n}", ok, f"zeta={zeta:.6g} r_n={best:.6g} grid_min-r_n={gap:.3g}")
            )
    return checks


def theorem_a(reps: int = 100_000, seed: int = 0) -> list[Check]:
    checks = []
    for prior in NAMED_PRIORS:
        n = 10**6
        ratio = oracle.theorem_a_series(prior.alpha, prior.beta, 1.0, n) / oracle.theorem_a_limit(
            prior.alpha, prior.beta, 1.0, n
        )
        checks.append(Check(f"series/limit beta={prior.beta:g} n=1e6", abs(ratio - 1) <= 0.01, f"ratio={ratio:.6f}"))
    n = 10**5
    prior = Uniform01()
    regrets, _ = oracle.idealized_empirical_batch(prior, 1.0, n, reps, np.random.default_rng(seed))
    ratio = regrets.mean() / oracle.theorem_a_limit(1.0, 1.0, 1.0, n)
    checks.append(Check("idealized empirical MC beta=1 n=1e5", 0.9 <= ratio <= 1.1, f"ratio={ratio:.4f}"))
    return checks


def tails(reps: int = 10_000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    model = Bernoulli()
    est = {}
    for n in (10**3, 10**5):
        zeta = optimal_target(Uniform01(), 1.0, n)
        b = loglog(n)
        est[n] = oracle.stopping_tail_estimate(model, 0.5 * zeta, zeta, b, b, n, reps, rng)
    slack = 3 * math.hypot(est[10**3].se, est[10**5].se)
    good = Check(
        "good arm rejection falls with n",
        est[10**5].probability < est[10**3].probability + slack,
        f"P(n=1e3)={est[10**3].probability:.4f} P(n=1e5)={est[10**5].probability:.4f} slack={slack:.4f}",
    )
    n = 10**4
    zeta = optimal_target(Uniform01(), 1.0, n)
    b = loglog(n)
    bad_est = oracle.stopping_tail_estimate(model, 10 * zeta, zeta, b, b, n, reps, rng)
    bad = Check("bad arm rejected n=1e4", bad_est.probability > 0.99, f"P={bad_est.probability:.4f}")
    return [good, bad]


def priors() -> list[Check]:
    checks = []
    for prior in NAMED_PRIORS:
        total, _ = integrate.quad(prior.density, 0.0, prior.upper)
        checks.append(Check(f"{prior} density integrates to 1", abs(total - 1) <= 1e-6, f"integral={total:.9f}"))
        worst_p = worst_v = worst_d = 0.0
        h = 1e-5
        for z in np.linspace(0.01, prior.upper - 0.01, 99):
            worst_p = max(worst_p, abs(prior.p(z) - PriorModel.p(prior, z)))
            worst_v = max(worst_v, abs(prior.v(z) - PriorModel.v(prior, z)))
            worst_d = max(worst_d, abs((prior.v(z + h) - prior.v(z - h)) / (2 * h) - prior.p(z)))
        checks.append(
            Check(
                f"{prior} closed forms",
                worst_p <= 1e-9 and worst_v <= 1e-9 and worst_d <= 1e-6,
                f"|p-quad|={worst_p:.2g} |v-quad|={worst_v:.2g} |v'-p|={worst_d:.2g}",
            )
        )
    expected = {1: 1.10, 2: 1.17, 3: 1.24, 10: 1.53}
    got = {b: round(i_beta(b), 2) for b in expected}
    checks.append(Check("I_beta values", got == expected, f"{got}"))
    return checks


SUITES = {"lemma1": lemma1, "theorem-a": theorem_a, "tails": tails, "priors": priors}
