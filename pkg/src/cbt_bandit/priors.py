"""Prior densities of arm means and the quantities derived from them.

For a prior ``g`` on the arm means, ``p(z) = P(mu <= z)`` is its CDF and
``v(z) = E(z - mu)^+`` the integral of ``p``.  The optimal target mean for a
horizon ``n`` solves ``v(z) = lam / n``, where ``lam`` is the expected first
non-zero reward of a fresh arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import ConfigurationError

MAX_BISECTION_STEPS = 200


class HorizonTooSmallError(ConfigurationError):
    """No target in the prior's support satisfies ``v(z) = lam / n``."""


def _x_minus_sin(x: float) -> float:
    # x - sin(x) without cancellation near 0
    if abs(x) >= 0.5:
        return x - math.sin(x)
    term = x**3 / 6.0
    total = 0.0
    for k in range(1, 12):
        total += term
        term *= -x * x / ((2 * k + 2) * (2 * k + 3))
    return total


def _cos_remainder(x: float) -> float:
    # cos(x) - 1 + x^2/2 without cancellation near 0
    if abs(x) >= 0.5:
        return math.cos(x) - 1.0 + 0.5 * x * x
    term = x**4 / 24.0
    total = 0.0
    for k in range(2, 13):
        total += term
        term *= -x * x / ((2 * k + 1) * (2 * k + 2))
    return total


class PriorModel:
    """Density of arm means, supported on ``(0, upper]``.

    ``alpha`` and ``beta`` describe the behaviour near zero,
    ``g(mu) ~ alpha * mu**(beta - 1)``.  Subclasses override ``p`` and ``v``
    with closed forms; the base versions integrate numerically.
    """

    name = "prior"
    alpha: float
    beta: float
    upper: float = 1.0

    def density(self, mu: float) -> float:
        raise NotImplementedError

    def p(self, z: float) -> float:
        if z <= 0.0:
            return 0.0
        z = min(z, self.upper)
        val, _ = integrate.quad(self.density, 0.0, z, epsabs=1e-12, epsrel=1e-12, limit=200)
        return min(val, 1.0)

    def v(self, z: float) -> float:
        if z <= 0.0:
            return 0.0
        hi = min(z, self.upper)
        val, _ = integrate.quad(self.p, 0.0, hi, epsabs=1e-12, epsrel=1e-12, limit=200)
        return val + max(z - self.upper, 0.0)

    @property
    def mean(self) -> float:
        val, _ = integrate.quad(lambda u: u * self.density(u), 0.0, self.upper, epsabs=1e-12)
        return val

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name

    def __eq__(self, other):
        return type(self) is type(other) and self.name == other.name

    def __hash__(self):
        return hash((type(self).__name__, self.name))


class Uniform01(PriorModel):
    name = "uniform"
    alpha = 1.0
    beta = 1.0

    def density(self, mu):
        return 1.0 if 0.0 < mu <= 1.0 else 0.0

    def p(self, z):
        return min(max(z, 0.0), 1.0)

    def v(self, z):
        if z <= 0.0:
            return 0.0
        if z <= 1.0:
            return 0.5 * z * z
        return z - 0.5

    @property
    def mean(self):
        return 0.5

    def sample(self, rng, size=None):
        return rng.random(size)


class SinPrior(PriorModel):
    """``g(mu) = (pi/2) sin(pi mu)`` on (0, 1)."""

    name = "sin"
    alpha = math.pi**2 / 2
    beta = 2.0

    def density(self, mu):
        return 0.5 * math.pi * math.sin(math.pi * mu) if 0.0 < mu <= 1.0 else 0.0

    def p(self, z):
        if z <= 0.0:
            return 0.0
        if z >= 1.0:
            return 1.0
        return math.sin(0.5 * math.pi * z) ** 2

    def v(self, z):
        if z <= 0.0:
            return 0.0
        if z <= 1.0:
            return _x_minus_sin(math.pi * z) / (2 * math.pi)
        return z - 0.5

    @property
    def mean(self):
        return 0.5

    def sample(self, rng, size=None):
        u = rng.random(size)
        return np.arccos(1.0 - 2.0 * u) / math.pi


class OneMinusCosPrior(PriorModel):
    """``g(mu) = 1 - cos(pi mu)`` on (0, 1)."""

    name = "1-cos"
    alpha = math.pi**2 / 2
    beta = 3.0

    def density(self, mu):
        return 2.0 * math.sin(0.5 * math.pi * mu) ** 2 if 0.0 < mu <= 1.0 else 0.0

    def p(self, z):
        if z <= 0.0:
            return 0.0
        if z >= 1.0:
            return 1.0
        return _x_minus_sin(math.pi * z) / math.pi

    def v(self, z):
        if z <= 0.0:
            return 0.0
        if z <= 1.0:
            return _cos_remainder(math.pi * z) / math.pi**2
        return z - self.mean

    @property
    def mean(self):
        return 0.5 + 2.0 / math.pi**2

    def sample(self, rng, size=None):
        # rejection from uniform proposals; the density is bounded by 2
        if size is None:
            while True:
                u, w = rng.random(2)
                if 2.0 * w <= 1.0 - math.cos(math.pi * u):
                    return float(u)
        n = int(np.prod(size))
        out = np.empty(n)
        filled = 0
        while filled < n:
            want = max(2 * (n - filled), 64)
            u = rng.random(want)
            w = rng.random(want)
            ok = u[2.0 * w <= 1.0 - np.cos(np.pi * u)]
            take = min(ok.size, n - filled)
            out[filled : filled + take] = ok[:take]
            filled += take
        return out.reshape(size)


@dataclass(frozen=True, repr=False)
class PowerLaw(PriorModel):
    """``g(mu) = alpha * mu**(beta - 1)`` on ``(0, cap]``.

    Normalisation forces ``alpha = beta / cap**beta``; passing an
    inconsistent ``alpha`` is rejected.
    """

    beta: float = 1.0
    cap: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if self.beta <= 0 or self.cap <= 0:
            raise ConfigurationError("power-law prior needs beta > 0 and cap > 0")
        norm = self.beta / self.cap**self.beta
        if self.alpha is None:
            object.__setattr__(self, "alpha", norm)
        elif abs(self.alpha * self.cap**self.beta / self.beta - 1.0) > 1e-6:
            raise ConfigurationError(
                f"power-law density does not integrate to 1 (alpha should be {norm:.6g})"
            )

    @property
    def name(self):
        return f"powerlaw:beta={self.beta:g},cap={self.cap:g}"

    @property
    def upper(self):
        return self.cap

    def density(self, mu):
        return self.alpha * mu ** (self.beta - 1) if 0.0 < mu <= self.cap else 0.0

    def p(self, z):
        if z <= 0.0:
            return 0.0
        return min(z / self.cap, 1.0) ** self.beta

    def v(self, z):
        if z <= 0.0:
            return 0.0
        b = self.beta
        if z <= self.cap:
            return z ** (b + 1) / ((b + 1) * self.cap**b)
        return z - self.mean

    @property
    def mean(self):
        return self.beta * self.cap / (self.beta + 1)

    def sample(self, rng, size=None):
        return self.cap * rng.random(size) ** (1.0 / self.beta)


PRIORS = {
    "uniform": Uniform01,
    "sin": SinPrior,
    "1-cos": OneMinusCosPrior,
    "one-minus-cos": OneMinusCosPrior,
}


def parse_prior(text: str) -> PriorModel:
    """Build a prior from ``uniform``, ``sin``, ``1-cos`` or ``powerlaw:beta=2,cap=1``."""
    name, _, args = text.strip().partition(":")
    name = name.lower()
    if name in PRIORS:
        if args:
            raise ConfigurationError(f"prior {name!r} takes no parameters")
        return PRIORS[name]()
    if name == "powerlaw":
        kwargs = {}
        for item in filter(None, args.split(",")):
            key, _, val = item.partition("=")
            if key not in ("alpha", "beta", "cap"):
                raise ConfigurationError(f"unknown power-law parameter {key!r}")
            kwargs[key] = float(val)
        return PowerLaw(**kwargs)
    raise ConfigurationError(f"unknown prior {text!r}")


def sample_mu(prior: PriorModel, rng: np.random.Generator) -> float:
    return float(prior.sample(rng))


def p_of(prior: PriorModel, zeta: float) -> float:
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    return prior.p(zeta)


def v_of(prior: PriorModel, zeta: float) -> float:
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    return prior.v(zeta)


def lambda_of(prior: PriorModel, reward) -> float:
    """Mean of the first non-zero reward of a fresh arm.

    ``reward`` is a reward model from :mod:`cbt_bandit.rewards`; it supplies
    ``E_mu(X | X > 0)`` through ``positive_mean(mu)``.
    """
    if getattr(reward, "unit_positive_mean", False):
        return 1.0
    scale = getattr(reward, "positive_mean_scale", None)
    if scale is not None:
        # X = mu Z: E(X | X > 0) = mu E(Z | Z > 0)
        return prior.mean * scale
    val, err = integrate.quad(
        lambda u: reward.positive_mean(u) * prior.density(u),
        0.0,
        prior.upper,
        epsabs=1e-12,
        epsrel=1e-10,
        limit=200,
    )
    if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1.0):
        raise ConfigurationError("experimentation cost integral does not converge")
    return val


def optimal_target(prior: PriorModel, lam: float, n: int) -> float:
    """Solve ``v(z) = lam / n`` by bisection on the prior's support."""
    if lam <= 0 or n < 1:
        raise ConfigurationError("need lam > 0 and n >= 1")
    target = lam / n
    tol = 1e-12 * target
    lo, hi = 0.0, prior.upper
    v_hi = prior.v(hi)
    if v_hi < target - tol:
        raise HorizonTooSmallError(
            f"lam/n = {target:.4g} exceeds v at the top of the support ({v_hi:.4g})"
        )
    if abs(v_hi - target) <= tol:
        return hi
    mid = 0.5 * (lo + hi)
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        diff = prior.v(mid) - target
        if abs(diff) <= tol or hi - lo <= 4 * math.ulp(mid):
            break
        if diff < 0:
            lo = mid
        else:
            hi = mid
    return mid


def asymptotic_constant(alpha: float, beta: float, lam: float = 1.0) -> float:
    """``C = (lam beta (beta + 1) / alpha)^(1/(beta + 1))``."""
    if alpha <= 0 or beta <= 0 or lam <= 0:
        raise ValueError("alpha, beta and lam must be positive")
    return (lam * beta * (beta + 1) / alpha) ** (1.0 / (beta + 1))


def asymptotic_target(alpha: float, beta: float, lam: float, n: int) -> float:
    return asymptotic_constant(alpha, beta, lam) * n ** (-1.0 / (beta + 1))


def lower_bound(alpha: float, beta: float, lam: float, n: int) -> float:
    """Asymptotic regret lower bound ``C n^(beta/(beta+1))``."""
    return asymptotic_constant(alpha, beta, lam) * n ** (beta / (beta + 1))


def i_beta(beta: float) -> float:
    """Regret inflation factor of the empirical target over the optimal one."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    q = 1.0 / (beta + 1)
    return q**q * (2.0 - q * q) * math.gamma(2.0 - beta * q)


def r_n_of(prior: PriorModel, lam: float, n: int, zeta: float) -> float:
    """Regret of the reveal-the-mean idealised algorithm with target ``zeta``."""
    pz = prior.p(zeta)
    if pz <= 0.0:
        raise ValueError(f"p({zeta}) = 0: no arm can be accepted")
    return lam / pz + n * zeta - n * prior.v(zeta) / pz
