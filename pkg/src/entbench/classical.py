"""Uniformly most powerful randomized tests for binomial and Poisson families.

A randomized test on counts is stored in threshold form ``(l, gamma)``: accept
outcomes below the threshold with probability 1, at the threshold with
probability gamma, above it with probability 0 (mirrored for the
accept-large direction).  The threshold is pinned by

    sum_{k < l} P(k)  <  1 - alpha  <=  sum_{k <= l} P(k)

at the null boundary, with gamma chosen so the acceptance probability at the
boundary is exactly ``1 - alpha``.  gamma = 0 is permitted; when ``1 - alpha``
hits a cumulative sum exactly the two conventions describe the same test.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class HypothesisSpec:
    """Null-hypothesis side, boundary parameter, and significance level."""

    direction: str  # "le" or "ge"
    boundary: float
    level: float

    def __post_init__(self):
        if self.direction not in ("le", "ge"):
            raise ValueError("direction must be 'le' or 'ge'")
        if self.boundary < 0:
            raise ValueError("boundary must be nonnegative")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")


@dataclass(frozen=True)
class ClassicalRandomizedTest:
    """Threshold test; ``n=None`` marks the Poisson (unbounded count) domain."""

    threshold: int
    gamma: float
    n: int | None = None
    accept_large: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma {self.gamma} outside [0, 1]")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.n is not None and self.threshold > self.n:
            raise ValueError("threshold exceeds sample count")

    def accept_prob(self, k: int) -> float:
        if k == self.threshold:
            return self.gamma
        below = k < self.threshold
        return float(below != self.accept_large)

    def acceptance(self) -> np.ndarray:
        if self.n is None:
            raise ValueError("acceptance vector needs a finite domain")
        return np.array([self.accept_prob(k) for k in range(self.n + 1)])


def binom_pmf(n: int, k, p: float):
    """C(n, k) (1-p)^(n-k) p^k."""
    return stats.binom.pmf(k, n, p)


def poisson_pmf(rate: float, k):
    """e^(-rate) rate^k / k!."""
    return stats.poisson.pmf(k, rate)


def beta_one_sample(eps: float, alpha: float, q: float) -> float:
    """Minimum type-2 error at q for a single coin flip with null p <= eps."""
    _require(0.0 <= eps <= 1.0, "eps must lie in [0, 1]")
    _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
    if q <= eps:
        warnings.warn(
            f"alternative q={q} lies inside the null (<= {eps}); value is the "
            "acceptance probability there, not a type-2 error",
            stacklevel=2,
        )
    if eps <= alpha:
        return (1.0 - alpha) * (1.0 - q) / (1.0 - eps)
    return 1.0 - alpha * q / eps


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _threshold_from_cdf(cdf, pmf, alpha: float) -> tuple[int, float]:
    """Smallest l with cdf(l) >= 1 - alpha, plus the randomization weight."""
    target = 1.0 - alpha
    lo = 0
    while cdf(lo) < target:
        lo += 1
    below = cdf(lo - 1) if lo > 0 else 0.0
    mass = pmf(lo)
    gamma = (target - below) / mass if mass > 0 else 0.0
    return lo, min(max(gamma, 0.0), 1.0)


def binomial_ump_test(n: int, eps: float, alpha: float) -> ClassicalRandomizedTest:
    """Level-alpha UMP test for the null p <= eps on n Bernoulli trials."""
    _require(n >= 1, "need n >= 1")
    _require(0.0 <= eps <= 1.0, "eps must lie in [0, 1]")
    _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
    target = 1.0 - alpha
    # start near the quantile, then settle the defining inequalities exactly
    l = max(0, min(n, int(stats.binom.ppf(target, n, eps))))
    while l > 0 and stats.binom.cdf(l - 1, n, eps) >= target:
        l -= 1
    while stats.binom.cdf(l, n, eps) < target:
        l += 1
    below = stats.binom.cdf(l - 1, n, eps) if l > 0 else 0.0
    mass = stats.binom.pmf(l, n, eps)
    gamma = (target - below) / mass if mass > 0 else 0.0
    return ClassicalRandomizedTest(threshold=l, gamma=min(max(gamma, 0.0), 1.0), n=n)


def beta_binomial(n: int, eps: float, alpha: float, q: float) -> float:
    """Type-2 error of the binomial UMP test at alternative parameter q."""
    t = binomial_ump_test(n, eps, alpha)
    head = stats.binom.cdf(t.threshold - 1, n, q) if t.threshold > 0 else 0.0
    return float(head + t.gamma * stats.binom.pmf(t.threshold, n, q))


def binomial_ump_test_ge(n: int, eps: float, alpha: float) -> ClassicalRandomizedTest:
    """Mirrored direction: null p >= eps, acceptance favors large counts."""
    _require(n >= 1, "need n >= 1")
    _require(0.0 <= eps <= 1.0, "eps must lie in [0, 1]")
    _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
    target = 1.0 - alpha

    def upper(l: int) -> float:  # P(X >= l)
        return float(stats.binom.sf(l - 1, n, eps)) if l <= n else 0.0

    l = n
    while l > 0 and upper(l) < target:
        l -= 1
    while l < n and upper(l + 1) >= target:
        l += 1
    above = upper(l + 1)
    mass = stats.binom.pmf(l, n, eps)
    gamma = (target - above) / mass if mass > 0 else 0.0
    return ClassicalRandomizedTest(
        threshold=l, gamma=min(max(gamma, 0.0), 1.0), n=n, accept_large=True
    )


def beta_binomial_ge(n: int, eps: float, alpha: float, q: float) -> float:
    t = binomial_ump_test_ge(n, eps, alpha)
    tail = stats.binom.sf(t.threshold, n, q)
    return float(tail + t.gamma * stats.binom.pmf(t.threshold, n, q))


def poisson_ump_test(delta: float, alpha: float) -> ClassicalRandomizedTest:
    """Level-alpha UMP test for the null rate <= delta."""
    _require(delta >= 0.0, "delta must be nonnegative")
    _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
    l, gamma = _threshold_from_cdf(
        lambda k: stats.poisson.cdf(k, delta),
        lambda k: stats.poisson.pmf(k, delta),
        alpha,
    )
    return ClassicalRandomizedTest(threshold=l, gamma=gamma, n=None)


def beta_poisson(delta: float, alpha: float, t_alt: float) -> float:
    """Type-2 error of the Poisson UMP test at alternative rate t_alt."""
    t = poisson_ump_test(delta, alpha)
    head = stats.poisson.cdf(t.threshold - 1, t_alt) if t.threshold > 0 else 0.0
    return float(head + t.gamma * stats.poisson.pmf(t.threshold, t_alt))


@dataclass(frozen=True)
class LikelihoodRatioTest:
    """Most powerful level-alpha test of P0 vs P1 on a finite support."""

    accept: np.ndarray  # acceptance probability per outcome
    ratio: float  # likelihood-ratio threshold
    gamma: float

    def size(self, p0: np.ndarray) -> float:
        return 1.0 - float(p0 @ self.accept)

    def beta(self, p1: np.ndarray) -> float:
        return float(p1 @ self.accept)


def neyman_pearson(p0, p1, alpha: float) -> LikelihoodRatioTest:
    """Threshold the likelihood ratio P0/P1 so the size is exactly alpha."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    _require(p0.shape == p1.shape and p0.ndim == 1, "P0, P1 must be matching vectors")
    _require(abs(p0.sum() - 1.0) < 1e-9 and abs(p1.sum() - 1.0) < 1e-9, "inputs must be pmfs")
    _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p1 > 0, p0 / np.where(p1 > 0, p1, 1.0), np.inf)
    ratio = np.where((p1 == 0) & (p0 == 0), np.inf, ratio)
    target = 1.0 - alpha
    accept = np.zeros_like(p0)
    order = np.argsort(-ratio, kind="stable")
    taken = 0.0
    threshold, gamma = 0.0, 0.0
    i = 0
    while i < order.size:
        r = ratio[order[i]]
        tie = [j for j in order[i:] if ratio[j] == r]
        mass = float(p0[tie].sum())
        if taken + mass < target and mass > 0:
            accept[tie] = 1.0
            taken += mass
            i += len(tie)
            continue
        threshold = r
        gamma = (target - taken) / mass if mass > 0 else 0.0
        accept[tie] = gamma
        break
    return LikelihoodRatioTest(accept=accept, ratio=float(threshold), gamma=float(gamma))


def relative_entropy(eps: float, p: float) -> float:
    """Binary relative entropy d(eps || p) with the 0 log 0 = 0 convention."""
    _require(0.0 <= eps <= 1.0 and 0.0 <= p <= 1.0, "arguments must lie in [0, 1]")
    if eps == p:
        return 0.0
    out = 0.0
    if eps > 0.0:
        if p == 0.0:
            return math.inf
        out += eps * math.log(eps / p)
    if eps < 1.0:
        if p == 1.0:
            return math.inf
        out += (1.0 - eps) * math.log((1.0 - eps) / (1.0 - p))
    return out


def error_exponent(eps: float, p: float, alpha: float) -> float:
    """Large-deviation rate of the type-2 error for the null p <= eps at p > eps."""
    _require(0.0 <= alpha < 1.0, "alpha must lie in [0, 1)")
    if alpha > 0.0:
        return relative_entropy(eps, p)
    if eps == 0.0:
        return -math.log(1.0 - p)
    return 0.0


def poisson_limit_gap(n: int, delta: float, t_alt: float, alpha: float) -> float:
    """Distance between the rescaled binomial error and its Poisson limit."""
    return abs(beta_binomial(n, delta / n, alpha, t_alt / n) - beta_poisson(delta, alpha, t_alt))
