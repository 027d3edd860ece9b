"""Tests for two and three independently sourced pairs.

Each source i contributes one d x d pair with its own defect p_i; the null
hypothesis bounds the sum of the defects.  The optimal covariant acceptance
operators are eigenoperators of the projectors P_i onto the maximally
entangled vector of each pair, so the exact type-2 errors are short
polynomials in the p_i.
"""

from __future__ import annotations

import math
import warnings
from itertools import product
from typing import NamedTuple

import numpy as np

from .classical import beta_poisson
from .states import Ket, TestOperator, max_entangled_ket, permute_systems, proj


class TripleTermNote(UserWarning):
    """Emitted when the three-source error is evaluated.

    Values come from the acceptance operator, whose all-sources-failed
    coefficient is (d+2)/((d+1)^3 (d-1)); a commonly quoted closed form for
    this error instead puts that term over (d+1)^2 (d-1).  The operator form
    is the one confirmed independently by its coefficient formulas at the GHZ
    point and by Monte-Carlo twirling, so the quoted form appears to drop one
    power of (d+1).
    """


class ConditionedValue(NamedTuple):
    value: float
    condition_holds: bool


def beta_two_source(d: int, p1: float, p2: float) -> ConditionedValue:
    """Optimal level-0 error for two sources under the A-B locality class:

        (1-p1)(1-p2) + p1 p2 / (d^2 - 1),

    optimal when p1 p2/(d^2-1) <= (1-p1) p2 and <= p1 (1-p2).
    """
    _check_defects(p1, p2)
    value = (1.0 - p1) * (1.0 - p2) + p1 * p2 / (d * d - 1)
    cross = p1 * p2 / (d * d - 1)
    cond = cross <= (1.0 - p1) * p2 + 1e-15 and cross <= p1 * (1.0 - p2) + 1e-15
    return ConditionedValue(value, bool(cond))


def beta_two_source_local(d: int, p1: float, p2: float) -> float:
    """Optimal level-0 error under per-sample locality: the product of the
    one-sample covariant values, (1 - d p1/(d+1)) (1 - d p2/(d+1))."""
    _check_defects(p1, p2)
    r = d / (d + 1.0)
    return (1.0 - r * p1) * (1.0 - r * p2)


def _check_defects(*ps: float) -> None:
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"defect {p} outside [0, 1]")


def three_source_covariant_test(d: int) -> TestOperator:
    """Acceptance operator of the GHZ-seeded covariant test, pair-major.

    Eigenvalues on the 2^3 joint eigenspaces of (P_1, P_2, P_3): 1 on
    P (x) P (x) P, (d+2)/((d+1)^3 (d-1)) on the triple complement,
    1/((d+1)^2 (d-1)) when exactly one factor is on P, and 0 otherwise.
    """
    if d not in (2, 3):
        raise ValueError("triple-pair operators are capped at d in {2, 3}")
    p = proj(max_entangled_ket(d))
    q = np.eye(d * d) - p
    coeff_all_fail = (d + 2.0) / ((d + 1.0) ** 3 * (d - 1.0))
    coeff_one_pass = 1.0 / ((d + 1.0) ** 2 * (d - 1.0))
    mat = np.zeros(((d * d) ** 3,) * 2, dtype=complex)
    for bits in product((0, 1), repeat=3):
        n_fail = sum(bits)
        if n_fail == 0:
            coeff = 1.0
        elif n_fail == 2:
            coeff = coeff_one_pass
        elif n_fail == 3:
            coeff = coeff_all_fail
        else:
            continue
        term = np.ones((1, 1), dtype=complex)
        for bit in bits:
            term = np.kron(term, q if bit else p)
        mat += coeff * term
    labels = ("A1", "B1", "A2", "B2", "A3", "B3")
    return TestOperator(mat, (d, d) * 3, labels)


def ghz_ket(d: int, labels=("A1", "A2", "A3")) -> Ket:
    """(1/sqrt(d)) sum_i |i>|i>|i>."""
    vec = np.zeros(d**3, dtype=complex)
    step = d * d + d + 1
    vec[np.arange(d) * step] = 1.0 / math.sqrt(d)
    return Ket(vec, (d, d, d), labels)


def ghz_seed_operator(d: int) -> np.ndarray:
    """d^3 |GHZ (x) conj(GHZ)><...| arranged pair-major; its independent-local
    twirl is the three-source covariant test."""
    g = ghz_ket(d)
    vec = np.kron(g.vec, g.vec.conj())
    k = Ket(vec, (d,) * 6, ("A1", "A2", "A3", "B1", "B2", "B3"))
    k = permute_systems(k, ("A1", "B1", "A2", "B2", "A3", "B3"))
    return d**3 * proj(k.vec)


def triple_overlap_coefficients(
    beta1: float, beta2: float, beta3: float, gamma: float, d: int
) -> dict[tuple[int, int, int], float]:
    """Eigenvalues of the twirled triple test for a general seed vector pair.

    beta_i is the squared norm of the pair-i overlap of the seed, gamma the
    product of the squared seed norms; index bit 1 marks the complement on
    that pair.  At the GHZ point (beta_i = 1/d^2, gamma = 1) these reduce to
    the four coefficient values of the covariant test.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    d2m1 = d * d - 1.0
    d3 = float(d) ** 3
    betas = (beta1, beta2, beta3)

    def single(bi: float) -> float:
        return d3 / d2m1 * (bi / d - 1.0 / d3)

    def double(bi: float, bj: float, bk: float) -> float:
        return d3 / d2m1**2 * (bi - (bj + bk) / d + 1.0 / d3)

    out = {
        (0, 0, 0): 1.0,
        (0, 0, 1): single(beta3),
        (0, 1, 0): single(beta2),
        (1, 0, 0): single(beta1),
        (0, 1, 1): double(beta1, beta2, beta3),
        (1, 0, 1): double(beta2, beta1, beta3),
        (1, 1, 0): double(beta3, beta2, beta1),
        (1, 1, 1): d3 / d2m1**3 * (gamma - (d - 1.0) / d * sum(betas) - 1.0 / d3),
    }
    return out


def beta_three_source(d: int, p1: float, p2: float, p3: float) -> ConditionedValue:
    """Level-0 error of the GHZ-seeded covariant test, from its operator:

        prod(1-p_i) + (d+2) p1 p2 p3 / ((d+1)^3 (d-1))
                    + [one-pass terms] / ((d+1)^2 (d-1)),

    flagged optimal when every p_i <= (d-1)/d.
    """
    _check_defects(p1, p2, p3)
    warnings.warn(
        "three-source value uses the operator coefficient "
        "(d+2)/((d+1)^3 (d-1)) on the triple term; the commonly quoted closed "
        "form differs by one power of (d+1) there",
        TripleTermNote,
        stacklevel=2,
    )
    ps = (p1, p2, p3)
    value = (1.0 - p1) * (1.0 - p2) * (1.0 - p3)
    value += (d + 2.0) * p1 * p2 * p3 / ((d + 1.0) ** 3 * (d - 1.0))
    one_pass = (
        p1 * p2 * (1.0 - p3) + p1 * (1.0 - p2) * p3 + (1.0 - p1) * p2 * p3
    )
    value += one_pass / ((d + 1.0) ** 2 * (d - 1.0))
    cond = all(p <= (d - 1.0) / d + 1e-15 for p in ps)
    return ConditionedValue(value, bool(cond))


def beta_three_source_local(d: int, p1: float, p2: float, p3: float) -> float:
    """Product of the three one-sample covariant values (per-sample locality)."""
    _check_defects(p1, p2, p3)
    r = d / (d + 1.0)
    return (1.0 - r * p1) * (1.0 - r * p2) * (1.0 - r * p3)


def poisson_two_source(delta: float, alpha: float, t1: float, t2: float) -> float:
    """Asymptotic two-source error: counting failures from both sources
    collapses to a single Poisson test at rate t1 + t2."""
    if t1 < 0 or t2 < 0:
        raise ValueError("rates must be nonnegative")
    return beta_poisson(delta, alpha, t1 + t2)
