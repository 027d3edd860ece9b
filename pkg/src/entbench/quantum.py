"""Acceptance operators for testing a maximally entangled state.

Every test here is an explicit matrix with 0 <= T <= I.  Operators on several
sample pairs are stored pair-major: the factor order is (A1, B1, A2, B2, ...).
Operators built from a POVM on Alice's side come out group-major
(A1, ..., Ak, B1, ..., Bk) and are permuted before comparison.

The one-way construction pairs each POVM vector with its entrywise conjugate:

    T(M) = sum_i p_i |u_i (x) conj(u_i)><u_i (x) conj(u_i)|

which accepts the maximally entangled state with certainty and has trace equal
to the dimension of Alice's side.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .classical import beta_binomial, binomial_ump_test
from .states import (
    Ket,
    Operator,
    RankOnePOVM,
    TestOperator,
    bell_basis,
    max_entangled_ket,
    mixed_tensor_sum,
    permute_systems,
    proj,
)
from .twirl import GroupAction, TwirlEstimate, haar_unitaries, mc_twirl


def _pair_labels(k: int) -> tuple[str, ...]:
    return tuple(x for i in range(1, k + 1) for x in (f"A{i}", f"B{i}"))


def _group_labels(k: int) -> tuple[str, ...]:
    return tuple(f"A{i}" for i in range(1, k + 1)) + tuple(f"B{i}" for i in range(1, k + 1))


def to_pair_major(op: Operator) -> Operator:
    """Reorder (A1..Ak, B1..Bk) factors to (A1, B1, ..., Ak, Bk)."""
    k = len(op.dims) // 2
    order = [j for i in range(k) for j in (i, k + i)]
    out = permute_systems(op, order)
    return type(op)(out.mat, out.dims, out.labels)


def to_group_major(op: Operator) -> Operator:
    """Reorder (A1, B1, ..., Ak, Bk) factors to (A1..Ak, B1..Bk)."""
    k = len(op.dims) // 2
    order = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
    out = permute_systems(op, order)
    return type(op)(out.mat, out.dims, out.labels)


def test_from_povm(povm: RankOnePOVM, d: int | None = None) -> TestOperator:
    """Acceptance operator of the one-way protocol driven by a rank-one POVM.

    The POVM lives on Alice's side of dimension D; the result acts on the
    2D-fold space group-major.  If ``d`` divides into D as d^k the factors are
    labeled (A1..Ak, B1..Bk); otherwise one A and one B factor of dimension D.
    """
    vecs = povm.vectors
    big = np.einsum("ka,kb->kab", vecs, vecs.conj()).reshape(len(povm), -1)
    mat = np.einsum("k,ki,kj->ij", povm.weights, big, big.conj())
    dim = povm.dim
    if d is not None:
        k = round(math.log(dim, d))
        if d**k != dim:
            raise ValueError(f"POVM dim {dim} is not a power of {d}")
        dims = (d,) * (2 * k)
        labels = _group_labels(k)
    else:
        dims = (dim, dim)
        labels = ("A", "B")
    return TestOperator(mat, dims, labels)


def level_adjust(t: TestOperator, eps: float, alpha: float) -> TestOperator:
    """Randomize a level-0 test into a level-alpha test for the null defect <= eps.

    Accepting with probability (1-alpha)/(1-eps) on the T outcome (eps <= alpha)
    or with probability (eps-alpha)/eps on the complement outcome (eps > alpha)
    makes the acceptance probability at the null boundary exactly 1 - alpha.
    """
    if not 0.0 <= eps <= 1.0 or not 0.0 < alpha < 1.0:
        raise ValueError("need 0 <= eps <= 1 and 0 < alpha < 1")
    if eps <= alpha:
        mat = (1.0 - alpha) / (1.0 - eps) * t.mat
    else:
        mat = t.mat + (eps - alpha) / eps * (np.eye(t.dim) - t.mat)
    return TestOperator(mat, t.dims, t.labels)


def binomial_operator_test(t: TestOperator, eps: float, alpha: float, n: int) -> TestOperator:
    """Repeat the two-outcome test {T, I-T} on n copies, then threshold the count.

    The result is sum_{k < l} S_{n,k} + gamma S_{n,l} where S_{n,k} is the
    symmetrized sum of tensor products with k failure factors (I - T) and
    (l, gamma) is the binomial UMP threshold at the null boundary eps.
    """
    ct = binomial_ump_test(n, eps, alpha)
    comp = np.eye(t.dim) - t.mat
    mat = np.zeros((t.dim**n, t.dim**n), dtype=complex)
    for k in range(ct.threshold):
        mat += mixed_tensor_sum(t.mat, comp, n, k)
    mat += ct.gamma * mixed_tensor_sum(t.mat, comp, n, ct.threshold)
    dims = t.dims * n
    labels = tuple(f"{lab}.{i}" for i in range(1, n + 1) for lab in t.labels)
    return TestOperator(mat, dims, labels)


# ---------------------------------------------------------------------------
# covariant tests and their exact error probabilities


def one_sample_covariant_test(d: int) -> TestOperator:
    """Twirl of the computational-basis one-way test: P + (I - P)/(d+1)."""
    p = proj(max_entangled_ket(d))
    mat = p + (np.eye(d * d) - p) / (d + 1)
    return TestOperator(mat, (d, d), ("A", "B"))


def two_sample_covariant_test(d: int) -> TestOperator:
    """P (x) P + (I-P) (x) (I-P) / (d^2 - 1) on two pairs, pair-major."""
    p = proj(max_entangled_ket(d))
    q = np.eye(d * d) - p
    mat = np.kron(p, p) + np.kron(q, q) / (d * d - 1)
    return TestOperator(mat, (d, d, d, d), _pair_labels(2))


def two_sample_trace(d: int, p: float) -> float:
    """(1-p)^2 + p^2/(d^2-1): acceptance of the two-sample covariant test."""
    return (1.0 - p) ** 2 + p * p / (d * d - 1)


def bell_pair_test(d: int) -> TestOperator:
    """One-way test driven by the Bell measurement on Alice's two samples."""
    vecs = np.array([k.vec for k in bell_basis(d)])
    povm = RankOnePOVM(np.ones(d * d), vecs)
    return to_pair_major(test_from_povm(povm, d))


def pooled_covariant_test(d: int, n: int) -> TestOperator:
    """The one-sample covariant test applied to the pooled d^n x d^n pair."""
    if (d * d) ** n > 4096:
        raise ValueError("pooled operator too large; use pooled_trace for big n")
    p1 = proj(max_entangled_ket(d))
    ppow = p1.copy()
    for _ in range(n - 1):
        ppow = np.kron(ppow, p1)
    mat = ppow + (np.eye((d * d) ** n) - ppow) / (d**n + 1)
    return TestOperator(mat, (d, d) * n, _pair_labels(n))


def pooled_trace(d: int, n: int, p: float) -> float:
    """(d^n (1-p)^n + 1) / (d^n + 1): acceptance of the pooled test on defect p."""
    return (d**n * (1.0 - p) ** n + 1.0) / (d**n + 1.0)


def mapped_boundary(d: int, x: float) -> float:
    """Failure probability of one two-sample round when each copy has defect x."""
    return 2.0 * x - d * d * x * x / (d * d - 1)


def beta_one_way(d: int, eps: float, alpha: float, p: float) -> float:
    """Exact type-2 error of the level-adjusted one-sample covariant test."""
    r = d / (d + 1.0)
    if r * eps <= alpha:
        return (1.0 - alpha) * (1.0 - r * p) / (1.0 - r * eps)
    return 1.0 - alpha * p / eps


def beta_pair_repeated(d: int, n: int, eps: float, alpha: float, p: float) -> float:
    """Type-2 error of n repetitions of the two-sample covariant test (2n copies)."""
    cap = (d * d - 1) / (d * d)
    if eps > cap:
        warnings.warn(
            f"eps={eps} exceeds {cap}; the mapped boundary folds back and the "
            "bound is outside its validity region",
            stacklevel=2,
        )
    return beta_binomial(n, mapped_boundary(d, eps), alpha, mapped_boundary(d, p))


# ---------------------------------------------------------------------------
# sequential (one-way between Alice's samples) covariant test


def _sequential_seed_vectors(d: int) -> tuple[np.ndarray, np.ndarray]:
    u1 = np.zeros(d, dtype=complex)
    u1[0] = 1.0
    u2 = np.zeros(d, dtype=complex)
    u2[0] = 1.0 / math.sqrt(d)
    u2[1] = math.sqrt(1.0 - 1.0 / d)
    return u1, u2


class ScalarEstimate(NamedTuple):
    value: float
    stderr: float
    samples: int


def sequential_covariant_trace(
    sigma, samples: int, rng: np.random.Generator
) -> ScalarEstimate:
    """Monte-Carlo estimate of the sequential covariant test's acceptance.

    Alice measures her first sample covariantly and steers the basis on the
    second; the POVM average is d^2 (g x g)|u1 x u2><u1 x u2|(g x g)^dag over
    Haar g with |<u1|u2>|^2 = 1/d.  Per sample g the integrand factorizes into
    the product of two pair overlaps, so no big matrices are needed.
    """
    mat = sigma.mat if isinstance(sigma, Operator) else np.asarray(sigma, dtype=complex)
    d = math.isqrt(mat.shape[0])
    if d * d != mat.shape[0]:
        raise ValueError("state must live on a d x d pair")
    u1, u2 = _sequential_seed_vectors(d)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        batch = min(4096, samples - done)
        g = haar_unitaries(d, batch, rng, special=True)
        vals = np.ones(batch)
        for u in (u1, u2):
            gu = g @ u
            w = np.einsum("na,nb->nab", gu, gu.conj()).reshape(batch, d * d)
            vals = vals * np.real(np.einsum("ni,ij,nj->n", w.conj(), mat, w))
        vals = d * d * vals
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
        done += batch
    mean = total / samples
    var = max(total_sq - samples * mean * mean, 0.0) / max(samples - 1, 1)
    return ScalarEstimate(mean, math.sqrt(var / samples), samples)


def sequential_covariant_operator(
    d: int, samples: int, rng: np.random.Generator
) -> TwirlEstimate:
    """MC average of the sequential covariant test operator, pair-major."""
    u1, u2 = _sequential_seed_vectors(d)
    seed = d * d * np.kron(proj(np.kron(u1, u1.conj())), proj(np.kron(u2, u2.conj())))
    return mc_twirl(seed, GroupAction("local", d, 2), samples, rng)


# ---------------------------------------------------------------------------
# structural predicates


class SeparableBoundResult(NamedTuple):
    holds: bool
    trace: float
    overlap: float


def separable_trace_bound(terms, d: int, tol: float = 1e-10) -> SeparableBoundResult:
    """Check Tr T >= d <phi0|T|phi0> for T = sum_i a_i A_i (x) B_i, a_i >= 0.

    Holds for every genuinely separable operator; entangled acceptance
    operators such as |phi0><phi0| itself violate it.
    """
    phi = max_entangled_ket(d).vec
    total_tr = 0.0
    total_ov = 0.0
    for weight, a_mat, b_mat in terms:
        if weight < 0:
            raise ValueError("separable decomposition needs nonnegative weights")
        term = weight * np.kron(np.asarray(a_mat), np.asarray(b_mat))
        total_tr += float(np.trace(term).real)
        total_ov += float(np.real(phi.conj() @ term @ phi))
    return SeparableBoundResult(total_tr >= d * total_ov - tol, total_tr, total_ov)


def is_max_entangled(u, tol: float = 1e-10) -> bool:
    """Whether u on A1 (x) A2 is maximally entangled.

    Evaluates the two commutation residuals on u (x) conj(u): projecting one
    pair onto the maximally entangled vector while the other pair misses it
    must annihilate the vector.  Equivalent to all singular values of the
    amplitude matrix being 1/sqrt(d).
    """
    vec = u.vec if isinstance(u, Ket) else np.asarray(u, dtype=complex).reshape(-1)
    d = math.isqrt(vec.size)
    if d * d != vec.size:
        raise ValueError("vector must live on a d x d pair")
    w = Ket(np.kron(vec, vec.conj()), (d, d, d, d), ("A1", "A2", "B1", "B2"))
    w = permute_systems(w, ("A1", "B1", "A2", "B2"))
    p = proj(max_entangled_ket(d))
    q = np.eye(d * d) - p
    r1 = np.linalg.norm(np.kron(p, q) @ w.vec)
    r2 = np.linalg.norm(np.kron(q, p) @ w.vec)
    return bool(r1 <= tol and r2 <= tol)


def simplex_completion(phi) -> list[Ket]:
    """d orthonormal vectors, each overlapping phi by exactly 1/sqrt(d).

    Offsets from phi/sqrt(d) are the vertices of a regular simplex in the
    orthocomplement of phi, so the pairwise offset inner products are -1/d.
    """
    vec = phi.vec if isinstance(phi, Ket) else np.asarray(phi, dtype=complex).reshape(-1)
    d = vec.size
    if d < 2:
        raise ValueError("need dimension >= 2")
    if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
        raise ValueError("phi must be a unit vector")
    comp = linalg.null_space(vec.conj()[np.newaxis, :])
    helmert = np.zeros((d, d))
    helmert[0, :] = 1.0 / math.sqrt(d)
    for k in range(1, d):
        helmert[k, :k] = 1.0 / math.sqrt(k * (k + 1))
        helmert[k, k] = -k / math.sqrt(k * (k + 1))
    frame = np.column_stack([vec, comp])  # unitary: phi then its orthocomplement
    cols = frame @ helmert
    return [Ket(cols[:, i], (d,), ("A",)) for i in range(d)]
