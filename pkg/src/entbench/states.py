"""Dense complex linear algebra on labeled tensor-product spaces.

Vectors and operators carry an explicit factor structure: an ordered tuple of
subsystem dimensions with string labels.  The index convention is row-major
with the LEFT factor most significant, so the basis state ``|i, j>`` of a
``(dA, dB)`` system sits at flat index ``i * dB + j``.  Complex conjugation is
always entrywise in this computational basis.

Arrays held by the dataclasses are frozen (non-writeable); all operations
return new values, so everything here is safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12
POVM_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _default_labels(count: int) -> tuple[str, ...]:
    return tuple(f"s{i}" for i in range(count))


def _check_factors(size: int, dims: tuple[int, ...], labels: tuple[str, ...]) -> None:
    if any(d < 1 for d in dims):
        raise ValueError(f"factor dimensions must be positive, got {dims}")
    if math.prod(dims) != size:
        raise ValueError(f"total dimension {size} != product of factors {dims}")
    if len(labels) != len(dims):
        raise ValueError("one label per factor required")
    if len(set(labels)) != len(labels):
        raise ValueError(f"factor labels must be unique, got {labels}")


@dataclass(frozen=True)
class Ket:
    """Column vector on a labeled tensor-product space."""

    vec: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        vec = _frozen(np.asarray(self.vec).reshape(-1))
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(self.labels) if self.labels else _default_labels(len(dims))
        _check_factors(vec.size, dims, labels)
        object.__setattr__(self, "vec", vec)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.vec.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def normalized(self) -> "Ket":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.vec / n, self.dims, self.labels)

    def require_unit(self, tol: float = NORM_TOL) -> "Ket":
        if abs(self.norm - 1.0) > tol:
            raise ValueError(f"vector norm {self.norm} is not 1 within {tol}")
        return self

    def conj(self) -> "Ket":
        return Ket(np.conj(self.vec), self.dims, self.labels)


@dataclass(frozen=True)
class Operator:
    """Square matrix on a labeled tensor-product space."""

    mat: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        mat = _frozen(np.asarray(self.mat))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(self.labels) if self.labels else _default_labels(len(dims))
        _check_factors(mat.shape[0], dims, labels)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def relabel(self, labels) -> "Operator":
        return type(self)(self.mat, self.dims, tuple(labels))


@dataclass(frozen=True)
class DensityMatrix(Operator):
    """Trace-one positive semidefinite operator (a quantum state)."""

    def __post_init__(self):
        super().__post_init__()
        m = self.mat
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m)} is not 1")


@dataclass(frozen=True)
class TestOperator(Operator):
    """Acceptance operator T of a two-outcome test {T, I - T}, 0 <= T <= I."""

    def __post_init__(self):
        super().__post_init__()
        m = self.mat
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("test operator is not Hermitian within tolerance")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -PSD_TOL or evals.max() > 1.0 + PSD_TOL:
            raise ValueError(
                f"test operator eigenvalues [{evals.min()}, {evals.max()}] leave [0, 1]"
            )


@dataclass(frozen=True)
class RankOnePOVM:
    """Weighted family {(p_i, u_i)} of unit vectors with sum p_i |u_i><u_i| = I."""

    weights: np.ndarray
    vectors: np.ndarray  # shape (k, dim), rows are unit kets

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        v = np.asarray(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] != w.size:
            raise ValueError("need one weight per vector")
        if w.min() < 0:
            raise ValueError("POVM weights must be nonnegative")
        norms = np.linalg.norm(v, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValueError("POVM vectors must be unit")
        gram = (v.conj().T * w) @ v
        if np.max(np.abs(gram - np.eye(v.shape[1]))) > POVM_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        w.setflags(write=False)
        v2 = v.copy()
        v2.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v2)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.weights.size


# ---------------------------------------------------------------------------
# constructors


def max_entangled_ket(d: int, labels=("A", "B")) -> Ket:
    """(1/sqrt(d)) sum_i |i>|i> on a d x d bipartite space."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    vec = np.zeros(d * d, dtype=complex)
    vec[np.arange(d) * d + np.arange(d)] = 1.0 / math.sqrt(d)
    return Ket(vec, (d, d), labels)


def proj(u) -> np.ndarray:
    """|u><u| as a raw matrix."""
    v = u.vec if isinstance(u, Ket) else np.asarray(u, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def fidelity_defect(sigma) -> float:
    """1 - <phi0| sigma |phi0>, clamped to [0, 1]."""
    mat = sigma.mat if isinstance(sigma, Operator) else np.asarray(sigma, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("state must be a square matrix")
    d = math.isqrt(mat.shape[0])
    if d * d != mat.shape[0] or d < 2:
        raise ValueError(f"dimension {mat.shape[0]} is not d^2 of a d x d pair")
    phi = max_entangled_ket(d).vec
    p = 1.0 - float(np.real(phi.conj() @ mat @ phi))
    return min(max(p, 0.0), 1.0)


def isotropic_state(d: int, p: float, labels=("A", "B")) -> DensityMatrix:
    """(1-p)|phi0><phi0| + p (I - |phi0><phi0|) / (d^2 - 1); defect is exactly p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"defect p must lie in [0, 1], got {p}")
    pr = proj(max_entangled_ket(d))
    mat = (1.0 - p) * pr + (p / (d * d - 1)) * (np.eye(d * d) - pr)
    return DensityMatrix(mat, (d, d), labels)


def identity_operator(dims, labels=()) -> Operator:
    dims = tuple(int(d) for d in dims)
    return Operator(np.eye(math.prod(dims)), dims, labels)


# ---------------------------------------------------------------------------
# structural operations


def tensor(*factors):
    """Kronecker product of Kets or of Operators; left factor most significant.

    Factor lists concatenate; colliding labels get positional suffixes.
    """
    if not factors:
        raise ValueError("tensor of nothing")
    kinds = {isinstance(f, Ket) for f in factors}
    if len(kinds) != 1:
        raise TypeError("cannot mix Kets and Operators in one tensor product")
    dims = tuple(d for f in factors for d in f.dims)
    labels = [lab for f in factors for lab in f.labels]
    if len(set(labels)) != len(labels):
        labels = [f"{lab}.{i}" for i, lab in enumerate(labels)]
    if isinstance(factors[0], Ket):
        vec = factors[0].vec
        for f in factors[1:]:
            vec = np.kron(vec, f.vec)
        return Ket(vec, dims, tuple(labels))
    mat = factors[0].mat
    for f in factors[1:]:
        mat = np.kron(mat, f.mat)
    cls = Operator
    if all(isinstance(f, DensityMatrix) for f in factors):
        cls = DensityMatrix
    elif all(isinstance(f, TestOperator) for f in factors):
        cls = TestOperator
    return cls(mat, dims, tuple(labels))


def _resolve_indices(spec, labels) -> tuple[int, ...]:
    out = []
    for s in spec:
        if isinstance(s, str):
            if s not in labels:
                raise ValueError(f"unknown factor label {s!r}; have {labels}")
            out.append(labels.index(s))
        else:
            out.append(int(s))
    return tuple(out)


def permute_systems(x, order):
    """Reorder tensor factors; ``order[j]`` is the old position of new factor j.

    Entries of ``order`` may be factor indices or labels.  On operators this is
    conjugation by the corresponding permutation matrix.
    """
    order = _resolve_indices(order, list(x.labels))
    n = len(x.dims)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of {n} factors")
    dims = tuple(x.dims[i] for i in order)
    labels = tuple(x.labels[i] for i in order)
    if isinstance(x, Ket):
        vec = x.vec.reshape(x.dims).transpose(order).reshape(-1)
        return Ket(vec, dims, labels)
    axes = list(order) + [n + i for i in order]
    mat = x.mat.reshape(x.dims + x.dims).transpose(axes).reshape(x.dim, x.dim)
    return type(x)(mat, dims, labels)


def partial_trace(a: Operator, keep) -> Operator:
    """Trace out all factors not in ``keep`` (labels or indices)."""
    keep_idx = _resolve_indices(keep, list(a.labels))
    if not keep_idx:
        raise ValueError("keep set must be nonempty")
    if len(set(keep_idx)) != len(keep_idx):
        raise ValueError("duplicate factors in keep set")
    n = len(a.dims)
    tens = a.mat.reshape(a.dims + a.dims)
    traced = [i for i in range(n) if i not in keep_idx]
    for count, i in enumerate(sorted(traced, reverse=True)):
        live = n - count
        tens = np.trace(tens, axis1=i, axis2=live + i)
    kept_sorted = sorted(keep_idx)
    dims = tuple(a.dims[i] for i in kept_sorted)
    labels = tuple(a.labels[i] for i in kept_sorted)
    op = Operator(tens.reshape(math.prod(dims), math.prod(dims)), dims, labels)
    if list(keep_idx) != kept_sorted:
        op = permute_systems(op, [kept_sorted.index(i) for i in keep_idx])
    return op


def mixed_tensor_sum(a: np.ndarray, b: np.ndarray, n: int, k: int) -> np.ndarray:
    """Sum over all placements of k copies of ``b`` and n-k copies of ``a``."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    dim = a.shape[0]
    total = np.zeros((dim**n, dim**n), dtype=complex)
    for positions in combinations(range(n), k):
        term = np.ones((1, 1), dtype=complex)
        for i in range(n):
            term = np.kron(term, b if i in positions else a)
        total += term
    return total


# ---------------------------------------------------------------------------
# qudit Pauli operators and the Bell basis


def generalized_pauli(d: int) -> tuple[Operator, Operator]:
    """Shift and clock unitaries: X|j> = |j+1 mod d>, Z|j> = e^{2 pi i j / d}|j>."""
    x = np.zeros((d, d), dtype=complex)
    x[(np.arange(1, d + 1) % d), np.arange(d)] = 1.0
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return Operator(x, (d,), ("A",)), Operator(z, (d,), ("A",))


def bell_basis(d: int, labels=("A", "B")) -> list[Ket]:
    """The d^2 orthonormal vectors ((X^n Z^m) tensor I) |phi0>, row-major in (n, m)."""
    phi0 = max_entangled_ket(d, labels)
    x, z = generalized_pauli(d)
    eye = np.eye(d)
    out = []
    for n in range(d):
        xn = np.linalg.matrix_power(np.asarray(x.mat), n)
        for m in range(d):
            zm = np.linalg.matrix_power(np.asarray(z.mat), m)
            vec = np.kron(xn @ zm, eye) @ phi0.vec
            out.append(Ket(vec, (d, d), labels))
    return out


# ---------------------------------------------------------------------------
# random instances (Ginibre-based; bit-reproducible for a fixed Generator state)


def _ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def random_ket(dims, rng: np.random.Generator, labels=()) -> Ket:
    dims = tuple(int(d) for d in dims)
    dim = math.prod(dims)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return Ket(v / np.linalg.norm(v), dims, labels)


def random_density(dims, rng: np.random.Generator, labels=()) -> DensityMatrix:
    """G G^dag / Tr for a complex Ginibre G."""
    dims = tuple(int(d) for d in dims)
    g = _ginibre(math.prod(dims), rng)
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, dims, labels)


def random_test(dims, rng: np.random.Generator, labels=()) -> TestOperator:
    """Random Hermitian with spectrum clipped into [0, 1]."""
    dims = tuple(int(d) for d in dims)
    g = _ginibre(math.prod(dims), rng)
    h = (g + g.conj().T) / 2.0
    evals, vecs = np.linalg.eigh(h)
    lo, hi = evals.min(), evals.max()
    clipped = (evals - lo) / (hi - lo) if hi > lo else np.clip(evals, 0.0, 1.0)
    return TestOperator((vecs * clipped) @ vecs.conj().T, dims, labels)


def random_rank_one_povm(d: int, rng: np.random.Generator, parts: int = 2) -> RankOnePOVM:
    """Mixture of ``parts`` random orthonormal bases: a d*parts element rank-one POVM."""
    mix = rng.dirichlet(np.ones(parts))
    weights, vectors = [], []
    for lam in mix:
        q, r = np.linalg.qr(_ginibre(d, rng))
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        for i in range(d):
            weights.append(lam)
            vectors.append(q[:, i])
    return RankOnePOVM(np.array(weights), np.array(vectors))
