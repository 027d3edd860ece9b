"""Group actions on bipartite pair spaces, Haar sampling, and twirling.

Four unitary actions on a d x d pair (and their n-fold tensor powers) are
supported:

* ``phase``             -- multiplies the maximally entangled vector by
                           ``e^{i theta}`` and fixes its orthocomplement,
* ``local``             -- ``g (x) conj(g)`` for g in SU(d), simultaneously on
                           every copy,
* ``local_phase``       -- the product of the two actions above,
* ``ortho``             -- a unitary of the (d^2 - 1)-dimensional
                           orthocomplement of the maximally entangled vector,
                           extended by the identity on it,
* ``local_independent`` -- an independent ``g_i (x) conj(g_i)`` on every copy
                           (used for multi-source tests).

``mc_twirl`` is the Monte-Carlo group average used as the verification oracle
for every covariant closed form; ``phase_twirl`` is the exact average over the
phase action, which just zeroes matrix blocks between charge sectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .states import Operator, max_entangled_ket, mixed_tensor_sum, proj

_CHUNK = 4096  # fixed batch size so results depend only on (seed, samples)

KINDS = ("phase", "local", "local_phase", "ortho", "local_independent")


def haar_unitary(dim: int, rng: np.random.Generator, special: bool = False) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The diagonal of R is phase-normalized, which makes the distribution exactly
    Haar.  With ``special=True`` the determinant is normalized to 1 (an SU(dim)
    sample).
    """
    return haar_unitaries(dim, 1, rng, special=special)[0]


def haar_unitaries(
    dim: int, count: int, rng: np.random.Generator, special: bool = False
) -> np.ndarray:
    g = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=1, axis2=2)
    q = q * (diag / np.abs(diag))[:, np.newaxis, :]
    if special:
        det = np.linalg.det(q)
        q = q / (det ** (1.0 / dim))[:, np.newaxis, np.newaxis]
    return q


def phase_unitary(theta: float, d: int) -> np.ndarray:
    """e^{i theta} on the maximally entangled vector, identity on its complement."""
    p = proj(max_entangled_ket(d))
    return np.eye(d * d) + (np.exp(1j * theta) - 1.0) * p


def pair_conjugate_unitary(g: np.ndarray) -> np.ndarray:
    """g (x) conj(g); this action fixes the maximally entangled vector."""
    g = np.asarray(g, dtype=complex)
    return np.kron(g, g.conj())


@lru_cache(maxsize=None)
def _orthocomplement_basis(d: int) -> np.ndarray:
    """Isometry (d^2, d^2-1) onto the orthocomplement of |phi0>.

    Columns come from Gram-Schmidt of the computational basis against |phi0>,
    in index order, dropping the one dependent vector; fixed here so that
    embedded unitaries are reproducible.
    """
    phi = max_entangled_ket(d).vec
    cols = [phi]
    for i in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[i] = 1.0
        for c in cols:
            e = e - (c.conj() @ e) * c
        n = np.linalg.norm(e)
        if n > 1e-9:
            cols.append(e / n)
    b = np.array(cols[1:]).T
    b.setflags(write=False)
    return b


def orthocomplement_unitary(g: np.ndarray, d: int) -> np.ndarray:
    """Embed a (d^2-1) x (d^2-1) unitary into the orthocomplement of |phi0>."""
    g = np.asarray(g, dtype=complex)
    b = _orthocomplement_basis(d)
    return b @ g @ b.conj().T + proj(max_entangled_ket(d))


def _kron_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, p, _ = a.shape
    _, q, _ = b.shape
    return np.einsum("nab,ncd->nacbd", a, b).reshape(n, p * q, p * q)


@dataclass(frozen=True)
class GroupAction:
    """One of the supported actions, applied as its ``copies``-fold tensor power."""

    kind: str
    d: int
    copies: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}; choose from {KINDS}")
        if self.d < 2 or self.copies < 1:
            raise ValueError("need d >= 2 and copies >= 1")

    @property
    def dim(self) -> int:
        return (self.d * self.d) ** self.copies

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(1, rng)[0]

    def sample_batch(self, count: int, rng: np.random.Generator) -> np.ndarray:
        d = self.d
        if self.kind == "phase":
            theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
            p = proj(max_entangled_ket(d))
            eye = np.eye(d * d)
            per_copy = eye + (np.exp(1j * theta) - 1.0)[:, None, None] * p
        elif self.kind == "local":
            g = haar_unitaries(d, count, rng, special=True)
            per_copy = _kron_batch(g, g.conj())
        elif self.kind == "local_phase":
            g = haar_unitaries(d, count, rng, special=True)
            theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
            p = proj(max_entangled_ket(d))
            eye = np.eye(d * d)
            phase = eye + (np.exp(1j * theta) - 1.0)[:, None, None] * p
            per_copy = _kron_batch(g, g.conj()) @ phase
        elif self.kind == "ortho":
            g = haar_unitaries(d * d - 1, count, rng)
            b = _orthocomplement_basis(d)
            pr = proj(max_entangled_ket(d))
            per_copy = (b @ g) @ b.conj().T + pr
        elif self.kind == "local_independent":
            out = None
            for _ in range(self.copies):
                g = haar_unitaries(d, count, rng, special=True)
                u = _kron_batch(g, g.conj())
                out = u if out is None else _kron_batch(out, u)
            return out
        else:  # pragma: no cover
            raise AssertionError(self.kind)
        out = per_copy
        for _ in range(self.copies - 1):
            out = _kron_batch(out, per_copy)
        return out


@dataclass(frozen=True)
class TwirlEstimate:
    """Monte-Carlo group average with per-entry standard errors."""

    mean: np.ndarray
    stderr: np.ndarray
    samples: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if np.min(self.stderr) < 0:
            raise ValueError("standard errors must be nonnegative")

    def deviation(self, target: np.ndarray) -> float:
        return float(np.max(np.abs(self.mean - np.asarray(target))))

    def within(self, target: np.ndarray, nsigma: float = 5.0, atol: float = 1e-9) -> bool:
        """Entrywise |mean - target| <= nsigma * stderr + atol."""
        dev = np.abs(self.mean - np.asarray(target))
        return bool(np.all(dev <= nsigma * self.stderr + atol))


def mc_twirl(
    op, action: GroupAction, samples: int, rng: np.random.Generator
) -> TwirlEstimate:
    """Average f(g) op f(g)^dag over ``samples`` group elements.

    Accumulation is in sample order with a fixed internal batch size, so the
    result is a deterministic function of (seed, samples).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    mat = op.mat if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if mat.shape[0] != action.dim:
        raise ValueError(f"operator dim {mat.shape[0]} != action dim {action.dim}")
    total = np.zeros_like(mat)
    total_sq = np.zeros(mat.shape, dtype=float)
    done = 0
    while done < samples:
        batch = min(_CHUNK, samples - done)
        f = action.sample_batch(batch, rng)
        conj = (f @ mat) @ f.conj().transpose(0, 2, 1)
        total += conj.sum(axis=0)
        total_sq += (conj.real**2 + conj.imag**2).sum(axis=0)
        done += batch
    mean = total / samples
    if samples > 1:
        var = (total_sq - samples * (mean.real**2 + mean.imag**2)) / (samples - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / samples)
    else:
        stderr = np.zeros(mat.shape, dtype=float)
    return TwirlEstimate(mean, stderr, samples)


@lru_cache(maxsize=None)
def _charge_projectors(d: int, copies: int) -> tuple[np.ndarray, ...]:
    p = proj(max_entangled_ket(d))
    q = np.eye(d * d) - p
    return tuple(mixed_tensor_sum(q, p, copies, k) for k in range(copies + 1))


def phase_twirl(op, d: int) -> np.ndarray:
    """Exact average over the n-fold phase action.

    The action has eigenvalue ``e^{i k theta}`` on the sector spanned by tensor
    products with exactly k factors along the maximally entangled vector, so
    the average keeps the diagonal sector blocks and zeroes the rest.  It is a
    projection, hence idempotent.
    """
    mat = op.mat if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    dim = mat.shape[0]
    copies = round(math.log(dim, d * d))
    if (d * d) ** copies != dim:
        raise ValueError(f"dim {dim} is not a power of {d * d}")
    out = np.zeros_like(mat)
    for q in _charge_projectors(d, copies):
        out += q @ mat @ q
    return out


def check_invariance(
    op, action: GroupAction, samples: int, rng: np.random.Generator, tol: float = 1e-10
) -> tuple[bool, float]:
    """Max over sampled g of the entrywise deviation ||f(g) T f(g)^dag - T||."""
    mat = op.mat if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    worst = 0.0
    done = 0
    while done < samples:
        batch = min(_CHUNK, samples - done)
        f = action.sample_batch(batch, rng)
        conj = (f @ mat) @ f.conj().transpose(0, 2, 1)
        worst = max(worst, float(np.max(np.abs(conj - mat))))
        done += batch
    return worst <= tol, worst
