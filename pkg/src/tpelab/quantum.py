"""Haar-random unitary families, the k-copy averaging superoperator, and its
exact fixed space.

The operator acts on complex vectors indexed by 2k tensor modes of size N:
modes 0..k-1 are hit by U(s), modes k..2k-1 by conj(U(s)), averaged over the
family.  Its fixed space for every family is spanned by the vectorized
copy-slot permutation operators; the span's dimension is the rank of their
Gram matrix, which is k! once N >= k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from tpelab import rng, serialize, spectral
from tpelab.perms import Permutation, compose, cycle_count, inverse
from tpelab.spectral import (
    DEFAULT_DENSE_CAP,
    DEFAULT_DIM_CAP,
    DEFAULT_MAX_ITERS,
    DEFAULT_RESTARTS,
    DEFAULT_TOL,
    DimensionCapError,
    SpectralReport,
)

UNITARITY_TOL = 1e-10


def haar_unitary(n: int, stream: np.random.Generator) -> np.ndarray:
    """Haar-distributed N x N unitary.

    Complex-Gaussian matrix, QR factorization, then each column rescaled by
    the phase of the corresponding diagonal entry of R.  The phase correction
    is what makes the distribution exactly Haar; plain QR is not.
    """
    if n < 1:
        raise ValueError("invalid size: n must be >= 1")
    z = (stream.standard_normal((n, n)) + 1j * stream.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_unitaries(n: int, count: int, stream: np.random.Generator) -> np.ndarray:
    """Batch of Haar unitaries, shape (count, n, n); same recipe, batched QR."""
    z = (stream.standard_normal((count, n, n)) + 1j * stream.standard_normal((count, n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def _check_unitary(u: np.ndarray) -> None:
    n = u.shape[0]
    if u.shape != (n, n):
        raise ValueError("unitary must be square")
    resid = np.max(np.abs(u.conj().T @ u - np.eye(n)))
    if resid > UNITARITY_TOL:
        raise ValueError(f"matrix is not unitary (residual {resid:.2e})")


@dataclass(frozen=True, eq=False)
class UnitaryFamily:
    """Ordered list of D same-size unitaries with its adjoint-closure flag."""

    members: tuple
    hermitian: bool
    seed: int

    def __post_init__(self):
        members = tuple(np.asarray(m, dtype=complex) for m in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("family must have at least one member")
        n = members[0].shape[0]
        for m in members:
            if m.shape != (n, n):
                raise ValueError("all members must share the same size")
            _check_unitary(m)
        if self.hermitian:
            d = len(members)
            if d % 2 != 0:
                raise ValueError("hermitian family needs even D")
            for s in range(d // 2):
                if np.max(np.abs(members[s + d // 2] - members[s].conj().T)) > UNITARITY_TOL:
                    raise ValueError(f"adjoint pairing broken at member {s}")

    @property
    def N(self) -> int:
        return int(self.members[0].shape[0])

    @property
    def D(self) -> int:
        return len(self.members)

    def adjoint_members(self) -> tuple:
        return tuple(m.conj().T for m in self.members)

    def to_dict(self) -> dict:
        return {
            "type": "quantum",
            "N": self.N,
            "D": self.D,
            "hermitian": self.hermitian,
            "seed": int(self.seed),
            "unitaries": [serialize.complex_matrix_to_pairs(m) for m in self.members],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UnitaryFamily":
        if d.get("type") != "quantum":
            raise ValueError(f"not a quantum family file (type={d.get('type')!r})")
        n = int(d["N"])
        members = tuple(serialize.pairs_to_complex_matrix(p, n) for p in d["unitaries"])
        fam = cls(members, bool(d["hermitian"]), int(d["seed"]))
        if fam.D != int(d["D"]):
            raise ValueError("family file D field disagrees with matrix data")
        return fam


def save_unitary_family(fam: UnitaryFamily, path) -> None:
    serialize.dump_path(fam.to_dict(), path)


def load_unitary_family(path) -> UnitaryFamily:
    return UnitaryFamily.from_dict(serialize.load_path(path))


def hermitian_unitary_family(n: int, d: int, stream: np.random.Generator) -> UnitaryFamily:
    """D/2 i.i.d. Haar unitaries followed by their adjoints."""
    if d % 2 != 0:
        raise ValueError("invalid degree: D must be even")
    first = [haar_unitary(n, stream) for _ in range(d // 2)]
    members = first + [u.conj().T for u in first]
    entropy = getattr(getattr(stream.bit_generator, "seed_seq", None), "entropy", None)
    seed = entropy if isinstance(entropy, int) and entropy < 2**63 else 0
    return UnitaryFamily(tuple(members), True, seed)


class QuantumTpeOperator:
    """Matrix-free k-copy averaging superoperator of a unitary family."""

    def __init__(self, family: UnitaryFamily, k: int, dim_cap: int = DEFAULT_DIM_CAP):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.family = family
        self.k = int(k)
        dim = family.N ** (2 * k)
        if dim > dim_cap:
            raise DimensionCapError(f"N^2k = {dim} exceeds the dimension cap {dim_cap}")
        self.dim = dim
        self._basis = None

    @property
    def N(self) -> int:
        return self.family.N

    @property
    def D(self) -> int:
        return self.family.D

    @property
    def hermitian(self) -> bool:
        return self.family.hermitian

    def _apply_members(self, v: np.ndarray, members) -> np.ndarray:
        n, k = self.N, self.k
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {v.shape}")
        t0 = v.reshape((n,) * (2 * k))
        out = np.zeros_like(t0)
        for u in members:
            t = t0
            uc = u.conj()
            # fixed mode order 0..2k-1 for bit-stable accumulation
            for mode in range(2 * k):
                mat = u if mode < k else uc
                t = np.moveaxis(np.tensordot(mat, t, axes=([1], [mode])), 0, mode)
            out += t
        return (out / len(members)).reshape(self.dim)

    def apply_hat(self, v: np.ndarray) -> np.ndarray:
        """Average of U(s) on the first k modes and conj(U(s)) on the last k."""
        return self._apply_members(v, self.family.members)

    def apply_hat_adjoint(self, v: np.ndarray) -> np.ndarray:
        return self._apply_members(v, self.family.adjoint_members())

    def twirl_basis_matrix(self) -> np.ndarray:
        if self._basis is None:
            self._basis = twirl_basis(self.N, self.k, as_matrix=True)
        return self._basis

    def deflate(self, v: np.ndarray) -> np.ndarray:
        w = self.twirl_basis_matrix()
        return v - w @ (w.conj().T @ v)

    def trivial_dim(self) -> int:
        return self.twirl_basis_matrix().shape[1]

    def to_dense(self) -> np.ndarray:
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for u in self.family.members:
            upow = u
            for _ in range(self.k - 1):
                upow = np.kron(upow, u)
            mat += np.kron(upow, upow.conj())
        return mat / self.D


def _slot_permutations(k: int) -> list:
    return [Permutation(np.array(p)) for p in itertools.permutations(range(k))]


def perm_operator_gram(n: int, k: int) -> tuple:
    """Gram matrix of the copy-slot permutation operators and its rank.

    Entry (pi, sigma) is N**cycles(pi^-1 sigma), the trace inner product of
    the two operators on (C^N)^(tensor k).  Rank is decided by eigenvalue
    thresholding at 1e-8 * ||G||; it equals k! once N >= k.
    """
    if k > 6:
        raise ValueError("k is capped at 6 (k! grows too fast)")
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    ps = _slot_permutations(k)
    m = len(ps)
    g = np.empty((m, m))
    for i, pi in enumerate(ps):
        pi_inv = inverse(pi)
        for j, sg in enumerate(ps):
            g[i, j] = float(n) ** cycle_count(compose(pi_inv, sg))
    vals = np.linalg.eigvalsh(g)
    rank = int(np.sum(vals > 1e-8 * vals.max()))
    return g, rank


def _vec_slot_permutation(n: int, k: int, p: Permutation) -> np.ndarray:
    """Row-major vectorization of the operator permuting copy slots by p.

    The operator sends slot j's value to slot p(j); as a matrix over
    multi-indices, row m pairs with column t when m[p(j)] = t[j] for all j.
    """
    dimk = n**k
    digits = np.empty((k, dimk), dtype=np.int64)
    base = np.arange(dimk, dtype=np.int64)
    for i in range(k):
        digits[i] = (base // (n ** (k - 1 - i))) % n
    pinv = inverse(p).images
    rows = np.zeros(dimk, dtype=np.int64)
    for i in range(k):
        rows = rows * n + digits[pinv[i]]
    out = np.zeros(dimk * dimk, dtype=complex)
    out[rows * dimk + base] = 1.0
    return out


def twirl_basis(n: int, k: int, dim_cap: int = DEFAULT_DIM_CAP, as_matrix: bool = False):
    """Orthonormal basis of span{vec(slot permutation operators)}.

    Orthonormalization goes through the k! x k! Gram matrix (symmetric
    orthogonalization with rank truncation at 1e-8 relative), so the rank
    decision is explicit even when the raw vectors are nearly dependent at
    small N.  Every returned vector is a fixed point of apply_hat for any
    family.
    """
    dim = n ** (2 * k)
    if dim > dim_cap:
        raise DimensionCapError(f"N^2k = {dim} exceeds the dimension cap {dim_cap}")
    ps = _slot_permutations(k)
    raw = np.stack([_vec_slot_permutation(n, k, p) for p in ps], axis=1)
    g, _ = perm_operator_gram(n, k)
    vals, vecs = np.linalg.eigh(g)
    keep = vals > 1e-8 * vals.max()
    w = raw @ (vecs[:, keep] / np.sqrt(vals[keep]))
    if as_matrix:
        return w
    return [w[:, i].copy() for i in range(w.shape[1])]


def lambda_estimate_quantum(
    op: QuantumTpeOperator,
    mode: str = "eigen",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    stream: np.random.Generator | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> SpectralReport:
    """Leading nontrivial magnitude of the k-copy superoperator."""
    if mode == "eigen" and not op.hermitian:
        raise ValueError("eigen mode requires a hermitian family")
    fdim = op.trivial_dim()
    if op.dim <= dense_cap:
        mat = op.to_dense()
        w = op.twirl_basis_matrix()
        lam, vals = spectral.dense_lambda(mat, w, mode, op.hermitian)
        unit = fdim
        if mode == "eigen":
            unit += int(np.sum(np.abs(vals - 1.0) <= 1e-6))
        return SpectralReport(
            "quantum", op.N, op.D, op.k, op.family.seed, mode,
            lam, spectral.lambda_h(op.D), unit, 0, True, 0.0,
        )
    if stream is None:
        stream = rng.stream(0)
    res = spectral.power_solve(
        op.apply_hat, op.apply_hat_adjoint, op.deflate, op.dim, mode,
        complex_dtype=True, tol=tol, max_iters=max_iters, restarts=restarts, stream=stream,
    )
    return SpectralReport(
        "quantum", op.N, op.D, op.k, op.family.seed, mode,
        res.est, spectral.lambda_h(op.D), fdim, res.iters, res.converged, res.residual,
    )


def unit_multiplicity_quantum(op: QuantumTpeOperator, tol: float = 1e-6, dense_cap: int = DEFAULT_DENSE_CAP) -> tuple:
    """Dense count of superoperator eigenvalues within tol of 1."""
    if op.dim > dense_cap:
        raise DimensionCapError("dense count needs N^2k within the dense cap")
    mat = op.to_dense()
    if op.hermitian:
        vals = np.linalg.eigvalsh((mat + mat.conj().T) / 2.0)
    else:
        vals = np.linalg.eigvals(mat)
    return int(np.sum(np.abs(vals - 1.0) <= tol)), True


def trace_moment_mc(n: int, k: int, samples: int, stream: np.random.Generator) -> tuple:
    """Monte-Carlo estimate of E[|tr X|^(2k)] over Haar X.

    Returns (mean, standard_error).  The exact value is k! once N >= k.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    chunk = 4096
    total = 0.0
    total_sq = 0.0
    left = samples
    while left > 0:
        b = min(chunk, left)
        us = haar_unitaries(n, b, stream)
        traces = np.abs(np.trace(us, axis1=1, axis2=2)) ** (2 * k)
        total += float(traces.sum())
        total_sq += float((traces**2).sum())
        left -= b
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    se = math.sqrt(var / samples)
    return mean, se


def _entangled_projector(u: np.ndarray) -> np.ndarray:
    """(U x I) Phi (U^dag x I) for the maximally entangled projector Phi."""
    n = u.shape[0]
    psi = (np.kron(u, np.eye(n)) @ np.eye(n).reshape(-1)) / math.sqrt(n)
    return np.outer(psi, psi.conj())


def sk_overlap_check(u: np.ndarray, v: np.ndarray, k: int) -> tuple:
    """Overlap identity between k-fold entangled states built from U and V.

    lhs: tr(rho(U) rho(V)) with rho(W) the k-th tensor power of the projector
    onto (W x I)|entangled>, built explicitly.  rhs: (1 - d/(2N))^(2k) with
    the phase-insensitive distance d(U, V) = 2N - 2|tr U^dag V|.  Returns
    (lhs, rhs, |lhs - rhs|).
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = u.shape[0]
    if u.shape != v.shape or u.shape != (n, n):
        raise ValueError("U and V must be square and same size")
    if (n * n) ** k > 4096:
        raise DimensionCapError("explicit route needs (N^2)^k <= 4096")
    ru1 = _entangled_projector(u)
    rv1 = _entangled_projector(v)
    ru = ru1
    rv = rv1
    for _ in range(k - 1):
        ru = np.kron(ru, ru1)
        rv = np.kron(rv, rv1)
    lhs = float(np.sum(ru * rv.T).real)
    d = 2.0 * n - 2.0 * abs(complex(np.trace(u.conj().T @ v)))
    rhs = (1.0 - d / (2.0 * n)) ** (2 * k)
    return lhs, rhs, abs(lhs - rhs)
