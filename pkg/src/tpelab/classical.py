"""The k-copy averaging operator of a permutation family and its fixed space.

The operator acts on real vectors indexed by k-tuples over {0..N-1} (flattened
mixed-radix, most significant copy first) by averaging the k-fold relabelings
under each family member.  Its unit eigenvectors common to every family are the
normalized indicators of equality patterns: one per set partition of the k
copy slots into at most N blocks.  Everything here is matrix-free; dense
assembly exists only as an oracle for small dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tpelab import rng, spectral
from tpelab.perms import PermutationFamily, inverse
from tpelab.spectral import (
    DEFAULT_DENSE_CAP,
    DEFAULT_DIM_CAP,
    DEFAULT_MAX_ITERS,
    DEFAULT_RESTARTS,
    DEFAULT_TOL,
    DimensionCapError,
    SpectralReport,
)


@dataclass(frozen=True)
class Partition:
    """Set partition of {0..k-1} in restricted-growth form.

    block_id[i] is the block containing slot i, blocks numbered by first
    appearance, so block_id[0] = 0 and each entry exceeds the running maximum
    by at most one.
    """

    block_id: tuple

    def __post_init__(self):
        b = tuple(int(x) for x in self.block_id)
        object.__setattr__(self, "block_id", b)
        if not b or b[0] != 0:
            raise ValueError("block_id must start at 0")
        mx = 0
        for x in b[1:]:
            if x < 0 or x > mx + 1:
                raise ValueError("block ids must grow by at most one")
            mx = max(mx, x)

    @property
    def block_count(self) -> int:
        return max(self.block_id) + 1


def enumerate_partitions(k: int, max_blocks: int) -> list:
    """All partitions of {0..k-1} into at most max_blocks blocks, lex order."""
    if k < 1 or max_blocks < 1:
        raise ValueError("k and max_blocks must be >= 1")
    out = []

    def rec(prefix, mx):
        if len(prefix) == k:
            out.append(Partition(tuple(prefix)))
            return
        for b in range(min(mx + 1, max_blocks - 1) + 1):
            prefix.append(b)
            rec(prefix, max(mx, b))
            prefix.pop()

    rec([0], 0)
    return out


def f_count(n: int, k: int) -> int:
    """Number of set partitions of k slots into at most n blocks.

    Equals the k-th Bell number once n >= k.  Computed from the
    Stirling-number recurrence S(k, j) = j S(k-1, j) + S(k-1, j-1).
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    row = [1]  # S(0, 0)
    for _ in range(k):
        nxt = [0] * (len(row) + 1)
        for j, val in enumerate(row):
            if val:
                nxt[j] += j * val
                nxt[j + 1] += val
        row = nxt
    return sum(row[1 : min(n, k) + 1])


def tuple_digits(n: int, k: int) -> np.ndarray:
    """Digit table (k, n^k): digits[i][flat] = i-th component of the tuple."""
    dim = n**k
    out = np.empty((k, dim), dtype=np.int32)
    base = np.arange(dim, dtype=np.int64)
    for i in range(k):
        stride = n ** (k - 1 - i)
        out[i] = (base // stride) % n
    return out


def pattern_ids(n: int, k: int) -> tuple:
    """Label every k-tuple by its equality pattern.

    Returns (ids, counts): ids[flat] is the pattern index in the order of
    enumerate_partitions(k, min(k, n)), counts[p] the number of tuples
    realizing pattern p.
    """
    digits = tuple_digits(n, k)
    dim = n**k
    bid = np.zeros((k, dim), dtype=np.int8)
    next_block = np.ones(dim, dtype=np.int8)
    for i in range(1, k):
        assigned = np.full(dim, -1, dtype=np.int8)
        for j in range(i):
            mask = (assigned < 0) & (digits[j] == digits[i])
            if mask.any():
                assigned[mask] = bid[j][mask]
        fresh = assigned < 0
        bid[i][fresh] = next_block[fresh]
        next_block[fresh] += 1
        bid[i][~fresh] = assigned[~fresh]
    # big-endian base-k code: numeric order equals lex order on block strings,
    # matching enumerate_partitions
    code = np.zeros(dim, dtype=np.int64)
    for i in range(k):
        code = code * k + bid[i]
    _, ids, counts = np.unique(code, return_inverse=True, return_counts=True)
    return ids.astype(np.int32), counts


def trivial_basis(n: int, k: int, dim_cap: int = DEFAULT_DIM_CAP) -> list:
    """Orthonormal unit eigenvectors shared by every family: one per pattern."""
    _check_dim(n, k, dim_cap)
    ids, counts = pattern_ids(n, k)
    vecs = []
    for p, c in enumerate(counts):
        v = np.zeros(n**k)
        v[ids == p] = 1.0 / np.sqrt(c)
        vecs.append(v)
    return vecs


def _check_dim(n: int, k: int, dim_cap: int) -> int:
    dim = n**k
    if dim > dim_cap:
        raise DimensionCapError(f"N^k = {dim} exceeds the dimension cap {dim_cap}")
    return dim


class ClassicalTpeOperator:
    """Matrix-free k-copy averaging operator of a permutation family."""

    def __init__(self, family: PermutationFamily, k: int, dim_cap: int = DEFAULT_DIM_CAP):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.family = family
        self.k = int(k)
        self.dim = _check_dim(family.N, k, dim_cap)
        self._fwd = None
        self._adj = None
        self._ids = None
        self._counts = None

    @property
    def N(self) -> int:
        return self.family.N

    @property
    def D(self) -> int:
        return self.family.D

    @property
    def hermitian(self) -> bool:
        return self.family.hermitian

    def _gather_maps(self, adjoint: bool) -> np.ndarray:
        # out[m] = v[map[m]]; the map for P^(tensor k) relabels each digit by
        # the inverse permutation, the transpose by the forward one
        if not adjoint and self._fwd is not None:
            return self._fwd
        if adjoint and self._adj is not None:
            return self._adj
        digits = tuple_digits(self.N, self.k)
        maps = np.empty((self.D, self.dim), dtype=np.int32)
        for s, member in enumerate(self.family.members):
            rel = member.images if adjoint else inverse(member).images
            rel32 = rel.astype(np.int32)
            acc = np.zeros(self.dim, dtype=np.int32)
            for i in range(self.k):
                stride = self.N ** (self.k - 1 - i)
                acc += rel32[digits[i]] * np.int32(stride)
            maps[s] = acc
        if adjoint:
            self._adj = maps
        else:
            self._fwd = maps
        return maps

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Average of the k-fold tensor-power actions, cost O(D N^k)."""
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {v.shape}")
        maps = self._gather_maps(adjoint=False)
        out = v[maps[0]].astype(float if not np.iscomplexobj(v) else complex, copy=True)
        for s in range(1, self.D):
            out += v[maps[s]]
        out /= self.D
        return out

    def apply_adjoint(self, v: np.ndarray) -> np.ndarray:
        if self.hermitian:
            # the member multiset is closed under inversion, so the adjoint
            # is the same operator; reuse the same maps for bit-stable output
            return self.apply(v)
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {v.shape}")
        maps = self._gather_maps(adjoint=True)
        out = v[maps[0]].astype(float if not np.iscomplexobj(v) else complex, copy=True)
        for s in range(1, self.D):
            out += v[maps[s]]
        out /= self.D
        return out

    def _patterns(self):
        if self._ids is None:
            self._ids, self._counts = pattern_ids(self.N, self.k)
        return self._ids, self._counts

    def deflate(self, v: np.ndarray) -> np.ndarray:
        """Exact projection onto the complement of the pattern-indicator span.

        Subtracting the per-pattern mean is the orthogonal projection, since
        the fixed space is exactly the functions constant on each pattern
        class; cost O(N^k).
        """
        ids, counts = self._patterns()
        means = np.bincount(ids, weights=np.asarray(v, dtype=float), minlength=len(counts)) / counts
        return v - means[ids]

    def trivial_dim(self) -> int:
        return f_count(self.N, self.k)

    def trivial_basis_matrix(self) -> np.ndarray:
        ids, counts = self._patterns()
        w = np.zeros((self.dim, len(counts)))
        w[np.arange(self.dim), ids] = 1.0 / np.sqrt(counts[ids])
        return w

    def to_dense(self) -> np.ndarray:
        mat = np.zeros((self.dim, self.dim))
        maps = self._gather_maps(adjoint=False)
        rows = np.arange(self.dim)
        for s in range(self.D):
            mat[rows, maps[s]] += 1.0 / self.D
        return mat


def lambda_estimate(
    op: ClassicalTpeOperator,
    mode: str = "eigen",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    stream: np.random.Generator | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> SpectralReport:
    """Leading nontrivial magnitude of the k-copy operator.

    mode="eigen" (largest |eigenvalue|, hermitian families only) or
    mode="singular" (largest singular value).  Dense factorization below
    dense_cap, restarted deflated power iteration above it.
    """
    if mode == "eigen" and not op.hermitian:
        raise ValueError("eigen mode requires a hermitian family")
    fam = op.family
    fdim = op.trivial_dim()
    if op.dim <= dense_cap:
        mat = op.to_dense()
        w = op.trivial_basis_matrix()
        lam, vals = spectral.dense_lambda(mat, w, mode, op.hermitian)
        unit = fdim
        if mode == "eigen":
            unit += int(np.sum(np.abs(vals - 1.0) <= 1e-6))
        return SpectralReport(
            fam.construction_tag, op.N, op.D, op.k, fam.seed, mode,
            lam, spectral.lambda_h(op.D), unit, 0, True, 0.0,
        )
    if stream is None:
        stream = rng.stream(0)
    res = spectral.power_solve(
        op.apply, op.apply_adjoint, op.deflate, op.dim, mode,
        complex_dtype=False, tol=tol, max_iters=max_iters, restarts=restarts, stream=stream,
    )
    return SpectralReport(
        fam.construction_tag, op.N, op.D, op.k, fam.seed, mode,
        res.est, spectral.lambda_h(op.D), fdim, res.iters, res.converged, res.residual,
    )


def unit_multiplicity(
    op: ClassicalTpeOperator,
    tol: float = 1e-6,
    dense_cap: int = DEFAULT_DENSE_CAP,
    stream: np.random.Generator | None = None,
) -> tuple:
    """Count eigenvalues within tol of 1; returns (count, certified).

    Below dense_cap the count is a dense eigenvalue count of the full
    operator (certified).  Above it the count is structural: the pattern
    vectors are checked as exact fixed points and the deflated radius is
    estimated; certified=False when that radius reaches 1 - tol.
    """
    if op.dim <= dense_cap:
        mat = op.to_dense()
        if op.hermitian:
            vals = np.linalg.eigvalsh((mat + mat.T) / 2.0)
            count = int(np.sum(np.abs(vals - 1.0) <= tol))
        else:
            vals = np.linalg.eigvals(mat)
            count = int(np.sum(np.abs(vals - 1.0) <= tol))
        return count, True
    base = op.trivial_dim()
    for v in trivial_basis(op.N, op.k):
        if np.linalg.norm(op.apply(v) - v) > 1e-12:
            raise AssertionError("pattern vector is not fixed: operator is inconsistent")
    mode = "eigen" if op.hermitian else "singular"
    rep = lambda_estimate(op, mode=mode, tol=min(tol, 1e-8), stream=stream, dense_cap=0)
    certified = bool(rep.converged and rep.lam < 1.0 - tol)
    return base, certified
