"""Quantum channels built from permutation families, and generic Kraus machinery.

Two constructions turn a classical expander into a quantum one.  The sign
channel dresses each permutation matrix with a random diagonal of signs,
paired so the Kraus list is closed under adjoints.  The phase channel mixes
the bare permutations with a root-of-unity diagonal; its gap is controlled by
the 2-copy gap of the underlying family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tpelab import rng, serialize, spectral
from tpelab.classical import ClassicalTpeOperator, lambda_estimate
from tpelab.perms import PermutationFamily
from tpelab.spectral import (
    DEFAULT_DENSE_CAP,
    DEFAULT_MAX_ITERS,
    DEFAULT_RESTARTS,
    DEFAULT_TOL,
    SpectralReport,
)

CHANNEL_TAGS = ("unitary-mixture", "sign", "z-phase", "z-phase-hermitian", "explicit")
TP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SignDiagonal:
    """Independent +-1 diagonals for the first half of a paired Kraus list.

    Only s < D/2 is stored; the partner diagonal is always derived as
    P(s) sigma(s) P(s)^T, which is what makes A(s + D/2) = A(s)^dag.
    """

    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int64)
        object.__setattr__(self, "signs", s)
        if s.ndim != 2 or not np.all(np.abs(s) == 1):
            raise ValueError("signs must be a 2-d array of +-1")


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving map M -> sum A(s)^dag M A(s), stored by its Kraus list."""

    kraus: tuple
    tag: str = "explicit"
    hermitian: bool = False
    signs: SignDiagonal | None = field(default=None, compare=False)

    def __post_init__(self):
        ks = tuple(np.asarray(a, dtype=complex) for a in self.kraus)
        object.__setattr__(self, "kraus", ks)
        if not ks:
            raise ValueError("channel needs at least one Kraus operator")
        if self.tag not in CHANNEL_TAGS:
            raise ValueError(f"unknown channel tag {self.tag!r}")
        n = ks[0].shape[0]
        for a in ks:
            if a.shape != (n, n):
                raise ValueError("Kraus operators must be square and same size")
        # for M -> sum A^dag M A, trace preservation is sum A A^dag = I
        acc = np.zeros((n, n), dtype=complex)
        for a in ks:
            acc += a @ a.conj().T
        if np.max(np.abs(acc - np.eye(n))) > TP_TOL:
            raise ValueError("Kraus list is not trace preserving")

    @property
    def N(self) -> int:
        return int(self.kraus[0].shape[0])

    @property
    def D(self) -> int:
        return len(self.kraus)

    def adjoint_kraus(self) -> tuple:
        return tuple(a.conj().T for a in self.kraus)

    def is_unital(self, tol: float = TP_TOL) -> bool:
        # unital means the map fixes the identity: sum A^dag A = I
        n = self.N
        acc = np.zeros((n, n), dtype=complex)
        for a in self.kraus:
            acc += a.conj().T @ a
        return bool(np.max(np.abs(acc - np.eye(n))) <= tol)

    def to_dict(self) -> dict:
        return {
            "type": "channel",
            "tag": self.tag,
            "N": self.N,
            "hermitian": self.hermitian,
            "kraus": [serialize.complex_matrix_to_pairs(a) for a in self.kraus],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KrausChannel":
        if d.get("type") != "channel":
            raise ValueError(f"not a channel file (type={d.get('type')!r})")
        n = int(d["N"])
        ks = tuple(serialize.pairs_to_complex_matrix(p, n) for p in d["kraus"])
        return cls(ks, d["tag"], bool(d.get("hermitian", False)))


def save_channel(ch: KrausChannel, path) -> None:
    serialize.dump_path(ch.to_dict(), path)


def load_channel(path) -> KrausChannel:
    return KrausChannel.from_dict(serialize.load_path(path))


def _perm_matrix(images: np.ndarray) -> np.ndarray:
    n = images.size
    p = np.zeros((n, n))
    p[images, np.arange(n)] = 1.0
    return p


def unitary_mixture(members, hermitian: bool) -> KrausChannel:
    """Channel averaging conjugation by the given unitaries."""
    d = len(members)
    ks = tuple(np.asarray(u, dtype=complex) / math.sqrt(d) for u in members)
    return KrausChannel(ks, "unitary-mixture", hermitian)


def sign_expander(family: PermutationFamily, stream: np.random.Generator) -> KrausChannel:
    """Permutations dressed with independent +-1 diagonals, adjoint-paired.

    A(s) = P(s) sigma(s) / sqrt(D) for s < D/2 and A(s + D/2) = A(s)^dag;
    the latter equals P(s)^-1 times the conjugated diagonal, so the whole
    list is still made of signed permutation matrices.
    """
    if not family.hermitian:
        raise ValueError("sign construction needs a hermitian family")
    d, n = family.D, family.N
    if d % 2 != 0:
        raise ValueError("sign construction needs the paired layout (even D)")
    # one row of fair signs per s < D/2, drawn in a single documented pass
    signs = SignDiagonal(2 * stream.integers(0, 2, size=(d // 2, n)) - 1)
    root = math.sqrt(d)
    ks = []
    for s in range(d // 2):
        ks.append(_perm_matrix(family.members[s].images) * signs.signs[s] / root)
    for s in range(d // 2):
        ks.append(ks[s].conj().T)
    return KrausChannel(tuple(ks), "sign", True, signs)


def z_phase_expander(
    family: PermutationFamily, epsilon: float, hermitian_variant: bool = False
) -> KrausChannel:
    """Mix the bare permutations with the root-of-unity diagonal Z.

    With p = 1/(1 + epsilon), the Kraus list is {sqrt(p/D) P(s)} plus
    sqrt(1-p) Z (or the two-sided variant splitting the weight over Z and
    Z^dag).  epsilon is the measured 2-copy gap of the family, supplied by
    the caller; see measure_2tpe_epsilon.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    n, d = family.N, family.D
    if n < 2:
        raise ValueError("invalid size: N must be >= 2")
    p = 1.0 / (1.0 + epsilon)
    z = np.diag(np.exp(2j * math.pi * np.arange(n) / n))
    ks = [math.sqrt(p / d) * _perm_matrix(m.images).astype(complex) for m in family.members]
    if hermitian_variant:
        ks.append(math.sqrt((1.0 - p) / 2.0) * z)
        ks.append(math.sqrt((1.0 - p) / 2.0) * z.conj().T)
        return KrausChannel(tuple(ks), "z-phase-hermitian", family.hermitian)
    ks.append(math.sqrt(1.0 - p) * z)
    return KrausChannel(tuple(ks), "z-phase", False)


def channel_apply(ch: KrausChannel, rho: np.ndarray) -> np.ndarray:
    """Apply the channel to a matrix; hermitian inputs stay exactly hermitian."""
    rho = np.asarray(rho, dtype=complex)
    n = ch.N
    if rho.shape != (n, n):
        raise ValueError(f"expected {n}x{n} matrix, got shape {rho.shape}")
    out = np.zeros((n, n), dtype=complex)
    for a in ch.kraus:
        out += a.conj().T @ rho @ a
    if np.array_equal(rho, rho.conj().T):
        out = (out + out.conj().T) / 2.0
    return out


def superop_apply(ch: KrausChannel, v: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """The channel as a linear map on row-major vectorized matrices."""
    n = ch.N
    m = np.asarray(v).reshape(n, n)
    out = np.zeros((n, n), dtype=complex)
    ks = ch.adjoint_kraus() if adjoint else ch.kraus
    for a in ks:
        out += a.conj().T @ m @ a
    return out.reshape(n * n)


def superop_dense(ch: KrausChannel) -> np.ndarray:
    """Dense matrix of the vectorized channel: sum A^dag (kron) A^T."""
    n = ch.N
    mat = np.zeros((n * n, n * n), dtype=complex)
    for a in ch.kraus:
        mat += np.kron(a.conj().T, a.T)
    return mat


def diagonal_sector_matrix(ch: KrausChannel) -> np.ndarray:
    """Dense matrix of the channel's action restricted to diagonal matrices.

    For signed-permutation Kraus lists this sector is preserved exactly and
    the matrix is the transpose of the family's 1-copy averaging operator.
    """
    acc = np.zeros((ch.N, ch.N))
    for a in ch.kraus:
        acc += np.abs(a) ** 2
    return acc.T


def channel_gap(
    ch: KrausChannel,
    mode: str = "singular",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    stream: np.random.Generator | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
    seed: int = 0,
) -> SpectralReport:
    """Leading magnitude of the channel after deflating its fixed point.

    Unital channels only: the fixed vector vec(I)/sqrt(N) is then known
    exactly.  The reported gap is 1 - lambda of this report.
    """
    if mode == "eigen" and not ch.hermitian:
        raise ValueError("eigen mode requires a hermitian channel")
    if not ch.is_unital():
        raise ValueError("channel is not unital; gap deflation is out of scope")
    n = ch.N
    dim = n * n
    fixed = (np.eye(n).reshape(-1) / math.sqrt(n)).astype(complex)

    if dim <= dense_cap:
        mat = superop_dense(ch)
        lam, vals = spectral.dense_lambda(mat, fixed[:, None], mode, ch.hermitian)
        unit = 1
        if mode == "eigen":
            unit += int(np.sum(np.abs(vals - 1.0) <= 1e-6))
        return SpectralReport(
            ch.tag, n, ch.D, 1, seed, mode, lam, spectral.lambda_h(ch.D), unit, 0, True, 0.0
        )

    def deflate(v):
        return v - fixed * np.vdot(fixed, v)

    if stream is None:
        stream = rng.stream(0)
    res = spectral.power_solve(
        lambda v: superop_apply(ch, v),
        lambda v: superop_apply(ch, v, adjoint=True),
        deflate,
        dim,
        mode,
        complex_dtype=True,
        tol=tol,
        max_iters=max_iters,
        restarts=restarts,
        stream=stream,
    )
    return SpectralReport(
        ch.tag, n, ch.D, 1, seed, mode, res.est, spectral.lambda_h(ch.D),
        1, res.iters, res.converged, res.residual,
    )


def measure_2tpe_epsilon(
    family: PermutationFamily,
    tol: float = DEFAULT_TOL,
    dense_cap: int = DEFAULT_DENSE_CAP,
    stream: np.random.Generator | None = None,
) -> float:
    """Measured 2-copy gap 1 - lambda of the family's averaging operator."""
    op = ClassicalTpeOperator(family, 2)
    mode = "eigen" if family.hermitian else "singular"
    rep = lambda_estimate(op, mode=mode, tol=tol, dense_cap=dense_cap, stream=stream)
    return 1.0 - rep.lam
