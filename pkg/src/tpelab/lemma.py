"""Norm bound for mixtures of a projector-fixing contraction with another.

The statement under test: if ||X|| <= 1, ||Y|| <= 1, Pi is an orthogonal
projector with Pi X = X Pi = Pi, the off-projector block of X has norm at
most 1 - eps_x, and ||Pi Y Pi|| <= 1 - eps_y, then

    ||p X + (1-p) Y|| <= 1 - (eps_y / 12) min(p eps_x, 1 - p)

for every p in (0, 1).  At the balanced choice p = 1/(1 + eps_x) the bound
weakens to the rounder 1 - eps_x eps_y / 24.  Instances are sampled with the
extremal block norms hit exactly, so the randomized search stresses the
inequality where it is tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tpelab.quantum import haar_unitary

SLACK = 1e-10


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    m = np.atleast_2d(np.asarray(m))
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix must be finite")
    return float(np.linalg.svd(m, compute_uv=False)[0])


@dataclass(frozen=True, eq=False)
class LemmaInstance:
    """One sampled (Pi, X, Y, eps_x, eps_y, p) satisfying the hypotheses."""

    dim: int
    pi: np.ndarray
    x: np.ndarray
    y: np.ndarray
    eps_x: float
    eps_y: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must be in (0, 1)")
        if not (0.0 < self.eps_x < 1.0 and 0.0 < self.eps_y < 1.0):
            raise ValueError("eps_x and eps_y must be in (0, 1)")
        eye = np.eye(self.dim)
        pi, x, y = self.pi, self.x, self.y
        if operator_norm(pi @ pi - pi) > SLACK or operator_norm(pi - pi.conj().T) > SLACK:
            raise ValueError("Pi is not an orthogonal projector")
        if operator_norm(x) > 1.0 + SLACK or operator_norm(y) > 1.0 + SLACK:
            raise ValueError("X and Y must be contractions")
        if operator_norm(pi @ x - pi) > SLACK or operator_norm(x @ pi - pi) > SLACK:
            raise ValueError("X must fix Pi on both sides")
        comp = eye - pi
        if operator_norm(comp @ x @ comp) > 1.0 - self.eps_x + SLACK:
            raise ValueError("off-projector block of X is too large")
        if operator_norm(pi @ y @ pi) > 1.0 - self.eps_y + SLACK:
            raise ValueError("projector block of Y is too large")


def _random_contraction(rows: int, cols: int, stream: np.random.Generator) -> np.ndarray:
    """U diag(s) V^dag with uniform singular values in [0, 1]: any contraction."""
    k = min(rows, cols)
    u = haar_unitary(rows, stream)[:, :k]
    v = haar_unitary(cols, stream)[:, :k]
    s = stream.uniform(0.0, 1.0, size=k)
    return (u * s) @ v.conj().T


def _contraction_with_block(r: int, d: int, norm_a: float, stream: np.random.Generator) -> np.ndarray:
    """A d x d contraction whose leading r x r block has norm exactly norm_a.

    Standard contraction completion: given block A, the off-diagonal blocks
    are damped by (I - A A^dag)^(1/2) factors and the tail block by both, so
    the whole matrix stays a contraction for any choice of the inner
    contractions.
    """
    m = d - r
    a0 = stream.standard_normal((r, r)) + 1j * stream.standard_normal((r, r))
    a = a0 * (norm_a / operator_norm(a0)) if norm_a > 0 else np.zeros((r, r), dtype=complex)

    def psqrt(mat):
        vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2.0)
        return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T

    left = psqrt(np.eye(r) - a @ a.conj().T)
    right = psqrt(np.eye(r) - a.conj().T @ a)
    kb = _random_contraction(r, m, stream)
    kc = _random_contraction(m, r, stream)
    ell = _random_contraction(m, m, stream)
    b = left @ kb
    c = kc @ right
    dd = -kc @ a.conj().T @ kb + psqrt(np.eye(m) - kc @ kc.conj().T) @ ell @ psqrt(
        np.eye(m) - kb.conj().T @ kb
    )
    return np.block([[a, b], [c, dd]])


def sample_lemma_instance(
    dim: int,
    eps_x: float,
    eps_y: float,
    rank_pi: int,
    stream: np.random.Generator,
    p: float | None = None,
) -> LemmaInstance:
    """Random instance with both extremal block norms achieved exactly.

    Pi is a Haar-random rank-rank_pi projector; X is the identity on it plus
    an off-block scaled to norm exactly 1 - eps_x; Y is a random contraction
    whose Pi-block has norm exactly 1 - eps_y.  p defaults to a uniform draw.
    """
    if not 1 <= rank_pi < dim:
        raise ValueError("need 1 <= rank_pi < dim")
    if p is None:
        p = float(stream.uniform(0.01, 0.99))
    if not (0.0 < eps_x < 1.0 and 0.0 < eps_y < 1.0 and 0.0 < p < 1.0):
        raise ValueError("eps_x, eps_y, p must be in (0, 1)")
    q = haar_unitary(dim, stream)
    qp = q[:, :rank_pi]
    qc = q[:, rank_pi:]
    pi = qp @ qp.conj().T

    m = dim - rank_pi
    x0 = stream.standard_normal((m, m)) + 1j * stream.standard_normal((m, m))
    x0 *= (1.0 - eps_x) / operator_norm(x0)
    x = pi + qc @ x0 @ qc.conj().T

    y_blocks = _contraction_with_block(rank_pi, dim, 1.0 - eps_y, stream)
    y = q @ y_blocks @ q.conj().T

    return LemmaInstance(dim, pi, x, y, eps_x, eps_y, p)


def check_lemma(inst: LemmaInstance) -> tuple:
    """Evaluate the mixture norm against its bounds.

    Returns (norm, bound_intermediate, bound_mixed, passed).  The
    intermediate bound is asserted for every p; the rounder mixed bound is
    meaningful at p = 1/(1 + eps_x) and reported for context.
    """
    norm = operator_norm(inst.p * inst.x + (1.0 - inst.p) * inst.y)
    bound_intermediate = 1.0 - (inst.eps_y / 12.0) * min(
        inst.p * inst.eps_x, 1.0 - inst.p
    )
    bound_mixed = 1.0 - inst.eps_x * inst.eps_y / 24.0
    passed = norm <= bound_intermediate + SLACK
    return norm, bound_intermediate, bound_mixed, passed


LEMMA_CSV_HEADER = "dim,rank_pi,eps_x,eps_y,p,norm,bound,margin,pass"


def lemma_csv_row(inst: LemmaInstance, norm: float, bound: float, passed: bool) -> str:
    return ",".join(
        [
            str(inst.dim),
            str(int(round(np.trace(inst.pi).real))),
            repr(inst.eps_x),
            repr(inst.eps_y),
            repr(inst.p),
            repr(norm),
            repr(bound),
            repr(bound - norm),
            str(passed).lower(),
        ]
    )
