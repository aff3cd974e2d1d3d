"""Spectral-gap estimation shared by the classical, quantum, and channel operators.

All gap computations follow the same recipe: project away the operator's known
fixed space (exactly, every step), then find the leading remaining magnitude,
either the largest |eigenvalue| for self-adjoint operators or the largest
singular value in general.  Small problems fall back to dense factorizations;
large ones run a restarted, re-orthogonalized power iteration.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 100_000
DEFAULT_RESTARTS = 3
DEFAULT_DENSE_CAP = 4096
DEFAULT_DIM_CAP = 1 << 24
_WINDOW = 10


class DimensionCapError(ValueError):
    """Raised when an operator would exceed the configured dimension cap."""


def lambda_h(d: int) -> float:
    """Ramanujan-type reference value 2*sqrt(D-1)/D for a degree-D family."""
    return 2.0 * math.sqrt(d - 1) / d


@dataclass(frozen=True)
class SpectralReport:
    """Outcome of one gap computation.

    ``lam`` is the leading nontrivial magnitude (|eigenvalue| in eigen mode,
    singular value in singular mode).  ``unit_mult`` is the dimension of the
    deflated fixed space, refined by a spectral count of additional near-unit
    eigenvalues whenever the dense hermitian route makes that free; use
    the per-operator ``unit_multiplicity`` helpers for careful counting.
    ``iters`` is the total iteration count across restarts (0 on the dense
    route), and ``residual`` the final iterate residual (0.0 when dense).
    """

    construction: str
    N: int
    D: int
    k: int
    seed: int
    mode: str
    lam: float
    lambda_h: float
    unit_mult: int
    iters: int
    converged: bool
    residual: float

    CSV_HEADER = "construction,N,D,k,seed,mode,lambda,lambda_H,unit_mult,iters,converged,residual"

    def csv_row(self) -> str:
        return ",".join(
            [
                self.construction,
                str(self.N),
                str(self.D),
                str(self.k),
                str(self.seed),
                self.mode,
                repr(self.lam),
                repr(self.lambda_h),
                str(self.unit_mult),
                str(self.iters),
                str(self.converged).lower(),
                repr(self.residual),
            ]
        )

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "N": self.N,
            "D": self.D,
            "k": self.k,
            "seed": self.seed,
            "mode": self.mode,
            "lambda": self.lam,
            "lambda_H": self.lambda_h,
            "unit_mult": self.unit_mult,
            "iters": self.iters,
            "converged": self.converged,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class IterationResult:
    est: float
    iters: int
    converged: bool
    residual: float
    vector: np.ndarray | None = field(default=None, compare=False)


def _run_power(apply, apply_adjoint, deflate, dim, mode, complex_dtype, tol, max_iters, stream):
    """One power-iteration run from a fresh random start.

    Eigen mode iterates the deflated operator itself and tracks the (signed)
    Rayleigh quotient; singular mode iterates the Gram operator
    deflate(A^adj(deflate(A v))), whose Rayleigh quotient is sigma^2.
    """
    v = stream.standard_normal(dim)
    if complex_dtype:
        v = v + 1j * stream.standard_normal(dim)
    v = deflate(v)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        # deflation removed everything: the operator acts trivially
        return IterationResult(0.0, 0, True, 0.0)
    v = v / nrm

    history = deque(maxlen=_WINDOW)
    est = 0.0
    residual = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        w = deflate(apply(v))
        if mode == "eigen":
            theta = complex(np.vdot(v, w)).real
            est = abs(theta)
            residual = float(np.linalg.norm(w - theta * v))
            nxt = w
        else:
            theta = float(np.vdot(w, w).real)  # sigma^2
            est = math.sqrt(max(theta, 0.0))
            nxt = deflate(apply_adjoint(w))
            residual = float(np.linalg.norm(nxt - theta * v))
        nn = float(np.linalg.norm(nxt))
        if nn <= 1e-300:
            return IterationResult(0.0, it, True, residual, v)
        history.append(est)
        if (
            len(history) == _WINDOW
            and max(history) - min(history) <= tol * max(est, 1e-30)
            and residual <= 10.0 * tol
        ):
            return IterationResult(est, it, True, residual, v)
        v = nxt / nn
    return IterationResult(est, it, False, residual, v)


def power_solve(
    apply,
    apply_adjoint,
    deflate,
    dim: int,
    mode: str,
    *,
    complex_dtype: bool,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    stream: np.random.Generator,
) -> IterationResult:
    """Restarted deflated power iteration; returns the best run's estimate.

    Fresh random starts guard against initial vectors orthogonal to the
    leading eigenvector.  Two restarts agreeing to 10*tol end the loop early.
    Runs that stall report converged=False rather than raising.
    """
    if mode not in ("eigen", "singular"):
        raise ValueError(f"unknown mode {mode!r}")
    runs = []
    for _ in range(max(1, restarts)):
        res = _run_power(apply, apply_adjoint, deflate, dim, mode, complex_dtype, tol, max_iters, stream)
        runs.append(res)
        conv = [r for r in runs if r.converged]
        if len(conv) >= 2:
            a, b = sorted(r.est for r in conv)[-2:]
            if b - a <= 10.0 * tol * max(1.0, b):
                break
    total = sum(r.iters for r in runs)
    conv = [r for r in runs if r.converged]
    best_any = max(runs, key=lambda r: r.est)
    if conv:
        best = max(conv, key=lambda r: r.est)
        # a stalled run seeing something larger means the converged value
        # cannot be trusted as the leading one
        if best_any.est > best.est + 10.0 * tol * max(1.0, best_any.est):
            return IterationResult(best_any.est, total, False, best_any.residual, best_any.vector)
        return IterationResult(best.est, total, best.converged, best.residual, best.vector)
    return IterationResult(best_any.est, total, False, best_any.residual, best_any.vector)


def deflated_dense(mat: np.ndarray, basis: np.ndarray | None) -> np.ndarray:
    """Compress the fixed space out of a dense matrix: P M P, P = I - W W^dag."""
    if basis is None or basis.size == 0:
        return mat
    w = basis
    pm = mat - w @ (w.conj().T @ mat)
    return pm - (pm @ w) @ w.conj().T


def dense_lambda(mat: np.ndarray, basis: np.ndarray | None, mode: str, hermitian: bool):
    """Dense leading nontrivial magnitude plus the full deflated value list."""
    b = deflated_dense(mat, basis)
    if mode == "eigen":
        if not hermitian:
            raise ValueError("eigen mode requires a hermitian operator")
        vals = np.linalg.eigvalsh((b + b.conj().T) / 2.0)
        lam = float(np.max(np.abs(vals))) if vals.size else 0.0
        return lam, vals
    svals = np.linalg.svd(b, compute_uv=False)
    lam = float(svals[0]) if svals.size else 0.0
    return lam, svals


def dense_leading_vector(mat: np.ndarray, basis: np.ndarray | None, mode: str, hermitian: bool):
    """Leading deflated vector: eigenvector of largest |eigenvalue|, or the
    top right-singular vector, matching what the power iteration converges to."""
    b = deflated_dense(mat, basis)
    if mode == "eigen":
        if not hermitian:
            raise ValueError("eigen mode requires a hermitian operator")
        vals, vecs = np.linalg.eigh((b + b.conj().T) / 2.0)
        idx = int(np.argmax(np.abs(vals)))
        return float(abs(vals[idx])), vecs[:, idx]
    _, svals, vh = np.linalg.svd(b)
    return float(svals[0]), vh[0].conj()
