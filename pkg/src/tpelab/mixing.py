"""Mixing experiments: how fast iterated channels flatten states.

Each experiment iterates a channel (or the classical k-copy operator) from a
chosen start and records the 2-norm and trace-norm distances to the flat
fixed point at every step, next to the geometric bounds implied by the
measured gap.  The bounds always use a measured leading magnitude, never the
Ramanujan-type reference value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tpelab import rng
from tpelab.channels import KrausChannel, channel_apply, unitary_mixture
from tpelab.classical import ClassicalTpeOperator
from tpelab.quantum import UnitaryFamily

DENSITY_TOL = 1e-8
_MIX_CSV_HEADER = "construction,N,D,k,seed,m,l2,l1,bound_l2,bound_l1,violated"


@dataclass(frozen=True)
class MixingTrace:
    """Distances to the flat state per iteration count, with their bounds.

    rows: list of (m, l2, l1).  bound_l2(m) = lambda_ref^m and
    bound_l1(m) = sqrt(dim) * lambda_ref^m with dim = N^k; a row is violated
    when either distance exceeds its bound by more than 1e-10.
    """

    construction: str
    N: int
    D: int
    k: int
    seed: int
    lambda_ref: float
    rows: tuple

    def __post_init__(self):
        ms = [r[0] for r in self.rows]
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("step indices must be strictly increasing")
        if any(r[1] < 0 or r[2] < 0 for r in self.rows):
            raise ValueError("distances must be nonnegative")

    def bound_l2(self, m: int) -> float:
        return self.lambda_ref**m

    def bound_l1(self, m: int) -> float:
        return math.sqrt(self.N**self.k) * self.lambda_ref**m

    def violations(self, slack: float = 1e-10) -> list:
        bad = []
        for m, l2, l1 in self.rows:
            if l2 > self.bound_l2(m) + slack or l1 > self.bound_l1(m) + slack:
                bad.append(m)
        return bad

    CSV_HEADER = _MIX_CSV_HEADER

    def csv_rows(self) -> list:
        out = []
        for m, l2, l1 in self.rows:
            violated = m in set(self.violations())
            out.append(
                ",".join(
                    [
                        self.construction,
                        str(self.N),
                        str(self.D),
                        str(self.k),
                        str(self.seed),
                        str(m),
                        repr(l2),
                        repr(l1),
                        repr(self.bound_l2(m)),
                        repr(self.bound_l1(m)),
                        str(violated).lower(),
                    ]
                )
            )
        return out


def _check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    if rho.shape != (n, n):
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > DENSITY_TOL:
        raise ValueError("density matrix must be hermitian")
    if abs(complex(np.trace(rho)).real - 1.0) > DENSITY_TOL:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2.0).min() < -DENSITY_TOL:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


def trace_norm(m: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2.0))))


def iterate_channel(
    ch: KrausChannel,
    rho0: np.ndarray,
    m_max: int,
    lambda_ref: float,
    seed: int = 0,
) -> MixingTrace:
    """Track distances of channel iterates from the maximally mixed state."""
    rho = _check_density(rho0)
    n = ch.N
    if n > 64:
        raise ValueError("dense mixing traces are capped at N <= 64")
    flat = np.eye(n) / n
    rows = []
    for m in range(m_max + 1):
        diff = rho - flat
        rows.append((m, float(np.linalg.norm(diff)), trace_norm(diff)))
        if m < m_max:
            rho = channel_apply(ch, rho)
    return MixingTrace(ch.tag, n, ch.D, 1, seed, lambda_ref, tuple(rows))


def iterate_classical(
    op: ClassicalTpeOperator,
    p0: np.ndarray,
    m_max: int,
    lambda_ref: float,
    seed: int = 0,
) -> MixingTrace:
    """Track distances of iterated distributions from uniform-on-its-class.

    The start must be a distribution supported inside a single equality
    pattern class; the stationary limit is then the uniform distribution on
    that class, and the 1-norm bound sqrt(N^k) lambda^m applies per class.
    """
    p = np.asarray(p0, dtype=float)
    if p.shape != (op.dim,):
        raise ValueError(f"expected distribution of length {op.dim}")
    if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p0 must be a probability distribution")
    ids, counts = op._patterns()
    support_classes = np.unique(ids[p > 0])
    if support_classes.size != 1:
        raise ValueError("p0 must be supported inside a single pattern class")
    cls = int(support_classes[0])
    target = np.where(ids == cls, 1.0 / counts[cls], 0.0)
    rows = []
    for m in range(m_max + 1):
        diff = p - target
        rows.append((m, float(np.linalg.norm(diff)), float(np.abs(diff).sum())))
        if m < m_max:
            p = op.apply(p)
    return MixingTrace(
        op.family.construction_tag, op.N, op.D, op.k, seed, lambda_ref, tuple(rows)
    )


def required_iterations(lam: float, n: int, eps: float) -> int:
    """Smallest m with lam^m <= eps / sqrt(N), clamped at 0."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must be in (0, 1)")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    target = eps / math.sqrt(n)
    if target >= 1.0:
        return 0
    m = max(0, math.ceil(math.log(target) / math.log(lam)))
    # guard the exact-boundary cases against log roundoff, both directions
    while lam**m > target:
        m += 1
    while m > 0 and lam ** (m - 1) <= target:
        m -= 1
    return m


def word_count(d: int, m: int) -> int:
    """Number of length-m words over a D-letter alphabet, exact."""
    if d < 1 or m < 0:
        raise ValueError("need d >= 1 and m >= 0")
    return d**m


def randomness_exponent(d: int, lam: float) -> float:
    """Exponent e with word budget (N / eps^2)^e: half log(D) / log(1/lambda)."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must be in (0, 1)")
    return 0.5 * math.log(d) / math.log(1.0 / lam)


def word_budget(n: int, eps: float, d: int, lam: float) -> float:
    """(N / eps^2) raised to the randomness exponent, for reporting."""
    return float((n / eps**2) ** randomness_exponent(d, lam))


def state_random_experiment(
    family: UnitaryFamily, m: int, trials: int, stream: np.random.Generator
) -> float:
    """Worst trace distance from flat after m steps over random pure starts."""
    n = family.N
    if n > 64:
        raise ValueError("dense channel powers are capped at N <= 64")
    ch = unitary_mixture(family.members, family.hermitian)
    flat = np.eye(n) / n
    worst = 0.0
    for _ in range(trials):
        psi = stream.standard_normal(n) + 1j * stream.standard_normal(n)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        for _ in range(m):
            rho = channel_apply(ch, rho)
        worst = max(worst, trace_norm(rho - flat))
    return worst
