"""Named check suites behind the ``verify`` subcommand.

Each suite returns a list of {"name", "passed", "detail"} dicts; the CLI
aggregates them into a machine-readable verdict.  Suites are deterministic
for a fixed seed.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from tpelab import rng
from tpelab.channels import (
    channel_gap,
    measure_2tpe_epsilon,
    sign_expander,
    z_phase_expander,
)
from tpelab.classical import (
    ClassicalTpeOperator,
    enumerate_partitions,
    f_count,
    lambda_estimate,
    trivial_basis,
    tuple_digits,
    unit_multiplicity,
)
from tpelab.lemma import check_lemma, sample_lemma_instance
from tpelab.mixing import iterate_channel, iterate_classical, required_iterations
from tpelab.perms import cayley_family, cyclic_group_table, doubled_counterexample, hermitian_family
from tpelab.quantum import haar_unitary, perm_operator_gram, sk_overlap_check, trace_moment_mc


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _brute_partition_count(n: int, k: int) -> int:
    return len(enumerate_partitions(k, min(n, k)))


def suite_identities(seed: int) -> list:
    checks = []

    known = {(10, 1): 1, (10, 2): 2, (10, 3): 5, (2, 3): 4, (10, 4): 15}
    bad = {nk: (f_count(*nk), want) for nk, want in known.items() if f_count(*nk) != want}
    checks.append(_check("fixed-space-count-small", not bad, f"mismatches: {bad}" if bad else "ok"))

    mismatch = [
        (n, k)
        for n, k in itertools.product(range(1, 7), range(1, 7))
        if f_count(n, k) != _brute_partition_count(n, k)
    ]
    checks.append(
        _check("fixed-space-count-enumeration", not mismatch, f"mismatches at {mismatch}" if mismatch else "ok")
    )

    gram_bad = []
    for k in range(1, 5):
        for n in range(k, 7):
            _, rank = perm_operator_gram(n, k)
            if rank != math.factorial(k):
                gram_bad.append((n, k, rank))
    checks.append(
        _check("gram-rank-full", not gram_bad, f"rank mismatches: {gram_bad}" if gram_bad else "ok")
    )

    phase_bad = []
    for n in range(3, 9):
        val = _offdiag_phase_moment(n)
        if abs(val - (-1.0 / (n - 1))) > 1e-12:
            phase_bad.append((n, val))
    checks.append(
        _check(
            "phase-overlap-second-moment",
            not phase_bad,
            f"deviations: {phase_bad}" if phase_bad else "ok",
        )
    )

    st = rng.stream(seed, 1)
    worst = 0.0
    for _ in range(10):
        u = haar_unitary(3, st)
        v = haar_unitary(3, st)
        worst = max(worst, sk_overlap_check(u, v, 2)[2])
    phi = float(st.uniform(0, 2 * math.pi))
    u = haar_unitary(3, st)
    lhs, rhs, gap = sk_overlap_check(u, np.exp(1j * phi) * u, 2)
    worst = max(worst, gap, abs(lhs - 1.0), abs(rhs - 1.0))
    checks.append(_check("entangled-overlap-identity", worst <= 1e-10, f"worst gap {worst:.2e}"))
    return checks


def _offdiag_phase_moment(n: int) -> float:
    """<v| Z (x) Z* |v> on the normalized distinct-pair indicator."""
    v = trivial_basis(n, 2)[1]
    z = np.exp(2j * math.pi * np.arange(n) / n)
    digits = tuple_digits(n, 2)
    val = np.sum(v**2 * (z[digits[0]] * z[digits[1]].conj()))
    return float(val.real)


def suite_counterexamples(seed: int) -> list:
    checks = []
    base = hermitian_family(4, 4, rng.stream(seed, 2))
    dbl = doubled_counterexample(base)
    count, _ = unit_multiplicity(ClassicalTpeOperator(dbl, 2))
    f2 = f_count(dbl.N, 2)
    checks.append(
        _check(
            "doubled-multiplicity",
            count >= 3 and count > f2,
            f"count {count} vs f_2 {f2}",
        )
    )
    n = 8
    cay = cayley_family(cyclic_group_table(n), [1, n - 1])
    ccount, _ = unit_multiplicity(ClassicalTpeOperator(cay, 2))
    checks.append(_check("cayley-multiplicity", ccount >= n, f"count {ccount} vs N {n}"))
    return checks


def suite_theorem3(seed: int, trials: int = 6) -> list:
    checks = []
    worst_margin = math.inf
    bad = []
    used = 0
    skipped = 0
    for t in range(4 * trials):
        if used >= trials:
            break
        fam = hermitian_family(16, 4, rng.stream(seed, 3, t))
        eps = measure_2tpe_epsilon(fam)
        if eps < 1e-6:
            # gapless family (generators give an intransitive or imprimitive
            # group): outside the bound's hypothesis, draw another
            skipped += 1
            continue
        used += 1
        for variant in (False, True):
            ch = z_phase_expander(fam, eps, hermitian_variant=variant)
            rep = channel_gap(ch, mode="singular")
            gap = 1.0 - rep.lam
            margin = gap - eps / 48.0
            worst_margin = min(worst_margin, margin)
            if margin < -1e-10:
                bad.append((t, variant, gap, eps))
    checks.append(
        _check(
            "phase-channel-gap-bound",
            not bad and used == trials,
            f"{used} families ({skipped} gapless draws skipped), worst margin {worst_margin:.3e}"
            + (f", violations {bad}" if bad else ""),
        )
    )
    return checks


def suite_lemma(seed: int, instances: int = 1000) -> list:
    corners = [1e-3, 0.5, 1.0 - 1e-3]
    st = rng.stream(seed, 4)
    bad = 0
    worst = math.inf
    for i in range(instances):
        dim = int(st.integers(2, 9))
        rank = int(st.integers(1, dim))
        if i % 3 == 0:
            ex = float(st.choice(corners))
            ey = float(st.choice(corners))
        else:
            ex = float(st.uniform(0.01, 0.99))
            ey = float(st.uniform(0.01, 0.99))
        p = 1.0 / (1.0 + ex) if i % 5 == 0 else None
        inst = sample_lemma_instance(dim, ex, ey, rank, st, p=p)
        norm, bound, _, passed = check_lemma(inst)
        worst = min(worst, bound - norm)
        bad += not passed
    return [
        _check(
            "mixture-norm-bound",
            bad == 0,
            f"{instances} instances, {bad} violations, worst margin {worst:.3e}",
        )
    ]


def suite_mixing(seed: int) -> list:
    checks = []
    fam = hermitian_family(16, 4, rng.stream(seed, 5))
    ch = sign_expander(fam, rng.stream(seed, 6))
    lam = channel_gap(ch, mode="eigen").lam
    st = rng.stream(seed, 7)
    violations = []
    worst_mstar = 0.0
    for t in range(3):
        psi = st.standard_normal(16) + 1j * st.standard_normal(16)
        psi /= np.linalg.norm(psi)
        trace = iterate_channel(ch, np.outer(psi, psi.conj()), 30, lam)
        violations += trace.violations()
        mstar = required_iterations(lam, 16, 0.5)
        l1_at = dict((m, l1) for m, _, l1 in trace.rows).get(min(mstar, 30))
        worst_mstar = max(worst_mstar, l1_at)
    checks.append(
        _check("channel-mixing-bounds", not violations, f"violations at steps {sorted(set(violations))}" if violations else "ok")
    )
    checks.append(
        _check(
            "required-iterations-delivers",
            worst_mstar <= 0.5 + 1e-10,
            f"worst trace distance {worst_mstar:.3e} at the prescribed step",
        )
    )

    cfam = hermitian_family(6, 4, rng.stream(seed, 8))
    op = ClassicalTpeOperator(cfam, 2)
    clam = lambda_estimate(op, mode="eigen").lam
    p0 = np.zeros(op.dim)
    p0[0] = 1.0
    ctrace = iterate_classical(op, p0, 30, clam)
    cv = ctrace.violations()
    checks.append(
        _check("classical-mixing-bounds", not cv, f"violations at steps {sorted(set(cv))}" if cv else "ok")
    )
    return checks


def suite_moments(seed: int, samples: int = 20000) -> list:
    bad = []
    for k in (1, 2):
        for n in (2, 3, 4):
            mean, se = trace_moment_mc(n, k, samples, rng.stream(seed, 9, k, n))
            want = math.factorial(k)
            if abs(mean - want) > 3.0 * se + 1e-12:
                bad.append((k, n, mean, se))
    return [
        _check(
            "haar-trace-moments",
            not bad,
            f"outside 3 standard errors: {bad}" if bad else "ok",
        )
    ]


SUITES = {
    "identities": suite_identities,
    "counterexamples": suite_counterexamples,
    "theorem3": suite_theorem3,
    "lemma": suite_lemma,
    "mixing": suite_mixing,
    "moments": suite_moments,
}


def run_suite(name: str, seed: int, **kwargs) -> dict:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    checks = SUITES[name](seed, **kwargs)
    return {
        "suite": name,
        "seed": seed,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
