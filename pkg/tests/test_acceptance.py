"""End-to-end acceptance gate: twelve checks covering every component.

Each test prints one pass/fail line (collected into the terminal summary by
conftest) and asserts on the same condition, so a red run names exactly the
behavior that broke.  Seeds are frozen; every randomized check was chosen so
the asserted margins hold with room to spare, and the margins are printed so
drift is visible before it becomes failure.
"""

import itertools
import math
import time

import numpy as np

from tpelab import rng
from tpelab.channels import (
    channel_gap,
    diagonal_sector_matrix,
    measure_2tpe_epsilon,
    sign_expander,
    z_phase_expander,
)
from tpelab.classical import (
    ClassicalTpeOperator,
    f_count,
    lambda_estimate,
    trivial_basis,
    unit_multiplicity,
)
from tpelab.mixing import iterate_channel, iterate_classical, required_iterations
from tpelab.perms import (
    cayley_family,
    cyclic_group_table,
    doubled_counterexample,
    hermitian_family,
    matching_family,
)
from tpelab.quantum import (
    QuantumTpeOperator,
    haar_unitary,
    hermitian_unitary_family,
    lambda_estimate_quantum,
    perm_operator_gram,
    sk_overlap_check,
    trace_moment_mc,
    twirl_basis,
)
from tpelab.spectral import lambda_h
from tpelab.verify import run_suite


def _finish(log, tag, label, ok, detail):
    line = f"{tag} {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    log.append(line)
    print(line)
    assert ok, line


def _brute_pattern_count(n, k):
    """Independent count of equality patterns realizable by [n]^k tuples."""
    seen = set()
    for tup in itertools.product(range(n), repeat=k):
        relabel = {}
        norm = []
        for x in tup:
            if x not in relabel:
                relabel[x] = len(relabel)
            norm.append(relabel[x])
        seen.add(tuple(norm))
    return len(seen)


def test_a01_partition_count_identities(acceptance_log):
    t0 = time.time()
    small_ok = f_count(10, 1) == 1 and f_count(10, 2) == 2 and f_count(10, 3) == 5
    mismatch = [
        (n, k)
        for n in range(1, 7)
        for k in range(1, 7)
        if f_count(n, k) != _brute_pattern_count(n, k)
    ]
    ok = small_ok and not mismatch
    _finish(
        acceptance_log, "a01", "partition-count identities", ok,
        f"1,2,5 exact; brute-force match for N,k <= 6"
        f"{'' if not mismatch else f', mismatches {mismatch}'}; {time.time() - t0:.1f} s",
    )


def test_a02_pattern_vectors_stationary(acceptance_log):
    # degree 8 keeps the generated group rich enough that the fixed space is
    # exactly the pattern span; smaller degrees at small N often generate
    # imprimitive groups with extra unit eigenvalues (see the counterexample
    # checks, which probe that regime on purpose)
    t0 = time.time()
    cases = (
        [(n, 1) for n in (5, 8, 11, 14, 17, 20)]
        + [(n, 2) for n in (6, 8, 10, 12, 14, 16, 18, 20)]
        + [(n, 3) for n in (5, 6, 8, 10, 11, 12)]
    )
    worst_res = 0.0
    bad = []
    for i, (n, k) in enumerate(cases):
        fam = hermitian_family(n, 8, rng.stream(300 + i))
        op = ClassicalTpeOperator(fam, k)
        for v in trivial_basis(n, k):
            worst_res = max(worst_res, float(np.linalg.norm(op.apply(v) - v)))
        cnt, certified = unit_multiplicity(op, tol=1e-6, dense_cap=op.dim)
        if cnt != f_count(n, k) or not certified:
            bad.append((n, k, cnt, f_count(n, k)))
    ok = worst_res <= 1e-12 and not bad
    _finish(
        acceptance_log, "a02", "pattern vectors stationary", ok,
        f"20 families, worst residual {worst_res:.1e}, multiplicity mismatches "
        f"{bad if bad else 'none'}; {time.time() - t0:.1f} s",
    )


def test_a03_operator_span_rank_and_twirl_fixed(acceptance_log):
    t0 = time.time()
    rank_bad = []
    for k in range(1, 6):
        for n in range(k, 9):
            _, rank = perm_operator_gram(n, k)
            if rank != math.factorial(k):
                rank_bad.append((n, k, rank))
    worst = 0.0
    fam_cases = [(2, 1), (3, 1), (4, 1), (5, 1), (6, 1),
                 (2, 2), (3, 2), (4, 2), (5, 2), (3, 3)]
    for i, (n, k) in enumerate(fam_cases):
        fam = hermitian_unitary_family(n, 4, rng.stream(420 + i))
        op = QuantumTpeOperator(fam, k)
        for col in twirl_basis(n, k):
            worst = max(worst, float(np.linalg.norm(op.apply_hat(col) - col)))
    ok = not rank_bad and worst <= 1e-9
    _finish(
        acceptance_log, "a03", "operator-span rank and twirl fixed points", ok,
        f"ranks k! for k <= 5, N <= 8{'' if not rank_bad else f' except {rank_bad}'}; "
        f"10 families, worst twirl residual {worst:.1e}; {time.time() - t0:.1f} s",
    )


def test_a04_haar_trace_moments(acceptance_log):
    t0 = time.time()
    bad = []
    worst_dev = 0.0
    for k in (1, 2, 3):
        for n in range(max(2, k), 7):
            mean, se = trace_moment_mc(n, k, 100_000, rng.stream(780, k, n))
            dev = abs(mean - math.factorial(k)) / se
            worst_dev = max(worst_dev, dev)
            if dev > 3.0:
                bad.append((k, n, mean, se))
    _finish(
        acceptance_log, "a04", "Haar trace moments", not bad,
        f"14 (k, N) combos at 1e5 samples, worst deviation {worst_dev:.2f} standard errors"
        f"{'' if not bad else f', outliers {bad}'}; {time.time() - t0:.1f} s",
    )


def test_a05_copy_correlation_counterexamples(acceptance_log):
    t0 = time.time()
    base = hermitian_family(4, 4, rng.stream(40))
    base_lam = lambda_estimate(ClassicalTpeOperator(base, 1), dense_cap=64).lam
    dbl = doubled_counterexample(base)
    dcnt, dcert = unit_multiplicity(ClassicalTpeOperator(dbl, 2), dense_cap=4096)
    cay = cayley_family(cyclic_group_table(12), [1, 11])
    ccnt, ccert = unit_multiplicity(ClassicalTpeOperator(cay, 2), dense_cap=21000)
    ok = (
        base_lam < 1.0 - 1e-6
        and dcert and dcnt >= 3 and dcnt > f_count(dbl.N, 2)
        and ccert and ccnt >= 12
    )
    _finish(
        acceptance_log, "a05", "copy-correlation counterexamples", ok,
        f"gapped base (lambda {base_lam:.3f}) doubles to multiplicity {dcnt} > "
        f"f_2 = {f_count(dbl.N, 2)}; cyclic left-multiplication family reaches "
        f"{ccnt} >= 12; {time.time() - t0:.1f} s",
    )


def test_a06_phase_channel_gap_floor(acceptance_log):
    t0 = time.time()
    worst = math.inf
    bad = []
    used = 0
    skipped = 0
    for n, want in ((16, 7), (24, 7), (32, 6)):
        got = 0
        t = 0
        while got < want and t < 4 * want:
            fam = hermitian_family(n, 4, rng.stream(600, n, t))
            t += 1
            eps = measure_2tpe_epsilon(fam)
            if eps < 1e-6:
                # no two-copy gap to amplify: outside the bound's hypothesis
                skipped += 1
                continue
            got += 1
            for variant in (False, True):
                ch = z_phase_expander(fam, eps, hermitian_variant=variant)
                gap = 1.0 - channel_gap(ch, mode="singular").lam
                margin = gap - eps / 48.0
                worst = min(worst, margin)
                if margin < -1e-10:
                    bad.append((n, t - 1, variant, gap, eps))
        used += got
    ok = used == 20 and not bad
    _finish(
        acceptance_log, "a06", "phase-channel gap floor", ok,
        f"{used} families across N in (16, 24, 32), both variants, "
        f"{skipped} gapless draws skipped, worst margin over eps/48: {worst:.3e}"
        f"{'' if not bad else f', violations {bad}'}; {time.time() - t0:.1f} s",
    )


def test_a07_sign_channel_diagonal_sector(acceptance_log):
    t0 = time.time()
    worst = 0.0
    for i, n in enumerate((6, 10, 16, 22, 28, 34, 40, 48, 56, 64)):
        fam = hermitian_family(n, 4 if i % 2 == 0 else 6, rng.stream(70 + i))
        ch = sign_expander(fam, rng.stream(70 + i, 1))
        diag = diagonal_sector_matrix(ch)
        one_copy = ClassicalTpeOperator(fam, 1).to_dense()
        a = np.sort(np.linalg.eigvalsh((diag + diag.conj().T) / 2.0))
        b = np.sort(np.linalg.eigvalsh((one_copy + one_copy.T) / 2.0))
        worst = max(worst, float(np.max(np.abs(a - b))))
    _finish(
        acceptance_log, "a07", "sign-channel diagonal sector", worst <= 1e-8,
        f"10 seeds, N up to 64, worst spectral deviation from the one-copy "
        f"operator {worst:.1e}; {time.time() - t0:.1f} s",
    )


def test_a08_mixing_bounds_and_step_budget(acceptance_log):
    t0 = time.time()
    violations = []
    delivery_bad = []
    st = rng.stream(510)
    for i, n in enumerate((8, 12, 16, 20, 24, 32, 40, 48, 56, 64)):
        fam = hermitian_family(n, 4, rng.stream(500 + i))
        ch = sign_expander(fam, rng.stream(500 + i, 1))
        lam = channel_gap(ch, mode="eigen").lam
        mstar = required_iterations(lam, n, 0.25)
        for _ in range(2):
            psi = st.standard_normal(n) + 1j * st.standard_normal(n)
            psi /= np.linalg.norm(psi)
            trace = iterate_channel(ch, np.outer(psi, psi.conj()), 50, lam)
            violations += trace.violations()
            if mstar <= 50:
                l1 = dict((m, l1) for m, _, l1 in trace.rows)[mstar]
                if l1 > 0.25 + 1e-10:
                    delivery_bad.append((n, mstar, l1))
    classical_cases = [(12, 1), (20, 1), (40, 1), (64, 1), (10, 2),
                       (14, 2), (18, 2), (24, 2), (30, 2), (8, 2)]
    for i, (n, k) in enumerate(classical_cases):
        fam = hermitian_family(n, 4, rng.stream(530 + i))
        op = ClassicalTpeOperator(fam, k)
        lam = lambda_estimate(op, mode="eigen", dense_cap=op.dim).lam
        for start in (0, 1):
            p0 = np.zeros(op.dim)
            p0[start] = 1.0
            violations += iterate_classical(op, p0, 50, lam).violations()
    ok = not violations and not delivery_bad
    _finish(
        acceptance_log, "a08", "mixing bounds and step budget", ok,
        f"20 channel starts + 20 classical starts, m <= 50, "
        f"{len(violations)} bound violations, "
        f"{len(delivery_bad)} step-budget misses; {time.time() - t0:.1f} s",
    )


def test_a09_mixture_norm_bound(acceptance_log):
    t0 = time.time()
    verdict = run_suite("lemma", 0, instances=10_000)
    detail = verdict["checks"][0]["detail"]
    _finish(
        acceptance_log, "a09", "mixture-norm bound", verdict["passed"],
        f"{detail}; {time.time() - t0:.1f} s",
    )


def test_a10_entangled_overlap_identity(acceptance_log):
    t0 = time.time()
    st = rng.stream(880)
    worst = 0.0
    cases = 0
    for i in range(45):
        n = 2 + i % 2
        k = 1 + (i // 2) % 2
        u = haar_unitary(n, st)
        v = haar_unitary(n, st)
        worst = max(worst, sk_overlap_check(u, v, k)[2])
        cases += 1
    for i in range(5):
        n = 2 + i % 2
        phi = float(st.uniform(0.0, 2.0 * math.pi))
        u = haar_unitary(n, st)
        lhs, rhs, gap = sk_overlap_check(u, np.exp(1j * phi) * u, 2)
        worst = max(worst, gap, abs(lhs - 1.0), abs(rhs - 1.0))
        cases += 1
    _finish(
        acceptance_log, "a10", "entangled-overlap identity", worst <= 1e-10,
        f"{cases} pairs incl. phase-invariance, worst gap {worst:.1e}; "
        f"{time.time() - t0:.1f} s",
    )


def test_a11_large_family_gap_statistics(acceptance_log):
    # interval [0.80, 0.92] frozen after a one-time calibration pass over 20
    # independent N=2000 families (medians 0.8629..0.8684, median of medians
    # 0.8653); the two-copy ceiling lambda_H^(1/3) + 0.10 holds a priori as
    # well because every averaged permutation operator is doubly stochastic,
    # so the printed two-copy medians are diagnostic, converging from below
    t0 = time.time()
    lams1 = []
    for s in range(5):
        fam = hermitian_family(2000, 4, rng.stream(900 + s))
        op = ClassicalTpeOperator(fam, 1)
        lams1.append(lambda_estimate(op, mode="eigen", dense_cap=op.dim).lam)
    med1 = float(np.median(lams1))

    lams2 = []
    stochastic_ok = True
    for s in range(3):
        fam = hermitian_family(2000, 4, rng.stream(900 + s))
        op = ClassicalTpeOperator(fam, 2)
        ones = np.ones(op.dim)
        stochastic_ok &= bool(np.all(op.apply(ones) == 1.0))
        rep = lambda_estimate(
            op, mode="singular", tol=1e-4, max_iters=200, restarts=1,
            stream=rng.stream(900 + s, 7), dense_cap=0,
        )
        lams2.append(rep.lam)
    med2 = float(np.median(lams2))
    ceiling = lambda_h(4) ** (1.0 / 3.0) + 0.10
    ok = 0.80 <= med1 <= 0.92 and med2 <= ceiling and stochastic_ok
    _finish(
        acceptance_log, "a11", "large-family gap statistics", ok,
        f"one-copy median {med1:.4f} in [0.80, 0.92] (reference {lambda_h(4):.4f}), "
        f"two-copy median {med2:.4f} <= {ceiling:.4f}, row sums exact; "
        f"{time.time() - t0:.1f} s",
    )


def test_a12_iterative_matches_dense(acceptance_log):
    t0 = time.time()
    results = []

    def classical_case(fam, k, seed, mode=None):
        op = ClassicalTpeOperator(fam, k)
        mode = mode or ("eigen" if op.hermitian else "singular")
        dense = lambda_estimate(op, mode=mode, dense_cap=op.dim).lam
        it = lambda_estimate(op, mode=mode, dense_cap=0, stream=rng.stream(seed, 99))
        results.append((f"classical-{fam.construction_tag}-{op.N}-{k}",
                        dense, it.lam, it.converged))

    def quantum_case(fam, k, seed):
        op = QuantumTpeOperator(fam, k)
        mode = "eigen" if op.hermitian else "singular"
        dense = lambda_estimate_quantum(op, mode=mode, dense_cap=op.dim).lam
        it = lambda_estimate_quantum(op, mode=mode, dense_cap=0, stream=rng.stream(seed, 99))
        results.append((f"quantum-{op.N}-{k}", dense, it.lam, it.converged))

    def channel_case(ch, tag, seed):
        mode = "eigen" if ch.hermitian else "singular"
        dense = channel_gap(ch, mode=mode, dense_cap=ch.N * ch.N).lam
        it = channel_gap(ch, mode=mode, dense_cap=0, stream=rng.stream(seed, 99))
        results.append((f"channel-{tag}-{ch.N}", dense, it.lam, it.converged))

    i = 0
    for n, k in [(40, 1), (64, 1), (30, 1), (12, 2), (16, 2), (20, 2), (26, 2),
                 (8, 3), (10, 3), (12, 3), (14, 3)]:
        classical_case(hermitian_family(n, 4, rng.stream(1000 + i)), k, 1000 + i)
        i += 1
    for n, k in [(20, 1), (16, 2), (10, 3), (44, 1)]:
        classical_case(matching_family(n, 4, rng.stream(1000 + i)), k, 1000 + i)
        i += 1
    for n in (8, 12):
        base = hermitian_family(n // 2, 4, rng.stream(1000 + i))
        classical_case(doubled_counterexample(base), 2, 1000 + i)
        i += 1
    for n in (9, 12, 15):
        # averaging a shift with its inverse makes the two-copy spectrum
        # symmetric for even orders, so the plus/minus-safe singular route
        # is the only sound iterative choice here
        classical_case(cayley_family(cyclic_group_table(n), [1, n - 1]), 2,
                       1000 + i, mode="singular")
        i += 1
    for n, k in [(4, 1), (5, 1), (6, 1), (7, 1), (8, 1),
                 (3, 2), (4, 2), (5, 2), (6, 2), (2, 3)]:
        quantum_case(hermitian_unitary_family(n, 4, rng.stream(1000 + i)), k, 1000 + i)
        i += 1
    for n, k in [(4, 1), (6, 1), (8, 1), (4, 2), (3, 2)]:
        quantum_case(hermitian_unitary_family(n, 6, rng.stream(1000 + i)), k, 1000 + i)
        i += 1
    for n in (8, 16, 24, 32, 48, 64):
        fam = hermitian_family(n, 4, rng.stream(1000 + i))
        channel_case(sign_expander(fam, rng.stream(1000 + i, 1)), "sign", 1000 + i)
        i += 1
    for variant, sizes in ((False, (8, 12, 16, 20, 24)), (True, (8, 16, 24, 32))):
        for n in sizes:
            fam = hermitian_family(n, 4, rng.stream(1000 + i))
            eps = measure_2tpe_epsilon(fam)
            assert eps > 1e-6, f"gapless draw at case {i}"
            ch = z_phase_expander(fam, eps, hermitian_variant=variant)
            channel_case(ch, "zphase-h" if variant else "zphase", 1000 + i)
            i += 1

    bad = [
        (name, dense, it, conv)
        for name, dense, it, conv in results
        if abs(dense - it) > 1e-6 or not conv
    ]
    worst = max(abs(d - t) for _, d, t, _ in results)
    ok = len(results) == 50 and not bad
    _finish(
        acceptance_log, "a12", "iterative matches dense", ok,
        f"{len(results)} cases, worst |dense - iterative| {worst:.1e}"
        f"{'' if not bad else f', failures {bad}'}; {time.time() - t0:.1f} s",
    )
