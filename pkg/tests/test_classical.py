import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpelab import rng
from tpelab.classical import (
    ClassicalTpeOperator,
    Partition,
    enumerate_partitions,
    f_count,
    lambda_estimate,
    pattern_ids,
    trivial_basis,
    tuple_digits,
    unit_multiplicity,
)
from tpelab.perms import (
    cayley_family,
    cyclic_group_table,
    doubled_counterexample,
    hermitian_family,
    identity_permutation,
    matching_family,
    PermutationFamily,
)
from tpelab.spectral import DimensionCapError


BELL = [1, 1, 2, 5, 15, 52, 203]  # set-partition counts of 0..6 elements


def brute_pattern_count(n, k):
    """Independent oracle: count equality patterns of k-tuples over N points."""
    seen = set()
    for tup in itertools.product(range(min(n, k) + 1), repeat=k):
        first = {}
        norm = []
        for x in tup:
            if x not in first:
                first[x] = len(first)
            norm.append(first[x])
        if max(norm) < n:
            seen.add(tuple(norm))
    return len(seen)


def test_partition_validation():
    Partition((0, 1, 0, 2))
    with pytest.raises(ValueError):
        Partition((1, 0))
    with pytest.raises(ValueError):
        Partition((0, 2))


def test_enumerate_partitions_small():
    assert [p.block_id for p in enumerate_partitions(2, 2)] == [(0, 0), (0, 1)]
    assert len(enumerate_partitions(3, 3)) == 5
    assert len(enumerate_partitions(3, 1)) == 1


def test_f_count_known_values():
    assert f_count(10, 1) == 1
    assert f_count(10, 2) == 2
    assert f_count(10, 3) == 5
    assert f_count(2, 3) == 4
    for k in range(1, 7):
        assert f_count(10, k) == BELL[k]


def test_f_count_matches_brute_force():
    for n in range(1, 7):
        for k in range(1, 7):
            assert f_count(n, k) == brute_pattern_count(n, k), (n, k)


def test_f_count_equals_enumeration_length():
    for n in range(1, 7):
        for k in range(1, 7):
            assert f_count(n, k) == len(enumerate_partitions(k, min(n, k)))


def test_tuple_digits_big_endian():
    d = tuple_digits(3, 2)
    assert d.shape == (2, 9)
    # index 5 = (1,2) with the first copy most significant
    assert d[0, 5] == 1 and d[1, 5] == 2


def test_pattern_ids_group_tuples_by_equality_pattern():
    ids, counts = pattern_ids(3, 2)
    assert ids.shape == (9,)
    # diagonal entries share one class, off-diagonal the other
    diag = [0, 4, 8]
    assert len({ids[i] for i in diag}) == 1
    assert len({ids[i] for i in range(9) if i not in diag}) == 1
    assert sorted(counts.tolist()) == [3, 6]


def test_pattern_class_order_matches_enumeration():
    n, k = 4, 3
    ids, _ = pattern_ids(n, k)
    parts = enumerate_partitions(k, min(n, k))
    digits = tuple_digits(n, k)
    for class_idx, part in enumerate(parts):
        members = np.nonzero(ids == class_idx)[0]
        tup = digits[:, members[0]]
        # recompute the equality pattern of the first member tuple
        first = {}
        norm = []
        for x in tup:
            if int(x) not in first:
                first[int(x)] = len(first)
            norm.append(first[int(x)])
        assert tuple(norm) == part.block_id


def test_trivial_basis_is_orthonormal():
    vecs = trivial_basis(4, 3)
    assert len(vecs) == f_count(4, 3)
    mat = np.stack(vecs, axis=1)
    assert np.allclose(mat.T @ mat, np.eye(mat.shape[1]), atol=1e-12)


def test_apply_matches_dense_oracle():
    fam = hermitian_family(5, 4, rng.stream(2))
    op = ClassicalTpeOperator(fam, 2)
    dense = np.zeros((25, 25))
    digits = tuple_digits(5, 2)
    for m in fam.members:
        img = m.images
        for col in range(25):
            row = int(img[digits[0, col]]) * 5 + int(img[digits[1, col]])
            dense[row, col] += 1 / 4
    v = rng.stream(3).standard_normal(25)
    assert np.allclose(op.apply(v), dense @ v, atol=1e-12)
    assert np.allclose(op.apply_adjoint(v), dense.T @ v, atol=1e-12)
    assert np.allclose(op.to_dense(), dense, atol=1e-15)


def test_adjoint_is_transpose_for_any_family():
    fam = PermutationFamily(
        (identity_permutation(4), matching_family(4, 1, rng.stream(9)).members[0]),
        hermitian=False,
        seed=0,
        construction_tag="explicit",
    )
    op = ClassicalTpeOperator(fam, 2)
    dense = op.to_dense()
    v = rng.stream(4).standard_normal(16)
    assert np.allclose(op.apply_adjoint(v), dense.T @ v, atol=1e-12)


def test_trivial_vectors_are_fixed():
    fam = hermitian_family(6, 4, rng.stream(5))
    for k in (1, 2, 3):
        op = ClassicalTpeOperator(fam, k)
        for v in trivial_basis(6, k):
            assert np.linalg.norm(op.apply(v) - v) <= 1e-12


def test_deflate_projects_onto_pattern_complement():
    fam = hermitian_family(5, 4, rng.stream(6))
    op = ClassicalTpeOperator(fam, 2)
    v = rng.stream(7).standard_normal(op.dim)
    d = op.deflate(v)
    assert np.allclose(op.deflate(d), d, atol=1e-12)
    for b in trivial_basis(5, 2):
        assert abs(np.dot(b, d)) <= 1e-10


def test_dense_and_iterative_lambda_agree():
    fam = hermitian_family(7, 4, rng.stream(8))
    op = ClassicalTpeOperator(fam, 2)
    dense = lambda_estimate(op, "eigen")
    it = lambda_estimate(op, "eigen", dense_cap=0, stream=rng.stream(9))
    assert dense.iters == 0 and dense.converged
    assert it.converged
    assert abs(dense.lam - it.lam) <= 1e-6
    sng = lambda_estimate(op, "singular", dense_cap=0, stream=rng.stream(10))
    assert abs(dense.lam - sng.lam) <= 1e-6  # hermitian: sigma == |lambda|


def test_eigen_mode_requires_hermitian():
    base = hermitian_family(4, 4, rng.stream(12))
    dbl = doubled_counterexample(base)
    with pytest.raises(ValueError):
        lambda_estimate(ClassicalTpeOperator(dbl, 1), "eigen")


def test_identity_family_has_lambda_one():
    fam = PermutationFamily(
        (identity_permutation(4), identity_permutation(4)),
        hermitian=True,
        seed=0,
        construction_tag="explicit",
    )
    rep = lambda_estimate(ClassicalTpeOperator(fam, 1), "eigen")
    assert rep.lam == pytest.approx(1.0, abs=1e-12)


def test_unit_multiplicity_doubled_exceeds_f2():
    base = hermitian_family(4, 4, rng.stream(13))
    op = ClassicalTpeOperator(doubled_counterexample(base), 2)
    count, certified = unit_multiplicity(op)
    assert certified
    assert count >= 3 > f_count(8, 2)


def test_unit_multiplicity_cayley_scales_with_n():
    for n in (5, 8, 11):
        fam = cayley_family(cyclic_group_table(n), [1, n - 1])
        count, certified = unit_multiplicity(ClassicalTpeOperator(fam, 2))
        assert certified
        assert count >= n


def tuple_orbit_count(fam, k):
    """Independent oracle: orbits of the generated group acting on k-tuples.

    A vector is fixed by the averaged operator iff it is fixed by every
    member, i.e. constant on these orbits, so the unit multiplicity must
    equal this count exactly.
    """
    n = fam.N
    dim = n**k
    parent = list(range(dim))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    digits = tuple_digits(n, k)
    for m in fam.members:
        img = m.images
        mapped = np.zeros(dim, dtype=np.int64)
        for c in range(k):
            mapped = mapped * n + img[digits[c]]
        for i in range(dim):
            ri, rj = find(i), find(int(mapped[i]))
            if ri != rj:
                parent[ri] = rj
    return len({find(x) for x in range(dim)})


def test_unit_multiplicity_equals_orbit_count():
    # D=4 at N=6 sometimes generates an imprimitive group with extra
    # invariants; the dense count must track the true orbit count either way
    for seed in (0, 1, 2, 20):
        fam = hermitian_family(6, 4, rng.stream(20, seed))
        for k in (1, 2):
            op = ClassicalTpeOperator(fam, k)
            count, certified = unit_multiplicity(op)
            assert certified
            assert count == tuple_orbit_count(fam, k)


def test_unit_multiplicity_matches_f_count_for_generic_families():
    for seed in range(3):
        fam = hermitian_family(8, 8, rng.stream(21, seed))
        for k in (1, 2):
            op = ClassicalTpeOperator(fam, k)
            count, certified = unit_multiplicity(op)
            assert certified
            assert count == f_count(8, k)


def test_dim_cap_enforced():
    fam = hermitian_family(10, 4, rng.stream(14))
    with pytest.raises(DimensionCapError):
        ClassicalTpeOperator(fam, 9, dim_cap=10**6)


@settings(max_examples=15, deadline=None)
@given(
    st.integers(min_value=2, max_value=6),
    st.integers(min_value=1, max_value=3),
    st.integers(min_value=0, max_value=500),
)
def test_apply_preserves_total_mass(n, k, seed):
    fam = hermitian_family(n, 4, rng.stream(seed)) if n >= 2 else None
    op = ClassicalTpeOperator(fam, k)
    v = rng.stream(seed, 1).standard_normal(op.dim)
    # column-stochastic columns sum to one, so mass is preserved
    assert op.apply(v).sum() == pytest.approx(v.sum(), rel=1e-12, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=500))
def test_lambda_below_one_for_random_families(seed):
    fam = hermitian_family(6, 4, rng.stream(seed))
    rep = lambda_estimate(ClassicalTpeOperator(fam, 2), "eigen")
    assert rep.lam <= 1.0 + 1e-12
