import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpelab import rng
from tpelab.lemma import (
    LemmaInstance,
    check_lemma,
    lemma_csv_row,
    operator_norm,
    sample_lemma_instance,
)


def test_operator_norm_matches_svd():
    st_ = rng.stream(0)
    m = st_.standard_normal((5, 5)) + 1j * st_.standard_normal((5, 5))
    assert operator_norm(m) == pytest.approx(np.linalg.svd(m, compute_uv=False)[0])
    assert operator_norm(np.diag([3.0, -7.0])) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        operator_norm(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_instance_validation_rejects_bad_inputs():
    eye = np.eye(3)
    ok = LemmaInstance(3, np.diag([1.0, 0, 0]), np.diag([1.0, 0.5, 0.5]),
                       np.diag([0.5, 1.0, 1.0]), 0.5, 0.5, 0.5)
    assert ok.dim == 3
    with pytest.raises(ValueError, match="projector"):
        LemmaInstance(3, 0.5 * eye, eye * 0.5, eye * 0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError, match="contraction"):
        LemmaInstance(3, np.diag([1.0, 0, 0]), 2.0 * eye, eye * 0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError, match="fix"):
        LemmaInstance(3, np.diag([1.0, 0, 0]), np.diag([0.9, 0.5, 0.5]),
                      eye * 0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError, match="off-projector"):
        LemmaInstance(3, np.diag([1.0, 0, 0]), np.diag([1.0, 0.9, 0.9]),
                      eye * 0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError, match="block of Y"):
        LemmaInstance(3, np.diag([1.0, 0, 0]), np.diag([1.0, 0.5, 0.5]),
                      np.diag([0.9, 0.5, 0.5]), 0.5, 0.5, 0.5)
    with pytest.raises(ValueError, match="p must"):
        LemmaInstance(3, np.diag([1.0, 0, 0]), np.diag([1.0, 0.5, 0.5]),
                      np.diag([0.5, 0.5, 0.5]), 0.5, 0.5, 1.5)


def test_bound_values_at_half_half():
    # eps_x = eps_y = 1/2 at the balanced p = 1/(1 + eps_x) = 2/3:
    # min(p eps_x, 1 - p) = 1/3, so the intermediate bound is 1 - 1/72
    # and the rounder mixed bound is 1 - 1/96.
    inst = sample_lemma_instance(4, 0.5, 0.5, 2, rng.stream(1), p=2.0 / 3.0)
    norm, b_int, b_mix, passed = check_lemma(inst)
    assert b_int == pytest.approx(1.0 - 1.0 / 72.0, abs=1e-15)
    assert b_mix == pytest.approx(1.0 - 1.0 / 96.0, abs=1e-15)
    assert b_int < b_mix
    assert passed
    assert norm <= b_int + 1e-10


def test_sampler_hits_extremal_blocks_exactly():
    inst = sample_lemma_instance(6, 0.3, 0.2, 2, rng.stream(2))
    comp = np.eye(6) - inst.pi
    assert operator_norm(comp @ inst.x @ comp) == pytest.approx(0.7, abs=1e-9)
    assert operator_norm(inst.pi @ inst.y @ inst.pi) == pytest.approx(0.8, abs=1e-9)
    assert operator_norm(inst.x) <= 1 + 1e-10
    assert operator_norm(inst.y) <= 1 + 1e-10


def test_sampler_rank_bounds():
    with pytest.raises(ValueError):
        sample_lemma_instance(4, 0.5, 0.5, 0, rng.stream(3))
    with pytest.raises(ValueError):
        sample_lemma_instance(4, 0.5, 0.5, 4, rng.stream(3))


def test_random_instances_never_violate():
    st_ = rng.stream(4)
    worst = 1.0
    for i in range(200):
        dim = int(st_.integers(2, 9))
        rank = int(st_.integers(1, dim))
        ex = float(st_.uniform(0.01, 0.99))
        ey = float(st_.uniform(0.01, 0.99))
        inst = sample_lemma_instance(dim, ex, ey, rank, st_)
        norm, bound, _, passed = check_lemma(inst)
        assert passed, f"instance {i}: norm {norm} > bound {bound}"
        worst = min(worst, bound - norm)
    assert worst > -1e-10


@settings(max_examples=30, deadline=None)
@given(
    dim=st.integers(2, 6),
    ex=st.floats(0.01, 0.99),
    ey=st.floats(0.01, 0.99),
    seed=st.integers(0, 10**6),
)
def test_property_bound_holds(dim, ex, ey, seed):
    stx = rng.stream(seed, 9)
    rank = int(stx.integers(1, dim))
    inst = sample_lemma_instance(dim, ex, ey, rank, stx)
    _, _, _, passed = check_lemma(inst)
    assert passed


def test_corner_eps_values():
    for ex, ey in [(1e-3, 1e-3), (1e-3, 1 - 1e-3), (1 - 1e-3, 1e-3)]:
        inst = sample_lemma_instance(5, ex, ey, 2, rng.stream(5), p=1.0 / (1.0 + ex))
        _, _, _, passed = check_lemma(inst)
        assert passed


def test_csv_row_fields():
    inst = sample_lemma_instance(4, 0.5, 0.5, 1, rng.stream(6), p=0.5)
    norm, bound, _, passed = check_lemma(inst)
    row = lemma_csv_row(inst, norm, bound, passed)
    parts = row.split(",")
    assert parts[0] == "4"
    assert parts[1] == "1"
    assert float(parts[7]) == pytest.approx(bound - norm)
    assert parts[8] == "true"
