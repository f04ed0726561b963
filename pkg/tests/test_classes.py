import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocklyap import (
    Partition,
    comparison_matrix,
    gershgorin_cover_check,
    is_ddp,
    is_h_plus,
    is_metzler,
    sdd_scalings,
)
from blocklyap.benchmarks import random_partitioned
from blocklyap.exceptions import Infeasible

A_IV = np.array([[-1.0, -2.0], [2.0, -5.0]])
A3 = np.array([[-2.0, 0.0, 1.0], [0.0, -2.0, 0.0], [0.5, 0.0, -3.0]])


@pytest.mark.parametrize("a,blocks,expected", [
    (A_IV, (1, 1), [[1, -2], [-2, 5]]),
    (A3, (2, 1), [[2, -1], [-0.5, 3]]),
    (-np.eye(3), (1, 1, 1), np.eye(3)),
])
def test_comparison_matrix(a, blocks, expected):
    np.testing.assert_allclose(comparison_matrix(a, Partition(blocks)).entries, expected, atol=1e-14)


def test_comparison_matrix_singular_block_is_zero():
    a = np.zeros((3, 3))
    a[0, 0] = 1.0
    m = comparison_matrix(a, Partition((2, 1))).entries
    assert m[0, 0] == 0.0


@pytest.mark.parametrize("a,expected", [
    (np.array([[-2.0, 1.0], [1.0, -2.0]]), True),
    (A_IV, False),
    (np.eye(2), True),
])
def test_is_metzler(a, expected):
    assert is_metzler(a) is expected


def test_h_plus_examples():
    assert is_h_plus(-A_IV)
    assert is_h_plus(-A_IV, strict=True)
    assert not is_h_plus(np.array([[1.0, -2.0], [-2.0, 1.0]]))
    assert is_h_plus(np.eye(4))
    # negative diagonal entries disqualify even when M is an M-matrix
    assert not is_h_plus(np.diag([1.0, -1.0]))


def test_h_plus_boundary_weak_vs_strict():
    m = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert is_h_plus(m)
    assert not is_h_plus(m, strict=True)


@pytest.mark.parametrize("m,margin,expected", [
    (np.diag([2.0, 1.7158]), 0.0, True),
    (np.array([[1.0, -2.0], [-2.0, 5.0]]), 0.0, False),
    (np.eye(2), 0.5, True),
    (np.eye(2), 1.5, False),
])
def test_is_ddp(m, margin, expected):
    assert is_ddp(m, margin) is expected


def test_ddp_checks_columns_too():
    m = np.array([[3.0, 0.0], [2.5, 3.0]])
    assert is_ddp(m)
    assert not is_ddp(np.array([[1.0, 0.0], [1.5, 3.0]]))


@pytest.mark.parametrize("m", [
    np.array([[2.0, -1.0], [-1.0, 2.0]]),
    np.array([[2.0, -1.0], [-0.5, 3.0]]),
])
def test_sdd_scalings_valid(m):
    d = sdd_scalings(m).d
    off = np.abs(m) - np.diag(np.diag(np.abs(m)))
    assert np.all(d > 0)
    assert np.all(d * np.diag(m) > off @ d)
    assert d.sum() == pytest.approx(m.shape[0])


def test_sdd_scalings_infeasible():
    with pytest.raises(Infeasible):
        sdd_scalings(np.array([[1.0, -2.0], [-2.0, 1.0]]))


def test_sdd_scalings_reducible_uses_lp_fallback():
    # triangular M-matrix: the extremal eigenvector has a zero entry
    m = np.array([[1.0, 0.0, 0.0], [-5.0, 2.0, 0.0], [0.0, -5.0, 3.0]])
    d = sdd_scalings(m).d
    off = np.abs(m) - np.diag(np.diag(m))
    assert np.all(d * np.diag(m) > off @ d)


def test_gershgorin_examples():
    assert gershgorin_cover_check(np.diag([-1.0, -2.0]), Partition((1, 1)), -1.0).index == 0
    assert gershgorin_cover_check(A_IV, Partition((1, 1)), -3.0).index == 0
    blk = np.zeros((3, 3))
    blk[:2, :2] = [[-1, 2], [0, -1]]
    blk[2, 2] = -4.0
    assert gershgorin_cover_check(blk, Partition((2, 1)), -4.0).index == 1


def test_gershgorin_reports_violation():
    out = gershgorin_cover_check(np.diag([-1.0, -2.0]), Partition((1, 1)), 5.0)
    assert not out.covered


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_every_eigenvalue_is_covered(seed):
    a, part = random_partitioned(np.random.default_rng(seed))
    for lam in np.linalg.eigvals(a):
        assert gershgorin_cover_check(a, part, lam).covered


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_h_plus_invariant_under_positive_diagonal_scaling(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    a = rng.normal(size=(n, n))
    np.fill_diagonal(a, np.abs(np.diag(a)) + rng.uniform(0, 2, n))
    d = np.diag(rng.uniform(0.2, 5.0, n))
    m = comparison_matrix(a).entries
    if abs(np.min(np.linalg.eigvals(m).real)) < 1e-6:
        return
    assert is_h_plus(a, strict=True) == is_h_plus(d @ a @ np.linalg.inv(d), strict=True)


def test_scalar_partition_matches_blockwise_definition():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(5, 5))
    expected = np.array([[np.linalg.svd(a[i:i + 1, j:j + 1], compute_uv=False)[0] * (1 if i == j else -1)
                          for j in range(5)] for i in range(5)])
    np.testing.assert_allclose(comparison_matrix(a).entries, expected, rtol=1e-14)
    m = comparison_matrix(a, Partition((2, 3))).entries
    assert m[0, 1] == pytest.approx(-np.linalg.norm(a[:2, 2:], 2))
    assert m[1, 1] == pytest.approx(np.linalg.svd(a[2:, 2:], compute_uv=False)[-1])
