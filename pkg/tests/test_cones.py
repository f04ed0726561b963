import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocklyap import (
    ConeSpec,
    LpStatus,
    Partition,
    dual_gramian_lp,
    factor_width2,
    heat_system,
    is_ddp,
    random_hplus_hurwitz,
    tracemin_ddp,
    tracemin_ddp_scaled,
    tracemin_kofl,
    verify_certificate,
)
from blocklyap.cones import AffineSym, LpBuilder, ddp_constraints, in_dual_ddp, kofl_constraints
from blocklyap.exceptions import DimensionError, NotHPlus, NotHurwitz, ShapeError

import oracles

A_IV = np.array([[-1.0, -2.0], [2.0, -5.0]])
A_FLIP = np.array([[-1.0, -2.0], [-2.0, -5.0]])


def _dominant(n, seed):
    """Row and column dominant Hurwitz matrix: X = c I is DD+ feasible."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (n, n))
    np.fill_diagonal(a, 0.0)
    off = np.maximum(np.abs(a).sum(axis=0), np.abs(a).sum(axis=1))
    np.fill_diagonal(a, -(off + rng.uniform(0.1, 1.0, n)))
    return a


def _diag_expr(scale):
    # S = scale * diag(x1, x2) with LP variables 0, 1
    coef = np.zeros((2, 2, 2))
    coef[0, 0, 0] = coef[1, 1, 1] = scale
    return AffineSym(np.zeros((2, 2)), coef, np.array([0, 1]))


def test_ddp_constraints_scaled_diagonal():
    b = LpBuilder()
    b.add_vars(2, lo=0.0, cost=1.0)
    ddp_constraints(b, _diag_expr(2.0), eta=0.3)
    sol = b.solve()
    np.testing.assert_allclose(sol.x, [0.15, 0.15])


def test_ddp_constraints_constant_expressions():
    for s, feasible in [(np.diag([2.0, 1.7158]), True), (np.array([[1.0, -2.0], [-2.0, 5.0]]), False)]:
        b = LpBuilder()
        ddp_constraints(b, AffineSym.constant(s))
        assert (b.solve().status is LpStatus.OPTIMAL) is feasible


def test_affine_sym_rejects_asymmetric():
    with pytest.raises(ShapeError):
        AffineSym(np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros((2, 2, 0)), np.zeros(0, dtype=int))


def test_kofl_diagonal_basis():
    b = LpBuilder()
    kv = kofl_constraints(b, AffineSym.constant(np.diag([8.0, 2.0])), np.diag([2.0, 1.0]))
    sol = b.solve()
    assert sol.optimal
    np.testing.assert_allclose(kv.q_matrix(sol.x), np.diag([2.0, 2.0]), atol=1e-12)


def test_kofl_rank_obstruction():
    b = LpBuilder()
    kofl_constraints(b, AffineSym.constant(np.eye(2)), np.array([[1.0, 0.0]]))
    assert b.solve().status is LpStatus.INFEASIBLE


def test_kofl_rejects_rank_deficient_basis():
    with pytest.raises(DimensionError):
        kofl_constraints(LpBuilder(), AffineSym.constant(np.eye(2)), np.ones((2, 2)))


def test_kofl_identity_equals_ddp():
    rng = np.random.default_rng(3)
    a = random_hplus_hurwitz(5, 3)
    q = rng.normal(size=(5, 5))
    q = q @ q.T
    plain = tracemin_ddp(a, q=q)
    # a permuted identity goes through the ray encoding instead of the shortcut
    perm = np.eye(5)[[1, 0, 2, 3, 4]]
    ray = tracemin_kofl(a, q=q, basis=perm)
    assert ray.objective == pytest.approx(plain.objective, rel=1e-9)


def test_cone_spec_validation():
    with pytest.raises(ValueError):
        ConeSpec("PSD")
    with pytest.raises(ValueError):
        ConeSpec("KOFL")
    with pytest.raises(DimensionError):
        ConeSpec("KOFL", basis=np.ones((2, 2)))


def test_tracemin_minus_identity():
    res = tracemin_ddp(-np.eye(2), q=np.eye(2), eta=0.0)
    np.testing.assert_allclose(res.certificate.X, 0.5 * np.eye(2), atol=1e-12)
    assert res.objective == pytest.approx(1.0)


def test_tracemin_requires_hurwitz():
    with pytest.raises(NotHurwitz):
        tracemin_ddp(np.eye(2))


def test_tracemin_rejects_indefinite_q():
    with pytest.raises(ShapeError):
        tracemin_ddp(-np.eye(2), q=np.diag([1.0, -1.0]))


def test_sign_flipped_counterexample_needs_scaling():
    # with the (2,1) entry negated the identity-coordinate LP has no solution
    plain = tracemin_ddp(A_FLIP, q=np.zeros((2, 2)), eta=1.0)
    assert plain.status is LpStatus.INFEASIBLE
    scaled = tracemin_ddp_scaled(A_FLIP, q=np.zeros((2, 2)))
    assert scaled.status is LpStatus.OPTIMAL
    assert verify_certificate(A_FLIP, scaled.certificate).valid


def test_counterexample_as_written_is_feasible_unscaled():
    # X = diag(1.5, 0.5): -(A X + X A') = [[3, -1], [-1, 5]] is DD+
    res = tracemin_ddp(A_IV, q=np.zeros((2, 2)), eta=1.0)
    assert res.status is LpStatus.OPTIMAL
    np.testing.assert_allclose(np.diag(res.certificate.X), [1.5, 0.5], atol=1e-9)


def test_scaled_identity_is_unscaled():
    a = -np.eye(3)
    assert tracemin_ddp_scaled(a).objective == pytest.approx(tracemin_ddp(a).objective)


def test_scaled_counterexample_with_identity_q():
    res = tracemin_ddp_scaled(A_IV, q=np.eye(2))
    assert np.isfinite(res.objective)
    assert verify_certificate(A_IV, res.certificate).valid
    assert res.objective == pytest.approx(np.trace(res.certificate.X))


def test_block_partition_tracemin():
    a = np.array([[-2.0, 0.0, 1.0], [0.0, -2.0, 0.0], [0.5, 0.0, -3.0]])
    res = tracemin_ddp(a, Partition((2, 1)))
    assert verify_certificate(a, res.certificate).valid
    blk = tracemin_ddp(a)
    # a coarser partition only enlarges the feasible set
    assert res.objective <= blk.objective + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_eta_monotone(n, seed):
    a = _dominant(n, seed)
    vals = [tracemin_ddp(a, eta=eta).objective for eta in (0.0, 1e-3, 1e-1)]
    assert vals[0] <= vals[1] + 1e-9 and vals[1] <= vals[2] + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_permutation_invariance(n, seed):
    a = _dominant(n, seed)
    p = np.eye(n)[np.random.default_rng(seed).permutation(n)]
    v1 = tracemin_ddp(a, eta=0.0).objective
    v2 = tracemin_ddp(p @ a @ p.T, eta=0.0).objective
    assert v1 == pytest.approx(v2, rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_tracemin_certificates_and_slack(n, seed):
    a = _dominant(n, seed)
    res = tracemin_ddp(a)
    assert verify_certificate(a, res.certificate).valid
    assert is_ddp(res.slack, -1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_scaled_lp_always_feasible_for_hplus(n, seed):
    a = random_hplus_hurwitz(n, seed)
    res = tracemin_ddp_scaled(a)
    assert res.status is LpStatus.OPTIMAL
    assert verify_certificate(a, res.certificate).valid


def test_dual_pattern_matches_dense_reference():
    for n in (2, 3):
        h = heat_system(n)
        ref = oracles.dual_gramian_reference(h.A, h.B)
        assert dual_gramian_lp(h.A, h.B).objective == pytest.approx(ref, rel=1e-8)


def test_dual_equals_primal_without_margin():
    h = heat_system(8)
    q = h.B @ h.B.T
    dual = dual_gramian_lp(h.A, h.B)
    primal = tracemin_ddp(h.A, q=q, eta=0.0)
    assert dual.objective == pytest.approx(primal.objective, rel=1e-8)
    assert in_dual_ddp(dual.Y, 1e-9)


def test_dual_lp_bounds_true_gramian_trace_from_above():
    from scipy.linalg import solve_continuous_lyapunov
    h = heat_system(10)
    gram = solve_continuous_lyapunov(h.A, -h.B @ h.B.T)
    assert dual_gramian_lp(h.A, h.B).objective >= np.trace(gram) - 1e-9


def test_dual_cone_membership():
    assert in_dual_ddp(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert not in_dual_ddp(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not in_dual_ddp(np.diag([1.0, -1.0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_dual_cone_is_sound(n, seed):
    # <Y, S> >= 0 for every Y in the dual cone and every S in DD+
    rng = np.random.default_rng(seed)
    d = rng.uniform(0, 1, n)
    y = np.diag(d)
    for i in range(n):
        for j in range(i + 1, n):
            y[i, j] = y[j, i] = rng.uniform(-1, 1) * (d[i] + d[j]) / 2
    s = rng.normal(size=(n, n))
    s = (s + s.T) / 2
    np.fill_diagonal(s, np.abs(s).sum(axis=1) - np.abs(np.diag(s)))
    assert in_dual_ddp(y, 1e-12)
    assert np.sum(y * s) >= -1e-12


def test_factor_width2_pair():
    out = factor_width2(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    pairs = {ij: x for ij, x in out.terms}
    np.testing.assert_allclose(pairs[0, 1], [[1, -1], [-1, 1]])
    assert pairs[0, 0][0, 0] == pytest.approx(1.0)
    assert pairs[1, 1][0, 0] == pytest.approx(1.0)


def test_factor_width2_identity():
    out = factor_width2(np.eye(3))
    np.testing.assert_allclose(out.reconstruct(), np.eye(3))


def test_factor_width2_rejects_non_hplus():
    with pytest.raises(NotHPlus):
        factor_width2(np.array([[1.0, 2.0], [2.0, 1.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_factor_width2_random_sdd(n, seed):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=(n, n))
    s = (s + s.T) / 2
    d = rng.uniform(0.2, 5.0, n)
    # make D S D diagonally dominant, i.e. S scaled-DD
    np.fill_diagonal(s, 0.0)
    diag = (np.abs(s) @ d) / d + rng.uniform(0.01, 1.0, n)
    np.fill_diagonal(s, diag)
    out = factor_width2(s)
    np.testing.assert_allclose(out.reconstruct(), s, atol=1e-10)
    for _, x in out.terms:
        assert np.linalg.eigvalsh(x)[0] >= -1e-10
