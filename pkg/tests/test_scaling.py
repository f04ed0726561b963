import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocklyap import (
    Certificate,
    Partition,
    diag_lyapunov,
    is_ddp,
    is_h_plus,
    make_certificate,
    perron_scalings,
    random_hplus_hurwitz,
    scaled_dd_certificate,
    verify_certificate,
)
from blocklyap.certificate import Method
from blocklyap.classes import comparison_matrix
from blocklyap.exceptions import DimensionError, NotHPlus

A_IV = np.array([[-1.0, -2.0], [2.0, -5.0]])
R2 = np.sqrt(2.0) - 1.0


def test_perron_identity():
    sp = perron_scalings(-np.eye(2))
    np.testing.assert_allclose(sp.v, [1, 1])
    np.testing.assert_allclose(sp.w, [1, 1])
    assert sp.lam == pytest.approx(-1.0)


def test_perron_counterexample():
    sp = perron_scalings(A_IV)
    np.testing.assert_allclose(sp.v, [1, R2], rtol=1e-12)
    np.testing.assert_allclose(sp.w, [1, R2], rtol=1e-12)


def test_perron_metzler():
    a = np.array([[-1.0, 0.5], [0.25, -1.0]])
    sp = perron_scalings(a)
    m = comparison_matrix(a).entries
    assert np.all(sp.v > 0) and np.all(m @ sp.v > 0)
    assert np.all(sp.w > 0) and np.all(m.T @ sp.w > 0)


def test_perron_reducible_falls_back_to_lp():
    a = np.array([[-1.0, 0.0], [3.0, -2.0]])
    sp = perron_scalings(a)
    m = comparison_matrix(a).entries
    assert sp.route == "lp"
    assert np.all(m @ sp.v > 0) and np.all(m.T @ sp.w > 0)


def test_perron_rejects_non_hplus():
    with pytest.raises(NotHPlus):
        perron_scalings(np.array([[-1.0, 2.0], [2.0, -1.0]]))


@pytest.mark.parametrize("a,x,slack_max", [
    (A_IV, np.eye(2), -2.0),
    (-np.eye(3), np.eye(3), -2.0),
    (np.array([[-2.0, 1.0], [1.0, -2.0]]), np.eye(2), -2.0),
])
def test_diag_lyapunov_examples(a, x, slack_max):
    cert = diag_lyapunov(a)
    np.testing.assert_allclose(cert.X, x, atol=1e-12)
    assert cert.max_eig_slack == pytest.approx(slack_max)
    assert cert.method is Method.THEOREM4


def test_scaled_dd_counterexample():
    pw, cert = scaled_dd_certificate(A_IV)
    np.testing.assert_allclose(np.diag(pw), [1, R2], rtol=1e-12)
    np.testing.assert_allclose(np.diag(cert.X), [1, R2**2], rtol=1e-12)
    at = pw @ A_IV @ np.linalg.inv(pw)
    s = -(at @ cert.X + cert.X @ at.T)
    np.testing.assert_allclose(s, np.diag([2.0, 10 * R2**2]), atol=1e-12)
    assert is_ddp(s)


def test_unscaled_diagonal_dd_depends_on_coupling_signs():
    # as written the couplings cancel: X = I already gives a diagonal slack
    assert is_ddp(-(A_IV + A_IV.T))
    # with both couplings negative row 1 needs 2 x1 >= 2 x1 + 2 x2: impossible
    flip = np.array([[-1.0, -2.0], [-2.0, -5.0]])
    for x1, x2 in [(1, 1), (1, 0.01), (5, 0.1), (0.1, 5)]:
        x = np.diag([x1, x2])
        assert not is_ddp(-(flip @ x + x @ flip.T))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**31))
def test_diag_certificate_properties(n, seed):
    a = random_hplus_hurwitz(n, seed, density=0.5)
    cert = diag_lyapunov(a)
    assert verify_certificate(a, cert).valid
    assert is_h_plus(-(a @ cert.X + cert.X @ a.T))
    pw, ycert = scaled_dd_certificate(a)
    at = pw @ a @ np.linalg.inv(pw)
    assert is_ddp(-(at @ ycert.X + ycert.X @ at.T))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31))
def test_verdict_invariant_under_diagonal_similarity(n, seed):
    a = random_hplus_hurwitz(n, seed)
    d = np.random.default_rng(seed).uniform(0.1, 10.0, n)
    b = (d[:, None] * a) / d[None, :]
    assert verify_certificate(b, diag_lyapunov(b)).valid


@pytest.mark.parametrize("a,x,valid,slack", [
    (-np.eye(2), np.eye(2), True, -2.0),
    (np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(2), False, 0.0),
    (A_IV, np.eye(2), True, -2.0),
])
def test_verify_examples(a, x, valid, slack):
    rep = verify_certificate(a, x)
    assert rep.valid is valid
    assert rep.max_eig_slack == pytest.approx(slack, abs=1e-12)


def test_verify_rejects_coupled_blocks_and_asymmetry():
    a = -np.eye(3)
    x = np.eye(3)
    x[0, 2] = x[2, 0] = 0.1
    rep = verify_certificate(a, x, Partition((2, 1)))
    assert not rep.valid and not rep.alpha_diagonal
    y = np.eye(2)
    y[0, 1] = 0.1
    rep = verify_certificate(-np.eye(2), y, Partition((2,)))
    assert not rep.valid and not rep.symmetric


def test_verify_dimension_mismatch():
    with pytest.raises(DimensionError):
        verify_certificate(-np.eye(2), np.eye(3))


def test_certificate_json_roundtrip():
    cert = make_certificate(A_IV, np.eye(2), None, Method.LP, note=np.float64(1.5))
    back = Certificate.from_dict(json.loads(cert.to_json()))
    np.testing.assert_array_equal(back.X, cert.X)
    assert back.method is Method.LP
    assert back.extra["note"] == 1.5
    assert verify_certificate(A_IV, back).valid
