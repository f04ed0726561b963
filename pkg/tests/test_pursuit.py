import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocklyap import (
    basis_pursuit_tracemin,
    heat_system,
    random_hplus_hurwitz,
    tracemin_ddp,
    verify_certificate,
)
from blocklyap.certificate import Method
from blocklyap.exceptions import NoInitialPoint
from blocklyap.pursuit import drop_columns, next_basis


def test_minus_identity_converges_immediately():
    tr = basis_pursuit_tracemin(-np.eye(2), q=np.eye(2), eta=0.0)
    assert len(tr.iterations) == 1
    assert tr.iterations[0].objective == pytest.approx(1.0)
    assert tr.init == "identity"
    assert tr.stop_reason == "zero_slack"


def test_drop_columns_threshold():
    f = np.diag([1.0, 1e-12, 1.0])
    kept, dropped = drop_columns(f, 1e-8)
    assert dropped == [1]
    assert kept.shape == (3, 2)


def test_next_basis_reproduces_slack():
    s = np.array([[4.0, 2.0], [2.0, 3.0]])
    basis, dropped, mode = next_basis(s)
    np.testing.assert_allclose(basis.T @ basis, s)
    assert dropped == [] and mode == "cholesky"


def test_next_basis_ldl_retry_on_indefinite():
    basis, dropped, mode = next_basis(np.diag([1.0, -1e-3]))
    assert mode == "ldl-retry"
    assert basis.shape == (1, 2)
    assert 1 in dropped


def test_next_basis_zero_slack():
    basis, _, _ = next_basis(np.zeros((2, 2)))
    assert basis is None


def test_heat_small_monotone_and_valid():
    h = heat_system(8)
    q = h.B @ h.B.T
    tr = basis_pursuit_tracemin(h.A, q=q, max_iters=6)
    obj = tr.objectives
    assert obj[0] == tracemin_ddp(h.A, q=q).objective
    assert np.all(np.diff(obj) <= 1e-9 * np.abs(obj[:-1]))
    assert obj[-1] < obj[0]
    assert tr.stop_reason in ("converged", "max_iters")
    for it in tr.iterations:
        assert verify_certificate(h.A, it.certificate).valid
        assert it.certificate.method is Method.BASIS_PURSUIT


def test_callback_and_serialization():
    seen = []
    tr = basis_pursuit_tracemin(random_hplus_hurwitz(4, 1), max_iters=3, callback=seen.append)
    assert [it.k for it in seen] == [it.k for it in tr.iterations]
    rec = tr.iterations[-1].to_dict()
    assert set(rec) == {"k", "objective", "basis_rows", "dropped", "decomp", "min_eig_X", "max_eig_slack"}


def test_scaled_start_when_identity_infeasible():
    a = np.array([[-1.0, -2.0], [-2.0, -5.0]])
    tr = basis_pursuit_tracemin(a, q=np.zeros((2, 2)), eta=1e-3, max_iters=3)
    assert tr.init == "scaled"
    assert verify_certificate(a, tr.final).valid


def test_no_initial_point():
    # -A is not H+, so there is no scaled start, and a shrunken DD+ cone
    # with a huge margin admits nothing
    a = np.array([[-1.0, 10.0], [-10.0, -1.0]])
    with pytest.raises(NoInitialPoint):
        basis_pursuit_tracemin(a, q=np.zeros((2, 2)), eta=1e3, l0=np.eye(2)[:1])


def test_rejects_unknown_decomposition():
    with pytest.raises(ValueError):
        basis_pursuit_tracemin(-np.eye(2), decomp_mode="qr")


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_random_monotone(n, seed):
    a = random_hplus_hurwitz(n, seed)
    tr = basis_pursuit_tracemin(a, max_iters=5, decomp_mode="ldl")
    obj = tr.objectives
    assert np.all(np.diff(obj) <= 1e-9 * np.abs(obj[:-1]))
    assert all(verify_certificate(a, it.certificate).valid for it in tr.iterations)
