"""Iterative basis refinement for DD+-constrained trace minimization.

At step ``k`` the Lyapunov slack ``S = -(A X + X A' + Q)`` is kept in
``K(L_k) = {L_k' Q L_k : Q in DD+}``. The optimal slack is then
factored as ``S_k = F F'`` with ``F`` lower triangular and ``L_{k+1} = F'``;
the previous optimum stays feasible (with ``Q = I``), so objectives can
only decrease.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certificate import Certificate, Method, make_certificate
from .cones import TraceMinResult, default_eta, tracemin_kofl
from .core import check_square, cholesky_or_ldl, default_partition
from .exceptions import FactorizationError, LpError, NoInitialPoint, PreconditionError
from .lp import LpStatus
from .scaling import perron_scalings

__all__ = ["PursuitIterate", "BasisPursuitTrace", "basis_pursuit_tracemin", "drop_columns",
           "next_basis"]

STOP_RTOL = 1e-8


@dataclass
class PursuitIterate:
    k: int
    objective: float
    basis_rows: int
    dropped_columns: list
    certificate: Certificate
    decomp: str = "cholesky"

    def to_dict(self) -> dict:
        return {"k": self.k, "objective": self.objective, "basis_rows": self.basis_rows,
                "dropped": list(self.dropped_columns), "decomp": self.decomp,
                "min_eig_X": self.certificate.min_eig_X,
                "max_eig_slack": self.certificate.max_eig_slack}


@dataclass
class BasisPursuitTrace:
    iterations: list = field(default_factory=list)
    init: str = "identity"
    #: converged, max_iters, zero_slack, infeasible, lp_error or no_decrease
    stop_reason: str = "max_iters"

    @property
    def final(self) -> Certificate:
        return self.iterations[-1].certificate

    @property
    def objectives(self) -> np.ndarray:
        return np.array([it.objective for it in self.iterations])


def drop_columns(factor, tau=1e-8):
    """Remove columns ``j`` of a lower-triangular factor with
    ``|F_jj| <= tau * max_i |F_ii|``. Returns ``(kept, dropped)``."""
    diag = np.abs(np.diag(factor))
    top = diag.max() if diag.size else 0.0
    dropped = [int(j) for j in np.flatnonzero(diag <= tau * top)]
    keep = np.setdiff1d(np.arange(factor.shape[1]), dropped)
    return factor[:, keep], dropped


def next_basis(slack, tau=1e-8, mode="cholesky"):
    """``(L, dropped, mode_used)`` with ``L' L`` reproducing `slack`.

    A failed Cholesky falls back to LDL, which zeroes nonpositive pivots.
    ``L`` is ``None`` when nothing survives (a zero slack: the cone is
    already tight and no refinement is possible).
    """
    used = mode
    try:
        f, zeroed = cholesky_or_ldl(slack, mode)
    except FactorizationError:
        f, zeroed = cholesky_or_ldl(slack, "ldl")
        used = "ldl-retry"
    kept, dropped = drop_columns(f, tau)
    if kept.shape[1] == 0:
        return None, dropped, used
    return kept.T, sorted(set(dropped) | set(zeroed)), used


def _initial(a, alpha, q, eta, l0):
    """Try L0 = I, then the Perron-scaled basis, then the caller's."""
    res = tracemin_kofl(a, alpha, q, eta)
    if res.status is LpStatus.OPTIMAL:
        return res, np.eye(a.shape[0]), "identity"
    try:
        w = perron_scalings(a).w
    except PreconditionError:
        w = None
    if w is not None:
        basis = np.diag(1.0 / w)
        res = tracemin_kofl(a, alpha, q, eta, basis=basis)
        if res.status is LpStatus.OPTIMAL:
            return res, basis, "scaled"
    if l0 is not None:
        basis = np.atleast_2d(np.asarray(l0, dtype=float))
        res = tracemin_kofl(a, alpha, q, eta, basis=basis)
        if res.status is LpStatus.OPTIMAL:
            return res, basis, "user"
    raise NoInitialPoint("no feasible starting basis (identity, scaled, caller-supplied)")


def basis_pursuit_tracemin(a, partition=None, q=None, eta=None, max_iters=20, tau=1e-8,
                           decomp_mode="cholesky", l0: Optional[np.ndarray] = None,
                           callback=None) -> BasisPursuitTrace:
    """Minimize ``trace(X)`` over alpha-diagonal ``X`` with a refined DD+ slack.

    Parameters
    ----------
    a : (n, n) array_like
        Hurwitz matrix.
    partition : Partition or sequence of int, optional
    q : (n, n) array_like, optional
        PSD offset, identity by default.
    eta : float, optional
        Margin of the DD+ cone; ``1e-6 * max(1, max|A|)`` by default.
    max_iters : int
        Number of refinements after the initial LP.
    tau : float
        Relative threshold for dropping factor columns.
    decomp_mode : {'cholesky', 'ldl'}
    l0 : array_like, optional
        Starting basis used when neither the identity nor the scaled basis
        is feasible.
    callback : callable, optional
        Called with each :class:`PursuitIterate` as it is produced.

    Returns
    -------
    BasisPursuitTrace

    Raises
    ------
    NoInitialPoint
        If none of the three starting bases gives a feasible LP.
    """
    a = check_square(a, "A")
    alpha = default_partition(partition, a.shape[0])
    if decomp_mode not in ("cholesky", "ldl"):
        raise ValueError(f"unknown decomposition {decomp_mode!r}")
    if eta is None:
        eta = default_eta(a)
    res, basis, how = _initial(a, alpha, q, eta, l0)
    trace = BasisPursuitTrace(init=how)

    def record(k, r: TraceMinResult, basis, dropped, mode):
        cert = make_certificate(a, r.certificate.X, alpha, Method.BASIS_PURSUIT, k=k)
        it = PursuitIterate(k, float(r.objective), int(basis.shape[0]), dropped, cert, mode)
        trace.iterations.append(it)
        if callback is not None:
            callback(it)

    record(0, res, basis, [], "none")
    for k in range(1, max_iters + 1):
        if not np.any(res.slack):
            trace.stop_reason = "zero_slack"
            break
        basis, dropped, mode = next_basis(res.slack, tau, decomp_mode)
        if basis is None:
            trace.stop_reason = "zero_slack"
            break
        try:
            new = tracemin_kofl(a, alpha, q, eta, basis=basis)
        except LpError:
            # late bases can be nearly rank deficient; keep what we have
            trace.stop_reason = "lp_error"
            break
        if new.status is not LpStatus.OPTIMAL:
            # rounding in the factor can cut off the previous point; stop there
            trace.stop_reason = "infeasible"
            break
        prev = res.objective
        if new.objective > prev:
            # only rounding can do this, since the previous optimum is feasible
            trace.stop_reason = "no_decrease"
            break
        res = new
        record(k, res, basis, dropped, mode)
        if prev - res.objective < STOP_RTOL * abs(prev):
            trace.stop_reason = "converged"
            break
    return trace
