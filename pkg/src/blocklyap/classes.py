"""Comparison matrices and membership tests for Metzler, H/H+, DD+ and
scaled diagonally dominant matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Partition,
    check_square,
    default_partition,
    min_singular_value,
    spectral_norm,
)
from .exceptions import Infeasible
from .lp import LpProblem, solve_lp

__all__ = [
    "ComparisonMatrix",
    "SddScalings",
    "GershgorinCover",
    "comparison_matrix",
    "is_metzler",
    "is_h_plus",
    "is_ddp",
    "ddp_margin",
    "sdd_scalings",
    "gershgorin_cover_check",
    "hplus_tolerance",
]


@dataclass(frozen=True)
class ComparisonMatrix:
    entries: np.ndarray
    source_partition: Partition

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def min_real_eig(self) -> float:
        return float(np.min(np.linalg.eigvals(self.entries).real))


@dataclass(frozen=True)
class SddScalings:
    d: np.ndarray

    def __post_init__(self):
        if np.any(self.d <= 0):
            raise ValueError("scalings must be positive")


def comparison_matrix(a, partition=None) -> ComparisonMatrix:
    """Block comparison matrix over the blocks of `partition`.

    Diagonal entries are the smallest singular values of the diagonal
    blocks (zero when singular); off-diagonal entries are minus the
    spectral norms of the off-diagonal blocks.
    """
    m = check_square(a)
    alpha = default_partition(partition, m.shape[0])
    alpha.check(m)
    if alpha.is_trivial:
        out = -np.abs(m)
        np.fill_diagonal(out, np.abs(np.diag(m)))
        return ComparisonMatrix(out, alpha)
    out = np.zeros((alpha.n, alpha.n))
    for i, j, blk in alpha.blocks_of(m):
        out[i, j] = min_singular_value(blk) if i == j else -spectral_norm(blk)
    return ComparisonMatrix(out, alpha)


def hplus_tolerance(m) -> float:
    return 1e-9 * max(float(np.max(np.abs(np.asarray(m)))), np.finfo(float).tiny)


def is_metzler(a) -> bool:
    m = check_square(a)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    return bool(np.all(off >= 0))


def is_h_plus(a, partition=None, tol=None, strict=False) -> bool:
    """H+ membership of `a` with respect to `partition`.

    The weak test (default) asks that every eigenvalue of the comparison
    matrix has real part ``>= -tol``; ``strict=True`` asks for ``> tol``,
    i.e. a nonsingular comparison matrix. In both cases the diagonal
    entries (or the diagonal blocks' smallest singular values) must be
    positive.
    """
    m = check_square(a)
    cm = comparison_matrix(m, partition)
    if tol is None:
        tol = hplus_tolerance(cm.entries)
    alpha = cm.source_partition
    if alpha.is_trivial:
        if np.any(np.diag(m) <= 0):
            return False
    elif np.any(np.diag(cm.entries) <= 0):
        return False
    lam = cm.min_real_eig
    return lam > tol if strict else lam >= -tol


def ddp_margin(a) -> float:
    """Smallest row/column dominance surplus ``a_ii - sum_j |a_ij|``."""
    m = check_square(a)
    off = np.abs(m) - np.diag(np.abs(np.diag(m)))
    diag = np.diag(m)
    return float(min(np.min(diag - off.sum(axis=1)), np.min(diag - off.sum(axis=0))))


def is_ddp(a, margin=0.0) -> bool:
    """True iff `a` and its transpose are diagonally dominant with surplus >= `margin`.

    With ``margin=0`` the closed cone is tested; pass a positive margin for
    strict dominance.
    """
    return ddp_margin(a) >= margin


def _valid_scaling(m, d):
    off = np.abs(m) - np.diag(np.abs(np.diag(m)))
    return bool(np.all(d > 0) and np.all(d * np.diag(m) - off @ d > 0))


def sdd_scalings(m, tol=None) -> SddScalings:
    """Positive ``d`` with ``d_i m_ii > sum_{j != i} d_j |m_ij|`` for every row.

    Uses the eigenvector of the smallest eigenvalue of `m` (a Perron
    vector of ``-m``) and falls back to a feasibility LP when that vector
    is not strictly positive. ``sum(d) == n``.

    Raises
    ------
    Infeasible
        When the smallest real eigenvalue of `m` is not above `tol`.
    """
    m = np.asarray(m, dtype=float)
    m = check_square(m)
    n = m.shape[0]
    if tol is None:
        tol = hplus_tolerance(m)
    if np.any(np.diag(m) <= 0):
        raise Infeasible("comparison matrix has a nonpositive diagonal entry")
    z = np.diag(np.diag(m)) - (np.abs(m) - np.diag(np.abs(np.diag(m))))
    w, v = np.linalg.eig(z)
    k = int(np.argmin(w.real))
    if w[k].real <= tol:
        raise Infeasible(f"comparison matrix is not an M-matrix (min eigenvalue {w[k].real:.3e})")
    d = np.real(v[:, k])
    d = d * np.sign(d.sum())
    if np.all(d > 0):
        d = d * n / d.sum()
        if _valid_scaling(m, d):
            return SddScalings(d)
    d = _scaling_lp(z)
    if d is None or not _valid_scaling(m, d):
        raise Infeasible("no positive diagonal scaling found")
    return SddScalings(d * n / d.sum())


def _scaling_lp(z) -> Optional[np.ndarray]:
    """Maximize t subject to z d >= t, sum(d) = n, d >= 0."""
    n = z.shape[0]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-z, np.ones((n, 1))])
    sol = solve_lp(LpProblem(c, A_eq=np.append(np.ones(n), 0.0)[None, :], b_eq=[float(n)],
                             A_ub=a_ub, b_ub=np.zeros(n),
                             bounds=[(0, None)] * n + [(None, None)]))
    if not sol.optimal or sol.x[-1] <= 0:
        return None
    return sol.x[:n]


@dataclass(frozen=True)
class GershgorinCover:
    index: Optional[int]
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def covered(self) -> bool:
        return self.index is not None


def gershgorin_cover_check(a, partition, lam, tol=None) -> GershgorinCover:
    """Find a block ``i`` whose block Gershgorin set contains `lam`.

    Block ``i`` qualifies when
    ``sigma_min(lam I - A_ii) <= sum_{j != i} ||A_ij||_2 + tol``.
    ``index`` is ``None`` (a violation) when no block qualifies.
    """
    m = check_square(a)
    alpha = default_partition(partition, m.shape[0])
    alpha.check(m)
    if tol is None:
        tol = 1e-8 * max(1.0, spectral_norm(m))
    sl = alpha.slices()
    lhs = np.zeros(alpha.n)
    rhs = np.zeros(alpha.n)
    for i, si in enumerate(sl):
        k = si.stop - si.start
        lhs[i] = min_singular_value(lam * np.eye(k) - m[si, si])
        rhs[i] = sum(spectral_norm(m[si, sj]) for j, sj in enumerate(sl) if j != i)
    hits = np.flatnonzero(lhs <= rhs + tol)
    return GershgorinCover(int(hits[0]) if hits.size else None, lhs, rhs)
