"""Dense two-phase revised simplex.

The solver works on the standard form ``min c'x, Ax = b, x >= 0`` which
:class:`SimplexSolver` builds from an :class:`LpProblem` with general
bounds, equality and ``<=`` rows, equilibrated by power-of-two row and
column scalings. The basis inverse is kept explicitly and
updated in place with rank-one (eta) transformations; it is recomputed
from an LU factorization every ``max(refactor_every, m // 8)`` pivots. Pricing uses
Devex reference weights until 50 consecutive degenerate pivots have been
made, after which Bland's rule is used until the objective moves again.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .exceptions import LpError

__all__ = ["LpStatus", "LpProblem", "LpSolution", "SimplexSolver", "solve_lp"]

INF = math.inf


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    """``min c'x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``lo <= x <= hi``.

    `bounds` is either a single ``(lo, hi)`` pair applied to every variable
    or one pair per variable; ``None`` or infinities mean unbounded.
    The default is ``(0, inf)``.
    """

    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    bounds: object = (0.0, INF)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "eq")
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "ub")
        lo, hi = _bounds(self.bounds, n)
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        self.lo, self.hi = lo, hi
        for name, arr in (("c", self.c), ("A_eq", self.A_eq), ("b_eq", self.b_eq),
                          ("A_ub", self.A_ub), ("b_ub", self.b_ub)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def nvars(self) -> int:
        return self.c.size


def _rows(a, b, n, name):
    if a is None:
        return np.zeros((0, n)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[0] == 0:
        return np.zeros((0, n)), np.zeros(0)
    if a.shape[1] != n or a.shape[0] != b.size:
        raise ValueError(f"A_{name}/b_{name} shapes {a.shape}/{b.shape} inconsistent with {n} vars")
    return a, b


def _bounds(bounds, n):
    if bounds is None:
        return np.full(n, -INF), np.full(n, INF)
    if len(bounds) == 2 and all(b is None or np.isscalar(b) for b in bounds):
        bounds = [tuple(bounds)] * n
    if len(bounds) != n:
        raise ValueError(f"expected {n} bound pairs, got {len(bounds)}")
    lo = np.array([-INF if b[0] is None else float(b[0]) for b in bounds])
    hi = np.array([INF if b[1] is None else float(b[1]) for b in bounds])
    return lo, hi


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    iterations: int
    eq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ub_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pivots: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Standard:
    """Standard-form image of an LpProblem plus the maps needed to undo it."""

    def __init__(self, p: LpProblem, feas_tol: float, equilibrate: bool = True):
        n = p.nvars
        cols = []          # (original var, sign)
        offset = np.zeros(n)
        bound_rows = []    # (internal col, rhs)
        for j in range(n):
            lo, hi = p.lo[j], p.hi[j]
            if np.isfinite(lo) and np.isfinite(hi) and hi - lo <= 0.0:
                offset[j] = lo
                continue
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    bound_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        self.cols = cols
        self.offset = offset
        nstruct = len(cols)
        T = np.zeros((n, nstruct))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        self.T = T
        self.c = p.c @ T
        self.c0 = float(p.c @ offset)

        eq_a = p.A_eq @ T
        eq_b = p.b_eq - p.A_eq @ offset
        ub_a = p.A_ub @ T
        ub_b = p.b_ub - p.A_ub @ offset
        if bound_rows:
            br = np.zeros((len(bound_rows), nstruct))
            for r, (k, _) in enumerate(bound_rows):
                br[r, k] = 1.0
            ub_a = np.vstack([ub_a, br])
            ub_b = np.concatenate([ub_b, [rhs for _, rhs in bound_rows]])

        self.infeasible = False
        scale = feas_tol * max(1.0, float(np.max(np.abs(np.concatenate([eq_b, ub_b, [0.0]])))))
        # drop empty rows, remembering where the rest came from
        keep_eq = np.any(eq_a != 0, axis=1)
        keep_ub = np.any(ub_a != 0, axis=1)
        if np.any(np.abs(eq_b[~keep_eq]) > scale) or np.any(ub_b[~keep_ub] < -scale):
            self.infeasible = True
        self.eq_index = np.flatnonzero(keep_eq)
        self.ub_index = np.flatnonzero(keep_ub)
        eq_a, eq_b = eq_a[keep_eq], eq_b[keep_eq]
        ub_a, ub_b = ub_a[keep_ub], ub_b[keep_ub]
        self.n_orig_ub = p.A_ub.shape[0]
        self.n_orig_eq = p.A_eq.shape[0]

        m_eq, m_ub = eq_a.shape[0], ub_a.shape[0]
        m = m_eq + m_ub
        A = np.zeros((m, nstruct + m_ub))
        A[:m_eq, :nstruct] = eq_a
        A[m_eq:, :nstruct] = ub_a
        A[m_eq:, nstruct:] = np.eye(m_ub)
        b = np.concatenate([eq_b, ub_b])
        # slack columns get 1/r so they remain identity columns
        if equilibrate:
            r, cs = _equilibrate(A[:, :nstruct])
        else:
            r, cs = np.ones(m), np.ones(nstruct)
        colscale = np.concatenate([cs, 1.0 / r[m_eq:]])
        A = A * r[:, None] * colscale[None, :]
        b = b * r
        self.row_scale = r
        self.col_scale = colscale
        sign = np.where(b < 0, -1.0, 1.0)
        self.A = A * sign[:, None]
        self.b = b * sign
        self.sign = sign
        self.m_eq = m_eq
        self.nstruct = nstruct
        self.c_full = np.concatenate([self.c, np.zeros(m_ub)]) * colscale
        # rows whose slack already forms an identity column
        self.slack_basis = {
            m_eq + r: nstruct + r for r in range(m_ub) if sign[m_eq + r] > 0
        }

    def recover(self, z: np.ndarray) -> np.ndarray:
        return self.offset + self.T @ (z[: self.nstruct] * self.col_scale[: self.nstruct])


def _equilibrate(a, passes=8):
    """Power-of-two row and column scalings ``r``, ``s`` bringing the nonzeros
    of ``diag(r) a diag(s)`` toward unit magnitude (geometric-mean passes).

    Powers of two keep the scaling exact in floating point.
    """
    m, n = a.shape
    r, s = np.ones(m), np.ones(n)
    mag = np.abs(a)
    if not mag.any():
        return r, s
    # rounding debris must not steer the scaling
    nz = mag > 1e-12 * mag.max()
    logs = np.where(nz, np.log2(np.where(nz, mag, 1.0)), 0.0)
    lr, ls = np.zeros(m), np.zeros(n)
    with np.errstate(invalid="ignore"):  # all-zero columns give -inf + inf
        lr, ls = _geometric_passes(logs, nz, lr, ls, passes)
    lim = 40.0
    return np.exp2(np.clip(np.round(lr), -lim, lim)), np.exp2(np.clip(np.round(ls), -lim, lim))


def _geometric_passes(logs, nz, lr, ls, passes):
    big, small = np.inf, -np.inf
    for _ in range(passes):
        cur = logs + lr[:, None] + ls[None, :]
        hi = np.where(nz, cur, small).max(axis=1)
        lo = np.where(nz, cur, big).min(axis=1)
        lr -= np.where(np.isfinite(hi), 0.5 * (hi + lo), 0.0)
        cur = logs + lr[:, None] + ls[None, :]
        hi = np.where(nz, cur, small).max(axis=0)
        lo = np.where(nz, cur, big).min(axis=0)
        ls -= np.where(np.isfinite(hi), 0.5 * (hi + lo), 0.0)
    return lr, ls


_dger = sla.get_blas_funcs("ger", dtype=np.float64)
_dgetri = sla.get_lapack_funcs("getri", dtype=np.float64)


def _ger(alpha, x, y, a):
    """``a += alpha * outer(x, y)``, in place for Fortran-ordered `a`."""
    return _dger(alpha, x, y, a=a, overwrite_a=True)


class SimplexSolver:
    """One revised-simplex solve; instances are not reentrant."""

    degenerate_limit = 50
    refactor_every = 50
    pivot_tol = 1e-9

    def __init__(self, feas_tol=1e-8, opt_tol=1e-8, max_iter=None):
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.max_iter = max_iter
        self.iterations = 0
        self.pivots: list[tuple[int, int]] = []

    # -- basis maintenance -------------------------------------------------
    def _reinvert(self, A, basis):
        B = A[:, basis]
        try:
            with warnings.catch_warnings():
                # near-singularity is judged from the pivots below
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu = sla.lu_factor(B, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
            raise LpError(f"basis factorization failed: {exc}") from exc
        diag = np.abs(np.diag(lu[0]))
        if diag.size and diag.min() <= 1e-13 * max(diag.max(), 1.0):
            return None
        inv, info = _dgetri(lu[0], lu[1], lwork=64 * max(1, B.shape[0]))
        if info != 0:  # pragma: no cover
            return None
        return np.asfortranarray(inv)

    def _run(self, A, b, c, basis, n_enter):
        """Iterate from a feasible basis; returns (status, basis, Binv).

        Reduced costs and basic values are updated incrementally between
        refactorizations. Only the first `n_enter` columns may enter (the
        rest are artificials that never return). They are priced with Devex reference
        weights (Bland's rule after a run of degenerate pivots) and the
        leaving row comes from a two-pass Harris ratio test.
        """
        m, ncol = A.shape
        Binv = self._reinvert(A, basis)
        if Binv is None:
            raise LpError("initial basis is singular")
        checkpoint = (list(basis), Binv.copy(order="F"))
        failures = 0
        degenerate = 0
        bland = False
        careful = 0
        banned: set[int] = set()
        since = 0
        limit = self.max_iter or max(10000, 50 * (m + ncol))
        every = max(self.refactor_every, m // 8)
        is_basic = np.zeros(ncol, dtype=bool)
        is_basic[basis] = True
        weights = np.ones(n_enter)
        harris = self.feas_tol
        A_in = np.ascontiguousarray(A[:, :n_enter])
        c_in = c[:n_enter]
        basic_in = is_basic[:n_enter]  # view

        def fresh_values(Binv):
            xb = Binv @ b
            d = c_in - (c[basis] @ Binv) @ A_in
            d[basic_in] = 0.0
            return xb, d

        xb, d = fresh_values(Binv)
        while True:
            if since >= every:
                since = 0
                fresh = self._reinvert(A, basis)
                if fresh is None:
                    # roll back and re-check every pivot for a while
                    failures += 1
                    if failures >= 3:
                        raise LpError("numerically singular basis after 3 refactorizations")
                    basis[:] = checkpoint[0]
                    Binv = checkpoint[1].copy(order="F")
                    is_basic[:] = False
                    is_basic[basis] = True
                    careful = every
                else:
                    Binv = fresh
                    checkpoint = (list(basis), Binv.copy(order="F"))
                xb, d = fresh_values(Binv)
            if self.iterations >= limit:
                raise LpError(f"iteration limit {limit} reached")
            cand = ~basic_in & (d < -self.opt_tol)
            if banned:
                cand[list(banned)] = False
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                # confirm with freshly computed reduced costs before stopping
                if since:
                    since = every
                    continue
                return LpStatus.OPTIMAL, basis, Binv
            if bland:
                q = int(idx[0])
            else:
                q = int(idx[np.argmax(d[idx] ** 2 / weights[idx])])
            u = Binv @ A_in[:, q]
            tol_u = max(self.pivot_tol, 1e-11 * float(np.max(np.abs(u))))
            rows = np.flatnonzero(u > tol_u)
            if rows.size == 0:
                if since:
                    since = every
                    continue
                return LpStatus.UNBOUNDED, basis, Binv
            xr = np.maximum(xb[rows], 0.0)
            if bland:
                ratios = xr / u[rows]
                tmin = ratios.min()
                ties = rows[ratios <= tmin + 1e-12 * max(1.0, tmin)]
                r = int(ties[np.argmin(np.asarray(basis)[ties])])
            else:
                bound = np.min((xr + harris) / u[rows])
                ok = rows[xr / u[rows] <= bound]
                r = int(ok[np.argmax(u[ok])])
            ur = u[r]
            if careful:
                # after a breakdown every pivot is checked against a fresh LU
                trial = list(basis)
                trial[r] = q
                fresh = self._reinvert(A, trial)
                self.iterations += 1
                if fresh is None:
                    banned.add(q)
                    continue
            theta = max(xb[r], 0.0) / ur
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= self.degenerate_limit:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self.pivots.append((q, basis[r]))
            if not careful:
                self.iterations += 1

            row = Binv[r] / ur
            alpha = row @ A_in
            dq = d[q]
            d -= dq * alpha
            if not bland:
                wq = weights[q]
                ratio2 = (alpha / alpha[q]) ** 2 * wq
                np.maximum(weights, ratio2, out=weights)
                if basis[r] < n_enter:
                    weights[basis[r]] = max(wq / alpha[q] ** 2, 1.0)
                if weights.max() > 1e6:
                    weights[:] = 1.0
            is_basic[basis[r]] = False
            is_basic[q] = True
            basis[r] = q
            if careful:
                Binv = fresh
                careful -= 1
                if not careful:
                    banned.clear()
                checkpoint = (list(basis), Binv.copy(order="F"))
                xb, d = fresh_values(Binv)
                since = 0
                continue
            xb -= theta * u
            xb[r] = theta
            # in-place rank-one update of the explicit inverse
            Binv = _ger(-1.0, u, row, Binv)
            Binv[r] = row
            d[q] = 0.0
            since += 1

    # -- driver --------------------------------------------------------------
    def solve(self, p: LpProblem) -> LpSolution:
        try:
            sol = self._solve(p, True)
        except LpError:
            sol = None
        if sol is None or (sol.optimal and not self._feasible(p, sol.x)):
            # scaling can hide a poorly conditioned basis; retry unscaled
            self.iterations = 0
            self.pivots = []
            sol = self._solve(p, False)
            if sol.optimal and not self._feasible(p, sol.x):
                raise LpError("optimal basis violates the constraints beyond tolerance")
        return sol

    def _feasible(self, p: LpProblem, x) -> bool:
        scale = max(1.0, float(np.max(np.abs(np.concatenate([p.b_eq, p.b_ub, [0.0]])))),
                    float(np.max(np.abs(x), initial=0.0)))
        tol = 1e3 * self.feas_tol * scale
        ok = np.all(np.abs(p.A_eq @ x - p.b_eq) <= tol) and np.all(p.A_ub @ x - p.b_ub <= tol)
        return bool(ok and np.all(x >= p.lo - tol) and np.all(x <= p.hi + tol))

    def _solve(self, p: LpProblem, equilibrate: bool) -> LpSolution:
        sf = _Standard(p, self.feas_tol, equilibrate)
        n = p.nvars
        n_eq, n_ub = p.A_eq.shape[0], p.A_ub.shape[0]

        def fail(status):
            return LpSolution(status, np.full(n, np.nan), math.nan, self.iterations,
                              np.zeros(n_eq), np.zeros(n_ub), self.pivots)

        if sf.infeasible:
            return fail(LpStatus.INFEASIBLE)
        A, b = sf.A, sf.b
        m, ncol = A.shape
        if m == 0:
            # only bounds: each variable sits at the cheaper finite end
            if np.any(sf.c_full < -self.opt_tol):
                return fail(LpStatus.UNBOUNDED)
            x = sf.recover(np.zeros(ncol))
            return LpSolution(LpStatus.OPTIMAL, x, float(p.c @ x), 0,
                              np.zeros(n_eq), np.zeros(n_ub), self.pivots)

        # phase 1 with artificials on rows lacking a slack column
        art_rows = [i for i in range(m) if i not in sf.slack_basis]
        n_art = len(art_rows)
        A1 = np.hstack([A, np.zeros((m, n_art))])
        for k, i in enumerate(art_rows):
            A1[i, ncol + k] = 1.0
        basis = [sf.slack_basis.get(i, -1) for i in range(m)]
        for k, i in enumerate(art_rows):
            basis[i] = ncol + k
        bscale = max(1.0, float(np.max(np.abs(b))))
        if n_art:
            c1 = np.concatenate([np.zeros(ncol), np.ones(n_art)])
            status, basis, Binv = self._run(A1, b, c1, basis, ncol)
            if status is LpStatus.UNBOUNDED:
                raise LpError("phase 1 reported an unbounded ray")
            fresh = self._reinvert(A1, basis)
            if fresh is not None:
                Binv = fresh
            xb = Binv @ b
            infeas = float(sum(xb[i] for i in range(m) if basis[i] >= ncol))
            if infeas > self.feas_tol * bscale:
                return fail(LpStatus.INFEASIBLE)
            # drive zero-level artificials out of the basis
            keep_rows = list(range(m))
            for i in range(m):
                if basis[i] < ncol:
                    continue
                row = Binv[i] @ A1[:, :ncol]
                row[[j for j in basis if j < ncol]] = 0.0
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > self.pivot_tol:
                    u = Binv @ A1[:, j]
                    r_ = Binv[i] / u[i]
                    Binv -= np.outer(u, r_)
                    Binv[i] = r_
                    basis[i] = j
                    self.pivots.append((j, ncol))
                else:
                    keep_rows.remove(i)
            if len(keep_rows) < m:
                A, b = A[keep_rows], b[keep_rows]
                basis = [basis[i] for i in keep_rows]
                row_map = np.array(keep_rows)
            else:
                row_map = np.arange(m)
        else:
            row_map = np.arange(m)

        c2 = sf.c_full
        status, basis, Binv = self._run(A, b, c2, basis, ncol)
        if status is LpStatus.UNBOUNDED:
            return fail(LpStatus.UNBOUNDED)
        Bfresh = self._reinvert(A, basis)
        if Bfresh is not None:
            Binv = Bfresh
        xb = Binv @ b
        z = np.zeros(ncol)
        z[basis] = np.maximum(xb, 0.0)
        x = sf.recover(z)
        # duals on internal rows, mapped back through sign flips and row removal
        y_int = np.zeros(sf.A.shape[0])
        y_int[row_map] = c2[basis] @ Binv
        y_int *= sf.sign * sf.row_scale
        eq_duals = np.zeros(n_eq)
        eq_duals[sf.eq_index] = y_int[: sf.m_eq]
        ub_all = np.zeros(len(sf.ub_index))
        ub_all[:] = y_int[sf.m_eq:]
        ub_duals = np.zeros(n_ub)
        sel = sf.ub_index < n_ub
        ub_duals[sf.ub_index[sel]] = ub_all[sel]
        return LpSolution(LpStatus.OPTIMAL, x, float(p.c @ x), self.iterations,
                          eq_duals, ub_duals, self.pivots)


def solve_lp(p: LpProblem, feas_tol=1e-8, opt_tol=1e-8, max_iter=None) -> LpSolution:
    """Solve `p` with a fresh :class:`SimplexSolver`.

    Optimal solutions satisfy every constraint within `feas_tol` (relative
    to the right-hand side scale) and have reduced costs ``>= -opt_tol``.
    ``eq_duals``/``ub_duals`` are the row multipliers ``y`` of the
    Lagrangian ``c'x - y'(Ax - b)``, so ``ub_duals <= 0``.
    """
    return SimplexSolver(feas_tol, opt_tol, max_iter).solve(p)


def dual_objective(p: LpProblem, sol: LpSolution) -> float:
    """Lagrangian dual value implied by the multipliers of `sol`.

    Box bounds are dualized implicitly: each reduced cost is paired with
    the bound that minimizes its contribution.
    """
    r = p.c - p.A_eq.T @ sol.eq_duals - p.A_ub.T @ sol.ub_duals
    val = float(p.b_eq @ sol.eq_duals + p.b_ub @ sol.ub_duals)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(p.c), initial=0.0)))
    for rj, lo, hi in zip(r, p.lo, p.hi):
        if abs(rj) <= tol:
            continue
        if rj > 0:
            val += rj * lo if np.isfinite(lo) else -INF
        elif rj < 0:
            val += rj * hi if np.isfinite(hi) else -INF
    return val
