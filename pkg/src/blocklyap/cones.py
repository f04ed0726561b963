"""Linear-programming encodings over the DD+ cone and its relatives.

The central object is an :class:`AffineSym`, a symmetric matrix that is an
affine function of LP variables (typically the Lyapunov slack
``-(A X + X A' + Q)`` of an alpha-diagonal ``X``). Constraint builders
append variables and rows to an :class:`LpBuilder`:

* :func:`ddp_constraints` keeps the slack in the closed DD+ cone with a
  margin, using absolute-value bounds ``c_ij`` on the off-diagonal
  entries;
* :func:`kofl_constraints` keeps the slack in ``{L' Q L : Q in DD+}``,
  with ``Q`` written as a nonnegative combination of the extreme rays
  ``e_i e_i'`` and ``(e_i +- e_j)(e_i +- e_j)'``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .certificate import Certificate, Method, make_certificate, verify_certificate
from .classes import comparison_matrix, is_h_plus, sdd_scalings
from .core import (
    Partition,
    check_square,
    check_symmetric,
    default_partition,
    spectral_abscissa,
    symmetrize,
)
from .exceptions import (
    ConsistencyError,
    DimensionError,
    Infeasible,
    NotHPlus,
    NotHurwitz,
    ShapeError,
)
from .lp import LpProblem, LpSolution, LpStatus, solve_lp
from .scaling import perron_scalings

__all__ = [
    "AffineSym",
    "LpBuilder",
    "ConeSpec",
    "TraceMinResult",
    "DualGramianResult",
    "FactorWidth2Decomposition",
    "lyapunov_slack",
    "ddp_constraints",
    "kofl_constraints",
    "tracemin_ddp",
    "tracemin_ddp_scaled",
    "tracemin_kofl",
    "dual_gramian_lp",
    "dual_cone_constraints",
    "in_dual_ddp",
    "factor_width2",
    "default_eta",
]


def default_eta(a) -> float:
    return 1e-6 * max(1.0, float(np.max(np.abs(a))))


class LpBuilder:
    """Accumulates variables and sparse rows; assembles a dense LpProblem."""

    def __init__(self):
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.cost: list[float] = []
        self.ub: list[tuple[np.ndarray, np.ndarray, float]] = []
        self.eq: list[tuple[np.ndarray, np.ndarray, float]] = []

    @property
    def nvars(self) -> int:
        return len(self.cost)

    def add_vars(self, count, lo=0.0, hi=None, cost=0.0) -> np.ndarray:
        start = self.nvars
        self.lo.extend([-np.inf if lo is None else lo] * count)
        self.hi.extend([np.inf if hi is None else hi] * count)
        if np.isscalar(cost):
            self.cost.extend([float(cost)] * count)
        else:
            self.cost.extend(float(c) for c in cost)
        return np.arange(start, start + count)

    def add_ub(self, idx, vals, rhs):
        self.ub.append((np.asarray(idx, dtype=int), np.asarray(vals, dtype=float), float(rhs)))

    def add_eq(self, idx, vals, rhs):
        self.eq.append((np.asarray(idx, dtype=int), np.asarray(vals, dtype=float), float(rhs)))

    @staticmethod
    def _dense(rows, n):
        a = np.zeros((len(rows), n))
        b = np.zeros(len(rows))
        for r, (idx, vals, rhs) in enumerate(rows):
            np.add.at(a[r], idx, vals)
            b[r] = rhs
        return a, b

    def problem(self) -> LpProblem:
        n = self.nvars
        a_ub, b_ub = self._dense(self.ub, n)
        a_eq, b_eq = self._dense(self.eq, n)
        return LpProblem(np.array(self.cost), a_eq if len(b_eq) else None, b_eq if len(b_eq) else None,
                         a_ub if len(b_ub) else None, b_ub if len(b_ub) else None,
                         bounds=list(zip(self.lo, self.hi)))

    def solve(self, **kw) -> LpSolution:
        return solve_lp(self.problem(), **kw)


@dataclass
class AffineSym:
    """``S(z) = const + sum_k z[var[k]] * coef[:, :, k]``, symmetric."""

    const: np.ndarray
    coef: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        tol = 1e-12 * max(1.0, float(np.max(np.abs(self.const))),
                          float(np.max(np.abs(self.coef), initial=0.0)))
        if np.max(np.abs(self.const - self.const.T)) > tol or (
            self.coef.size and np.max(np.abs(self.coef - self.coef.transpose(1, 0, 2))) > tol
        ):
            raise ShapeError("affine matrix expression is not symmetric")

    @property
    def n(self) -> int:
        return self.const.shape[0]

    @classmethod
    def constant(cls, s) -> "AffineSym":
        s = check_symmetric(s)
        return cls(s, np.zeros(s.shape + (0,)), np.zeros(0, dtype=int))

    def entry(self, i, j) -> tuple[np.ndarray, np.ndarray, float]:
        """(var indices, coefficients, constant) of entry (i, j)."""
        vals = self.coef[i, j]
        nz = np.flatnonzero(vals)
        return self.var[nz], vals[nz], float(self.const[i, j])

    def is_zero(self, i, j) -> bool:
        return self.const[i, j] == 0 and not np.any(self.coef[i, j])

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.const + self.coef @ x[self.var]


def _alpha_basis(partition: Partition):
    """Index pairs (p, q), p <= q, parametrizing a symmetric alpha-diagonal X."""
    pairs = []
    for sl in partition.slices():
        for p in range(sl.start, sl.stop):
            for q in range(p, sl.stop):
                pairs.append((p, q))
    return pairs


def lyapunov_slack(builder: LpBuilder, a, partition, q=None, weights=None):
    """Add alpha-diagonal X variables and return ``(pairs, idx, S)``.

    ``S = -(A X + X A' + Q)`` as an :class:`AffineSym`. The objective
    coefficient of each diagonal entry ``x_pp`` is ``weights[p]``
    (default 1, i.e. ``trace(X)``).
    """
    n = a.shape[0]
    pairs = _alpha_basis(partition)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    cost = [w[p] if p == r else 0.0 for p, r in pairs]
    idx = builder.add_vars(len(pairs), lo=None, hi=None, cost=cost)
    coef = np.zeros((n, n, len(pairs)))
    for k, (p, r) in enumerate(pairs):
        e = np.zeros((n, n))
        e[p, r] = 1.0
        e[r, p] = 1.0
        # A E + E A^T only touches columns/rows p and r
        ae = np.zeros((n, n))
        ae[:, r] += a[:, p]
        if p != r:
            ae[:, p] += a[:, r]
        coef[:, :, k] = -(ae + ae.T)
    const = -(np.zeros((n, n)) if q is None else q)
    return pairs, idx, AffineSym(symmetrize(const), coef, idx)


def ddp_constraints(builder: LpBuilder, s: AffineSym, eta=0.0) -> dict:
    """Constrain ``S`` to the closed DD+ cone with diagonal surplus ``>= eta``.

    For each off-diagonal pair that is not identically zero a bound
    variable ``c_ij >= |S_ij|`` is introduced; every row then satisfies
    ``S_ii >= sum_j c_ij + eta``.
    """
    n = s.n
    cvars = {}
    for i, j in itertools.combinations(range(n), 2):
        if s.is_zero(i, j):
            continue
        (c,) = builder.add_vars(1, lo=0.0)
        cvars[i, j] = c
        idx, vals, k = s.entry(i, j)
        builder.add_ub(np.append(idx, c), np.append(vals, -1.0), -k)
        builder.add_ub(np.append(idx, c), np.append(-vals, -1.0), k)
    for i in range(n):
        idx, vals, k = s.entry(i, i)
        cs = [c for (p, q), c in cvars.items() if i in (p, q)]
        builder.add_ub(np.concatenate([idx, cs]), np.concatenate([-vals, np.ones(len(cs))]), k - eta)
    return cvars


@dataclass
class ConeSpec:
    """DDP (DD+), HPLUS (scaled DD+) or KOFL (``L' DD+ L``)."""

    kind: str
    basis: Optional[np.ndarray] = None
    margin: float = 0.0

    def __post_init__(self):
        if self.kind not in ("DDP", "HPLUS", "KOFL"):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if (self.kind == "KOFL") != (self.basis is not None):
            raise ValueError("a basis L is required for (and only for) KOFL")
        if self.basis is not None:
            self.basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
            if np.linalg.matrix_rank(self.basis) < self.basis.shape[0]:
                raise DimensionError("KOFL basis L must have full row rank")


@dataclass
class KoflVars:
    d: np.ndarray
    pairs: list
    plus: np.ndarray
    minus: np.ndarray

    def q_matrix(self, x) -> np.ndarray:
        r = self.d.size
        q = np.diag(x[self.d])
        for k, (i, j) in enumerate(self.pairs):
            p, m = x[self.plus[k]], x[self.minus[k]]
            q[i, i] += p + m
            q[j, j] += p + m
            q[i, j] += p - m
            q[j, i] += p - m
        return q[:r, :r]


def kofl_constraints(builder: LpBuilder, s: AffineSym, basis, eta=0.0):
    """Constrain ``S = L' Q L`` with symmetric ``Q`` in closed DD+ (surplus >= eta).

    With ``L = I`` this is exactly :func:`ddp_constraints`.
    """
    lmat = np.atleast_2d(np.asarray(basis, dtype=float))
    r, n = lmat.shape
    if n != s.n:
        raise DimensionError(f"basis has {n} columns, expression is {s.n}x{s.n}")
    if np.linalg.matrix_rank(lmat) < r:
        raise DimensionError("basis L must have full row rank")
    if r == n and np.array_equal(lmat, np.eye(n)):
        return ddp_constraints(builder, s, eta)
    pairs = list(itertools.combinations(range(r), 2))
    # products of round-off entries of L are noise, not structure
    noise = 64 * np.finfo(float).eps * float(np.max(np.abs(lmat))) ** 2
    d = builder.add_vars(r, lo=eta)
    plus = builder.add_vars(len(pairs), lo=0.0)
    minus = builder.add_vars(len(pairs), lo=0.0)
    if pairs:
        ii, jj = np.array(pairs).T
        up = lmat[ii] + lmat[jj]
        um = lmat[ii] - lmat[jj]
    for a, b in itertools.combinations_with_replacement(range(n), 2):
        idx, vals, k = s.entry(a, b)
        g_d = lmat[:, a] * lmat[:, b]
        cols = [idx, d]
        coef = [vals, -g_d]
        if pairs:
            cols += [plus, minus]
            coef += [-(up[:, a] * up[:, b]), -(um[:, a] * um[:, b])]
        cols = np.concatenate(cols)
        coef = np.concatenate(coef)
        keep = coef != 0
        keep[idx.size:] &= np.abs(coef[idx.size:]) > noise
        builder.add_eq(cols[keep], coef[keep], -k)
    return KoflVars(d, pairs, plus, minus)


@dataclass
class TraceMinResult:
    status: LpStatus
    objective: float
    certificate: Optional[Certificate]
    slack: Optional[np.ndarray] = None
    Q: Optional[np.ndarray] = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)


def _prepare(a, partition, q):
    a = check_square(a, "A")
    n = a.shape[0]
    alpha = default_partition(partition, n)
    alpha.check(a)
    if spectral_abscissa(a) >= 0:
        raise NotHurwitz("A is not Hurwitz")
    qm = np.eye(n) if q is None else check_symmetric(np.asarray(q, dtype=float), "Q")
    if qm.shape != a.shape:
        raise DimensionError(f"Q shape {qm.shape} does not match A {a.shape}")
    if np.linalg.eigvalsh(qm)[0] < -1e-9 * max(1.0, float(np.max(np.abs(qm)))):
        raise ShapeError("Q must be positive semidefinite")
    return a, alpha, qm


def tracemin_kofl(a, partition=None, q=None, eta=None, basis=None, weights=None,
                  normalize=None) -> TraceMinResult:
    """``min sum_p weights_p x_pp`` with ``-(A X + X A' + Q)`` in K(L).

    ``basis=None`` means ``L = I`` (plain DD+). When ``Q == 0`` the
    weighted trace is pinned to ``n`` (override with `normalize`) so the
    homogeneous problem does not collapse to ``X = 0``.
    """
    a, alpha, qm = _prepare(a, partition, q)
    n = a.shape[0]
    if eta is None:
        eta = default_eta(a)
    b = LpBuilder()
    pairs, idx, s = lyapunov_slack(b, a, alpha, qm, weights)
    if normalize is None and not np.any(qm):
        normalize = float(n)
    if normalize is not None:
        wts = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        diag = [(k, wts[p]) for k, (p, r) in zip(idx, pairs) if p == r]
        b.add_eq([k for k, _ in diag], [v for _, v in diag], normalize)
    if basis is None:
        basis = np.eye(n)
    kv = kofl_constraints(b, s, basis, eta)
    sol = b.solve()
    if not sol.optimal:
        return TraceMinResult(sol.status, np.nan, None, iterations=sol.iterations)
    x = np.zeros((n, n))
    for k, (p, r) in zip(idx, pairs):
        x[p, r] = x[r, p] = sol.x[k]
    cert = make_certificate(a, x, alpha, Method.LP)
    slack = symmetrize(s.evaluate(sol.x))
    qmat = kv.q_matrix(sol.x) if isinstance(kv, KoflVars) else slack
    return TraceMinResult(LpStatus.OPTIMAL, sol.objective, cert, slack, qmat, sol.iterations)


def tracemin_ddp(a, partition=None, q=None, eta=None) -> TraceMinResult:
    """Minimum-trace alpha-diagonal X with ``-(A X + X A' + Q)`` in closed DD+.

    Infeasibility is a legitimate outcome (DD+ is an inner approximation
    of the PSD cone) and is reported through ``status``.

    Raises
    ------
    NotHurwitz
        If `a` is not Hurwitz.
    """
    return tracemin_kofl(a, partition, q, eta)


def tracemin_ddp_scaled(a, partition=None, q=None, eta=None, w=None) -> TraceMinResult:
    """:func:`tracemin_ddp` in the coordinates ``P_w A P_w^{-1}``.

    `w` defaults to the left Perron scaling of :func:`perron_scalings`.
    The objective is the trace in the original coordinates and the
    returned certificate is for `a` itself.
    """
    a, alpha, qm = _prepare(a, partition, q)
    n = a.shape[0]
    if w is None:
        w = perron_scalings(a).w
    w = np.asarray(w, dtype=float)
    if w.shape != (n,) or np.any(w <= 0):
        raise DimensionError("scaling w must be a positive vector of length n")
    at = (w[:, None] * a) / w[None, :]
    qt = w[:, None] * qm * w[None, :]
    if eta is None:
        eta = default_eta(at)
    res = tracemin_kofl(at, alpha, qt, eta, weights=1.0 / w**2)
    if res.status is not LpStatus.OPTIMAL:
        return res
    xt = res.certificate.X
    x = xt / np.outer(w, w)
    cert = make_certificate(a, x, alpha, Method.SCALED_LP, w=w)
    report = verify_certificate(a, cert)
    if np.any(qm) and np.linalg.eigvalsh(qm)[0] > 0 and not report.valid:
        raise ConsistencyError("; ".join(report.failures))
    return TraceMinResult(LpStatus.OPTIMAL, res.objective, cert,
                          res.slack / np.outer(w, w), res.Q, res.iterations, {"w": w})


@dataclass
class DualGramianResult:
    objective: float
    status: LpStatus
    scaled: bool
    Y: Optional[np.ndarray] = None
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"objective": self.objective, "status": self.status.value, "scaled": self.scaled}


def _pattern(a, extra=None):
    n = a.shape[0]
    nz = (a != 0) | (a.T != 0)
    if extra is not None:
        nz |= extra != 0
    return [(i, j) for i, j in itertools.combinations(range(n), 2) if nz[i, j]]


def dual_cone_constraints(builder: LpBuilder, yvars: dict):
    """``Y`` in the dual of symmetric DD+: ``v' Y v >= 0`` for ``v`` with at
    most two nonzero entries equal to +-1.

    `yvars` maps ``(i, j)``, ``i <= j``, to LP variable indices; the
    diagonal entries are expected to carry a lower bound of zero already.
    Pairs absent from `yvars` are fixed at zero, for which the pair
    constraints reduce to the diagonal bounds.
    """
    for (i, j), v in yvars.items():
        if i == j:
            continue
        di, dj = yvars[i, i], yvars[j, j]
        builder.add_ub([di, dj, v], [-1.0, -1.0, -2.0], 0.0)
        builder.add_ub([di, dj, v], [-1.0, -1.0, 2.0], 0.0)


def in_dual_ddp(y, tol=1e-12) -> bool:
    y = check_symmetric(y)
    d = np.diag(y)
    if np.any(d < -tol):
        return False
    s = d[:, None] + d[None, :]
    return bool(np.all(s - 2 * np.abs(y) >= -tol * max(1.0, float(np.max(np.abs(y))))))


def dual_gramian_lp(a, b, scaled=False, w=None) -> DualGramianResult:
    """LP relaxation of the dual minimum-trace diagonal Gramian program.

    Solves ``max trace(B B' Y)`` subject to ``diag(Y A + A' Y + W) = 0``
    and ``Y`` in the dual cone of symmetric DD+ matrices, where ``W`` is
    the identity. With ``scaled=True`` the program is posed for
    ``P_w A P_w^{-1}``, ``P_w B`` and ``W = P_w^{-2}``, so the optimum is
    still the trace of the Gramian in the original coordinates. By LP
    duality the optimum equals that of the primal DD+ trace minimization
    with ``Q = B B'`` and zero margin.
    """
    a = check_square(a, "A")
    n = a.shape[0]
    bm = np.asarray(b, dtype=float).reshape(n, -1)
    if spectral_abscissa(a) >= 0:
        raise NotHurwitz("A is not Hurwitz")
    if scaled:
        if w is None:
            w = perron_scalings(a).w
        w = np.asarray(w, dtype=float)
        a = (w[:, None] * a) / w[None, :]
        bm = w[:, None] * bm
        weight = 1.0 / w**2
    else:
        weight = np.ones(n)
    bbt = bm @ bm.T
    builder = LpBuilder()
    yvars = {}
    for i in range(n):
        (yvars[i, i],) = builder.add_vars(1, lo=0.0, cost=-bbt[i, i])
    for i, j in _pattern(a, bbt):
        (yvars[i, j],) = builder.add_vars(1, lo=None, cost=-2.0 * bbt[i, j])
    dual_cone_constraints(builder, yvars)

    def yv(i, j):
        return yvars.get((min(i, j), max(i, j)))

    for i in range(n):
        idx, vals = [], []
        for k in range(n):
            if a[k, i] != 0 and yv(i, k) is not None:
                idx.append(yv(i, k))
                vals.append(2.0 * a[k, i])
        builder.add_eq(idx, vals, -weight[i])
    sol = builder.solve()
    if not sol.optimal:
        return DualGramianResult(np.nan, sol.status, scaled, iterations=sol.iterations)
    y = np.zeros((n, n))
    for (i, j), v in yvars.items():
        y[i, j] = y[j, i] = sol.x[v]
    return DualGramianResult(float(np.sum(bbt * y)), LpStatus.OPTIMAL, scaled, y, sol.iterations)


@dataclass
class FactorWidth2Decomposition:
    """Sum of PSD matrices supported on at most two coordinates.

    ``terms`` holds ``((i, j), X_ij)`` with a 2x2 ``X_ij`` for ``i < j``
    and ``((i, i), [[s]])`` for diagonal remainders.
    """

    n: int
    terms: list

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for (i, j), x in self.terms:
            if i == j:
                out[i, i] += x[0, 0]
            else:
                ix = np.ix_([i, j], [i, j])
                out[ix] += x
        return out


def factor_width2(s, tol=None) -> FactorWidth2Decomposition:
    """Decompose a symmetric H+ matrix into 2x2 PSD pieces.

    With scalings ``d`` such that ``diag(d)^{-1} M(S) diag(d)`` is
    diagonally dominant, each off-diagonal entry ``s_ij`` becomes the rank-one
    term ``[[|s_ij| d_j/d_i, s_ij], [s_ij, |s_ij| d_i/d_j]]`` and each
    row's remaining surplus goes on the diagonal.
    """
    s = check_symmetric(s)
    n = s.shape[0]
    if not is_h_plus(s):
        raise NotHPlus("matrix is not symmetric H+ with positive diagonal")
    m = comparison_matrix(s).entries
    try:
        d = sdd_scalings(m).d
    except Infeasible:
        # singular comparison matrix: use its Perron vector (M d = 0)
        wv, vv = np.linalg.eigh(m)
        d = np.abs(vv[:, 0])
        if np.any(d <= 0):
            raise NotHPlus("singular comparison matrix without a positive null vector")
    if tol is None:
        tol = 1e-9 * max(1.0, float(np.max(np.abs(s))))
    terms = []
    surplus = np.diag(s).copy()
    for i, j in itertools.combinations(range(n), 2):
        v = s[i, j]
        if v == 0:
            continue
        a_ii = abs(v) * d[j] / d[i]
        a_jj = abs(v) * d[i] / d[j]
        terms.append(((i, j), np.array([[a_ii, v], [v, a_jj]])))
        surplus[i] -= a_ii
        surplus[j] -= a_jj
    if np.any(surplus < -tol):
        raise ConsistencyError(f"negative diagonal surplus {surplus.min():.3e}")
    for i in range(n):
        terms.append(((i, i), np.array([[max(surplus[i], 0.0)]])))
    return FactorWidth2Decomposition(n, terms)
