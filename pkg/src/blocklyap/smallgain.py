"""Two-block constructions from a small-gain argument.

For ``A = [[A11, A12], [A21, A22]]`` with Hurwitz diagonal blocks, let

    K1(s) = -(sI - A11)^{-1} A12,   K2(s) = (sI - A22)^{-1} A21.

If ``||K1|| ||K2|| < 1`` (H-infinity norms), pick ``gamma`` with
``||K2|| < gamma < 1/||K1||``. The stabilizing solutions of

    A11 X1 + X1 A11' + gamma^2 X1 X1 + A12 A12' = 0
    A22 Y2 + Y2 A22' + mu^-2  Y2 Y2 + A21 A21' = 0,   mu slightly below gamma,

give the block-diagonal certificate ``X = diag(X1, Y2 / gamma^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .certificate import Certificate, Method, make_certificate
from .classes import comparison_matrix, is_h_plus, sdd_scalings
from .core import (
    Partition,
    as_matrix,
    check_square,
    check_symmetric,
    default_partition,
    spectral_abscissa,
    spectral_norm,
    symmetrize,
)
from .exceptions import (
    ConsistencyError,
    DimensionError,
    FactorizationError,
    ImaginaryAxisEigenvalues,
    Infeasible,
    NotHPlus,
    NotHurwitz,
    NotHurwitzBlock,
    SmallGainViolated,
)

__all__ = [
    "StateSpace",
    "RiccatiSolution",
    "StabilityVerdict",
    "hinf_norm",
    "riccati_stabilizing",
    "blockdiag_smallgain",
    "alpha_h_stability_check",
    "construct_theorem8",
    "coupling_gains",
]

COUPLING_EPS = 1e-12
RESOLVENT_TOL = 1e-7


@dataclass
class StateSpace:
    """``G(s) = C (sI - A)^{-1} B + D``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = check_square(self.A, "A")
        n = self.A.shape[0]
        self.B = as_matrix(self.B, "B")
        self.C = as_matrix(self.C, "C")
        if self.C.shape[1] != n and self.C.shape[0] == n and self.C.shape[1] == 1:
            self.C = self.C.T
        if self.B.shape[0] != n or self.C.shape[1] != n:
            raise DimensionError(
                f"inconsistent dimensions A {self.A.shape}, B {self.B.shape}, C {self.C.shape}"
            )
        if self.D is None:
            self.D = np.zeros((self.C.shape[0], self.B.shape[1]))
        self.D = as_matrix(self.D, "D")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise DimensionError(f"D must be {(self.C.shape[0], self.B.shape[1])}, got {self.D.shape}")

    def freqresp(self, omega) -> np.ndarray:
        """``G(j omega)``."""
        n = self.A.shape[0]
        return self.C @ np.linalg.solve(1j * omega * np.eye(n) - self.A, self.B) + self.D

    def gain(self, omega) -> float:
        return float(np.linalg.svd(self.freqresp(omega), compute_uv=False)[0])


def _imag_axis_freqs(h, rtol=1e-7):
    """Nonnegative frequencies of the eigenvalues of `h` on the imaginary axis."""
    lam = np.linalg.eigvals(h)
    scale = max(1.0, float(np.max(np.abs(lam))))
    on = np.abs(lam.real) <= rtol * scale
    return np.unique(np.abs(lam[on].imag))


def _hamiltonian(sys: StateSpace, gamma):
    a, b, c, d = sys.A, sys.B, sys.C, sys.D
    m, p = b.shape[1], c.shape[0]
    r = gamma**2 * np.eye(m) - d.T @ d
    ri = np.linalg.inv(r)
    ae = a + b @ ri @ d.T @ c
    top = np.hstack([ae, b @ ri @ b.T])
    bot = np.hstack([-c.T @ (np.eye(p) + d @ ri @ d.T) @ c, -ae.T])
    return np.vstack([top, bot])


def hinf_norm(sys: StateSpace, tol=1e-9, max_doublings=200) -> float:
    """H-infinity norm by bisection on the Hamiltonian imaginary-axis test.

    A level ``gamma`` above ``sigma_max(D)`` is an upper bound exactly when
    the bounded-real Hamiltonian has no imaginary eigenvalues; any
    imaginary eigenvalue ``j w`` found along the way is evaluated to raise
    the lower bound.

    Raises
    ------
    NotHurwitz
        If ``sys.A`` is not Hurwitz.
    ConsistencyError
        If no upper bound is found while doubling.
    """
    if spectral_abscissa(sys.A) >= 0:
        raise NotHurwitz("system matrix is not Hurwitz")
    poles = np.abs(np.linalg.eigvals(sys.A).imag)
    lo = max([float(np.linalg.norm(sys.D, 2)) if sys.D.size else 0.0, sys.gain(0.0)]
             + [sys.gain(w) for w in poles])
    if lo == 0.0:
        return 0.0

    def crossings(g):
        """Largest gain at the frequencies where level g is attained, or None."""
        freqs = _imag_axis_freqs(_hamiltonian(sys, g))
        if freqs.size == 0:
            return None
        pts = list(freqs)
        pts += list(0.5 * (freqs[1:] + freqs[:-1]))
        best = max(sys.gain(w) for w in pts)
        # spurious near-axis eigenvalue: the level is not attained there
        return best if best >= g * (1 - 1e-9) else None

    hi = 2.0 * lo
    for _ in range(max_doublings):
        found = crossings(hi)
        if found is None:
            break
        lo = max(lo, found)
        hi = 2.0 * max(hi, lo)
    else:
        raise ConsistencyError("bisection bracket: no upper bound found")
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        found = crossings(mid)
        if found is None:
            hi = mid
        else:
            lo = max(lo, found)
    return 0.5 * (lo + hi)


@dataclass
class RiccatiSolution:
    X: np.ndarray
    residual: float
    closed_loop_abscissa: float
    degenerate_kernel: bool = False
    refinements: int = 0


def _riccati_residual(a, g, w, x):
    return a @ x + x @ a.T + g * x @ x + w


def riccati_stabilizing(a, g, w, max_refine=3) -> RiccatiSolution:
    """Stabilizing solution of ``A X + X A' + g X X + W = 0``.

    The stable invariant subspace ``[U1; U2]`` of ``[[A', g I], [-W, -A]]``
    from an ordered real Schur form gives ``X = U2 U1^{-1}``; ``A + g X`` is
    then Hurwitz. A few Newton steps polish the residual if needed.

    Raises
    ------
    ImaginaryAxisEigenvalues
        If the Hamiltonian has eigenvalues on the imaginary axis (no
        stabilizing solution).
    FactorizationError
        If the subspace basis ``U1`` is singular.
    """
    a = check_square(a, "A")
    n = a.shape[0]
    w = check_symmetric(w, "W")
    if w.shape != a.shape:
        raise DimensionError(f"W shape {w.shape} does not match A {a.shape}")
    if not g > 0:
        raise ValueError("quadratic coefficient g must be positive")
    if spectral_abscissa(a) >= 0:
        raise NotHurwitz("A is not Hurwitz")
    if np.linalg.eigvalsh(w)[0] < -1e-9 * max(1.0, float(np.max(np.abs(w)))):
        raise ValueError("W must be positive semidefinite")
    h = np.block([[a.T, g * np.eye(n)], [-w, -a]])
    if _imag_axis_freqs(h, rtol=1e-9).size:
        raise ImaginaryAxisEigenvalues("Hamiltonian has eigenvalues on the imaginary axis")
    t, z, sdim = sla.schur(h, output="real", sort="lhp")
    if sdim != n:
        raise ImaginaryAxisEigenvalues(f"stable subspace has dimension {sdim}, expected {n}")
    u1, u2 = z[:n, :n], z[n:, :n]
    if np.linalg.cond(u1) > 1e12:
        raise FactorizationError("stable subspace is not a graph (U1 singular)")
    x = symmetrize(np.linalg.solve(u1.T, u2.T).T)

    scale = np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(w)
    res = _riccati_residual(a, g, w, x)
    steps = 0
    while np.linalg.norm(res) > 1e-8 * scale and steps < max_refine:
        acl = a + g * x
        x = symmetrize(x + sla.solve_continuous_lyapunov(acl, -res))
        res = _riccati_residual(a, g, w, x)
        scale = np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(w)
        steps += 1
    resid = float(np.linalg.norm(res))
    if resid > 1e-8 * max(scale, np.finfo(float).tiny):
        raise ConsistencyError(f"Riccati residual {resid:.3e} above tolerance")
    acl_abs = spectral_abscissa(a + g * x)
    if acl_abs >= 0:
        raise ConsistencyError("computed Riccati solution is not stabilizing")
    xmax = max(1.0, float(np.max(np.abs(x))))
    degenerate = bool(np.linalg.eigvalsh(x)[0] <= 1e-12 * xmax)
    return RiccatiSolution(x, resid, acl_abs, degenerate, steps)


def _two_blocks(a, partition):
    a = check_square(a, "A")
    alpha = default_partition(partition, a.shape[0])
    alpha.check(a)
    if alpha.n != 2:
        raise DimensionError(f"a 2-block partition is required, got {alpha.n} blocks")
    s1, s2 = alpha.slices()
    return a, alpha, a[s1, s1], a[s1, s2], a[s2, s1], a[s2, s2]


def coupling_gains(a, partition) -> tuple[float, float]:
    """``(||K1||, ||K2||)`` for a 2-block partition."""
    _, _, a11, a12, a21, a22 = _two_blocks(a, partition)
    k1 = hinf_norm(StateSpace(a11, a12, np.eye(a11.shape[0])))
    k2 = hinf_norm(StateSpace(a22, a21, np.eye(a22.shape[0])))
    return k1, k2


def _decoupled(a, alpha, a11, a12, a21, a22) -> Certificate:
    x1 = symmetrize(sla.solve_continuous_lyapunov(a11, -np.eye(a11.shape[0])))
    x2 = symmetrize(sla.solve_continuous_lyapunov(a22, -np.eye(a22.shape[0])))
    # with one coupling absent, inflate the downstream block until the
    # Schur complement of the Lyapunov slack is negative definite
    s1, s2 = 1.0, 1.0
    if spectral_norm(a12) <= COUPLING_EPS and spectral_norm(a21) > COUPLING_EPS:
        s2 = max(1.0, 2.0 * spectral_norm(a21 @ x1) ** 2)
    elif spectral_norm(a21) <= COUPLING_EPS and spectral_norm(a12) > COUPLING_EPS:
        s1 = max(1.0, 2.0 * spectral_norm(a12 @ x2) ** 2)
    x = sla.block_diag(s1 * x1, s2 * x2)
    return make_certificate(a, x, alpha, Method.RICCATI, route="decoupled", scale=[s1, s2])


def _riccati_pd(a, g, w):
    """Stabilizing solution, regularizing W when X would be singular.

    A singular X (uncontrollable modes of the coupling) is replaced by the
    solution for ``W + eps I`` with the largest ``eps`` in a short ladder
    that keeps the equation solvable. The extra ``eps I`` only adds a PSD
    term to the corresponding diagonal block of the Lyapunov slack.
    """
    sol = riccati_stabilizing(a, g, w)
    if not sol.degenerate_kernel:
        return sol, 0.0
    k = a.shape[0]
    base = max(1.0, float(np.max(np.abs(w))))
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        try:
            reg = riccati_stabilizing(a, g, w + eps * base * np.eye(k))
        except ImaginaryAxisEigenvalues:
            continue
        if not reg.degenerate_kernel:
            return reg, eps * base
    return sol, 0.0


def blockdiag_smallgain(a, partition, gamma=None) -> Certificate:
    """Block-diagonal Lyapunov certificate for a 2-block matrix from two Riccati solutions.

    Parameters
    ----------
    a : (n, n) array_like
    partition : Partition or sequence of two ints
    gamma : float, optional
        Loop scaling with ``||K2|| < gamma < 1/||K1||``; the geometric mean
        ``sqrt(||K2|| / ||K1||)`` of that interval by default.

    Raises
    ------
    NotHurwitzBlock
        If a diagonal block is not Hurwitz.
    SmallGainViolated
        If ``||K1|| ||K2|| >= 1`` or `gamma` is outside the admissible interval.
    """
    a, alpha, a11, a12, a21, a22 = _two_blocks(a, partition)
    for i, blk in enumerate((a11, a22), start=1):
        if spectral_abscissa(blk) >= 0:
            raise NotHurwitzBlock(f"diagonal block {i} is not Hurwitz")
    if spectral_norm(a12) <= COUPLING_EPS or spectral_norm(a21) <= COUPLING_EPS:
        cert = _decoupled(a, alpha, a11, a12, a21, a22)
    else:
        k1, k2 = coupling_gains(a, alpha)
        if k1 * k2 >= 1.0:
            raise SmallGainViolated(f"loop gain {k1 * k2:.6g} >= 1 (||K1||={k1:.6g}, ||K2||={k2:.6g})")
        if gamma is None:
            gamma = float(np.sqrt(k2 / k1))
        elif not k2 < gamma < 1.0 / k1:
            raise SmallGainViolated(f"gamma={gamma:.6g} outside ({k2:.6g}, {1 / k1:.6g})")
        delta = 0.5 * (1.0 - k2 / gamma)
        mu = gamma * (1.0 - delta)
        r1, reg1 = _riccati_pd(a11, gamma**2, a12 @ a12.T)
        r2, reg2 = _riccati_pd(a22, mu**-2, a21 @ a21.T)
        x = sla.block_diag(r1.X, r2.X / gamma**2)
        cert = make_certificate(a, x, alpha, Method.RICCATI, route="riccati", gamma=gamma, mu=mu,
                                k1=k1, k2=k2, residuals=[r1.residual, r2.residual],
                                regularization=[reg1, reg2])
    if not cert.valid:
        raise ConsistencyError(
            f"small-gain certificate failed: min eig X {cert.min_eig_X:.3e}, "
            f"max eig slack {cert.max_eig_slack:.3e}"
        )
    return cert


@dataclass
class StabilityVerdict:
    """Outcome of :func:`alpha_h_stability_check`; ``stable`` is False when inconclusive."""

    stable: bool
    d: Optional[np.ndarray] = None
    block_norms: list = field(default_factory=list)
    reason: str = ""

    @property
    def label(self) -> str:
        return "Stable" if self.stable else "Inconclusive"

    def to_dict(self) -> dict:
        return {"verdict": self.label,
                "d": None if self.d is None else self.d.tolist(),
                "block_norms": self.block_norms, "reason": self.reason}


def alpha_h_stability_check(a, partition=None) -> StabilityVerdict:
    """Sufficient Hurwitz test from the block comparison matrix.

    Stable when every diagonal block is Hurwitz, the comparison matrix is
    a nonsingular M-matrix (scalings ``d`` found) and each block's
    resolvent peaks at zero frequency, i.e.
    ``||(sI - A_ii)^{-1}||_inf <= ||A_ii^{-1}||_2`` up to a relative 1e-7.
    ``block_norms`` lists ``(resolvent norm, ||A_ii^{-1}||)`` per block.
    """
    a = check_square(a, "A")
    alpha = default_partition(partition, a.shape[0])
    alpha.check(a)
    norms = []
    for i, sl in enumerate(alpha.slices()):
        blk = a[sl, sl]
        if spectral_abscissa(blk) >= 0:
            return StabilityVerdict(False, reason=f"block {i} is not Hurwitz")
        k = blk.shape[0]
        res = hinf_norm(StateSpace(blk, np.eye(k), np.eye(k)))
        inv = spectral_norm(np.linalg.inv(blk))
        norms.append((res, inv))
        if res > inv + RESOLVENT_TOL * max(1.0, inv):
            return StabilityVerdict(False, block_norms=norms,
                                    reason=f"block {i} resolvent peaks away from zero frequency")
    m = comparison_matrix(a, alpha).entries
    if not is_h_plus(m, strict=True):
        return StabilityVerdict(False, block_norms=norms, reason="comparison matrix is not strictly H+")
    try:
        d = sdd_scalings(m).d
    except Infeasible as exc:
        return StabilityVerdict(False, block_norms=norms, reason=str(exc))
    return StabilityVerdict(True, d, norms)


def construct_theorem8(a, partition, d=None) -> Certificate:
    """Certificate for a 2-block matrix passing :func:`alpha_h_stability_check`.

    The scalings give ``gamma = d2 / d1``, which lies strictly inside the
    small-gain interval; `d` overrides the recovered scalings.

    Raises
    ------
    NotHPlus
        If the stability check is inconclusive or `d` is not a valid scaling.
    """
    a, alpha, *_ = _two_blocks(a, partition)
    verdict = alpha_h_stability_check(a, alpha)
    if not verdict.stable:
        raise NotHPlus(f"premise fails: {verdict.reason}")
    if d is None:
        d = verdict.d
    d = np.asarray(d, dtype=float)
    m = comparison_matrix(a, alpha).entries
    off = np.abs(m) - np.diag(np.diag(m))
    if d.shape != (2,) or np.any(d <= 0) or np.any(d * np.diag(m) - off @ d <= 0):
        raise NotHPlus(f"d={d.tolist()} is not a diagonal-dominance scaling of the comparison matrix")
    cert = blockdiag_smallgain(a, alpha, gamma=float(d[1] / d[0]))
    cert.extra.update(d=d, block_norms=verdict.block_norms, route="theorem8/" + cert.extra["route"])
    return cert
