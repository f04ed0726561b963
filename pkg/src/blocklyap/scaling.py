"""Explicit diagonal Lyapunov solutions for matrices whose negation is H+.

If ``-A`` is H+ with a nonsingular comparison matrix ``M = M(A)``, there
are positive ``v`` and ``w`` with ``M v > 0`` and ``w' M > 0``. Then
``X = diag(v / w)`` makes ``-(A X + X A')`` an H+ matrix, and in the
coordinates ``P_w A P_w^{-1}`` the diagonal matrix ``Y = diag(v * w)``
makes the Lyapunov slack a DD+ matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificate import Certificate, Method, make_certificate
from .classes import comparison_matrix, ddp_margin, hplus_tolerance, is_h_plus
from .core import Partition, check_square, symmetrize
from .exceptions import ConsistencyError, IrreducibilityFallback, NotHPlus
from .lp import LpProblem, solve_lp

__all__ = [
    "ScalingPair",
    "perron_scalings",
    "diag_lyapunov",
    "scaled_dd_certificate",
    "positive_scaling_lp",
]

_FALLBACK_EPS = 1e-6


@dataclass(frozen=True)
class ScalingPair:
    """Right/left positive scalings and the Perron value of ``-M(A)``."""

    v: np.ndarray
    w: np.ndarray
    lam: float
    route: str = "perron"

    @property
    def P_v(self) -> np.ndarray:
        return np.diag(self.v)

    @property
    def P_w(self) -> np.ndarray:
        return np.diag(self.w)


def _require_strict_hplus(a):
    m = comparison_matrix(a).entries
    if not is_h_plus(-a, strict=True):
        raise NotHPlus(
            "-A must be H+ with a nonsingular comparison matrix "
            f"(min Re eig of M(A) = {np.min(np.linalg.eigvals(m).real):.3e})"
        )
    return m


def _perron_vector(z):
    """Eigenvector of the rightmost eigenvalue of the Metzler matrix `z`."""
    w, v = np.linalg.eig(z)
    k = int(np.argmax(w.real))
    vec = np.real(v[:, k])
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    return float(w[k].real), vec / np.max(vec)


def positive_scaling_lp(m, eps=_FALLBACK_EPS) -> np.ndarray:
    """Positive ``v`` in ``[eps, 1]`` with ``m v >= t >= eps``, maximizing ``t``.

    Raises :class:`IrreducibilityFallback` if the LP has no such point.
    """
    n = m.shape[0]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-m, np.ones((n, 1))])
    sol = solve_lp(LpProblem(c, A_ub=a_ub, b_ub=np.zeros(n),
                             bounds=[(eps, 1.0)] * n + [(eps, None)]))
    if not sol.optimal:
        raise IrreducibilityFallback("no positive vector v with M v >= eps found")
    v = sol.x[:n]
    return v / v.max()


def perron_scalings(a) -> ScalingPair:
    """Positive scalings ``v``, ``w`` with ``M(A) v >> 0`` and ``M(A)' w >> 0``.

    Both come from the Perron eigenvectors of ``-M(A)`` and are normalized
    to a largest entry of one. When an eigenvector has (numerically) zero
    entries, as for reducible comparison matrices, the vector is instead
    taken from :func:`positive_scaling_lp`.

    Raises
    ------
    NotHPlus
        If ``-A`` is not H+ with a nonsingular comparison matrix.
    """
    a = check_square(a, "A")
    m = _require_strict_hplus(a)
    lam, v = _perron_vector(-m)
    _, w = _perron_vector(-m.T)
    route = "perron"
    tol = 1e-10
    if not (np.all(v > tol) and np.all(m @ v > 0)):
        v = positive_scaling_lp(m)
        route = "lp"
    if not (np.all(w > tol) and np.all(m.T @ w > 0)):
        w = positive_scaling_lp(m.T)
        route = "lp"
    if not (np.all(m @ v > 0) and np.all(m.T @ w > 0)):
        raise ConsistencyError("scalings fail M v >> 0 / M' w >> 0")
    return ScalingPair(v, w, lam, route)


def diag_lyapunov(a, scalings: ScalingPair | None = None) -> Certificate:
    """Diagonal certificate ``X = diag(v_i / w_i)`` for ``A`` with ``-A`` in H+."""
    a = check_square(a, "A")
    sp = scalings or perron_scalings(a)
    x = np.diag(sp.v / sp.w)
    cert = make_certificate(a, x, Partition.trivial(a.shape[0]), Method.THEOREM4,
                            v=sp.v, w=sp.w, route=sp.route)
    s = symmetrize(-(a @ x + x @ a.T))
    if not is_h_plus(s):
        raise ConsistencyError("-(A X + X A^T) is not H+ for the Perron scaling")
    return cert


def scaled_dd_certificate(a, scalings: ScalingPair | None = None) -> tuple[np.ndarray, Certificate]:
    """Coordinates ``P_w`` and diagonal ``Y`` making the transformed slack DD+.

    Returns ``(P_w, cert)`` where ``cert`` certifies ``P_w A P_w^{-1}``
    with ``Y = P_v P_w``, and ``-(At Y + Y At')`` is DD+.
    """
    a = check_square(a, "A")
    sp = scalings or perron_scalings(a)
    pw = np.diag(sp.w)
    at = (sp.w[:, None] * a) / sp.w[None, :]
    y = np.diag(sp.v * sp.w)
    s = symmetrize(-(at @ y + y @ at.T))
    margin = ddp_margin(s)
    cert = make_certificate(at, y, Partition.trivial(a.shape[0]), Method.THEOREM4,
                            v=sp.v, w=sp.w, ddp_margin=margin)
    floor = 1e-12 * float(np.max(np.abs(at)))
    if not (np.all(np.diag(s) > 0) and margin >= floor):
        raise ConsistencyError(f"transformed slack is not DD+ (margin {margin:.3e})")
    return pw, cert
