"""Deterministic test systems: a discretized heat equation, cyclic cascades
with negative feedback, and random corpora."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classes import is_h_plus
from .core import Partition, spectral_abscissa, symmetrize
from .exceptions import ConsistencyError, DimensionError

__all__ = [
    "HeatSystem",
    "CyclicSystem",
    "CyclicThreshold",
    "heat_system",
    "heat_eigenvalues",
    "cyclic_system",
    "hplus_threshold",
    "secant_bound",
    "random_hplus_hurwitz",
    "random_two_block",
    "random_partitioned",
    "grid_diagonal_stability",
]


@dataclass(frozen=True)
class HeatSystem:
    n: int
    alpha: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def input_index(self) -> int:
        """1-based position of the actuator."""
        return math.ceil(self.n / 3)

    @property
    def output_index(self) -> int:
        return math.ceil(2 * self.n / 3)


def heat_system(n: int, alpha: float = -0.01) -> HeatSystem:
    """``A = alpha (n+1)^2 tridiag(-1, 2, -1)``, ``B = e_ceil(n/3)``,
    ``C = e_ceil(2n/3)'`` (1-based positions)."""
    if int(n) != n or n < 2:
        raise DimensionError(f"heat system needs n >= 2, got {n}")
    n = int(n)
    t = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    a = alpha * (n + 1) ** 2 * t
    b = np.zeros((n, 1))
    b[math.ceil(n / 3) - 1, 0] = 1.0
    c = np.zeros((1, n))
    c[0, math.ceil(2 * n / 3) - 1] = 1.0
    return HeatSystem(n, alpha, a, b, c)


def heat_eigenvalues(n: int, alpha: float = -0.01) -> np.ndarray:
    """Closed form ``alpha (n+1)^2 (2 - 2 cos(k pi / (n+1)))``, ``k = 1..n``, ascending."""
    k = np.arange(1, n + 1)
    return np.sort(alpha * (n + 1) ** 2 * (2.0 - 2.0 * np.cos(k * np.pi / (n + 1))))


@dataclass(frozen=True)
class CyclicSystem:
    alphas: np.ndarray
    betas: np.ndarray
    A: np.ndarray

    @property
    def n(self) -> int:
        return self.alphas.size


def cyclic_system(alphas, betas) -> CyclicSystem:
    """Cascade of first-order lags ``beta_i / (s + alpha_i)`` closed by negative feedback.

    ``A`` has ``-alpha_i`` on the diagonal, ``beta_{i+1}`` at ``(i+1, i)``
    and ``-beta_1`` at ``(1, n)`` (1-based).
    """
    al = np.atleast_1d(np.asarray(alphas, dtype=float))
    be = np.atleast_1d(np.asarray(betas, dtype=float))
    if al.ndim != 1 or al.shape != be.shape:
        raise DimensionError(f"alphas {al.shape} and betas {be.shape} must be equal-length vectors")
    if al.size < 2:
        raise DimensionError("a cycle needs at least two stages")
    if np.any(al <= 0) or np.any(be <= 0):
        raise ValueError("alphas and betas must be positive")
    n = al.size
    a = -np.diag(al)
    for i in range(1, n):
        a[i, i - 1] = be[i]
    a[0, n - 1] -= be[0]
    return CyclicSystem(al, be, a)


@dataclass(frozen=True)
class CyclicThreshold:
    ratio: float
    is_hplus: bool
    diag_stable_bound: float


def hplus_threshold(sys: CyclicSystem) -> CyclicThreshold:
    """Loop ratio ``prod(beta) / prod(alpha)``, whether ``-A`` is H+ (ratio < 1),
    and ``sec(pi/n)^n``, below which the cycle is diagonally stable."""
    ratio = float(np.prod(sys.betas / sys.alphas))
    hp = ratio < 1.0
    numeric = is_h_plus(-sys.A, strict=True)
    # the eigen-test resolves ratios within ~1e-9 of 1 only up to its tolerance
    if hp != numeric and abs(ratio - 1.0) > 1e-6:
        raise ConsistencyError(f"ratio {ratio} disagrees with the comparison-matrix test")
    return CyclicThreshold(ratio, hp, secant_bound(sys.n))


def secant_bound(n: int) -> float:
    """``sec(pi/n)^n``; infinite for n = 2."""
    if n == 2:
        return math.inf
    # cos(pi/3) = 1/2 is the only rational value for n >= 3; keep it exact
    c = 0.5 if n == 3 else math.cos(math.pi / n)
    return (1.0 / c) ** n


def random_hplus_hurwitz(n: int, seed, density: float = 1.0) -> np.ndarray:
    """Random ``A`` with ``a_ii = -(sum_{j != i} |a_ij| + u_i)``, ``u_i`` in (0.1, 1).

    Row diagonal dominance makes ``-A`` strictly H+ and ``A`` Hurwitz.
    """
    if n < 1:
        raise DimensionError("n must be positive")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, (n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(a, 0.0)
    u = rng.uniform(0.1, 1.0, n)
    np.fill_diagonal(a, -(np.abs(a).sum(axis=1) + u))
    if not is_h_plus(-a, strict=True) or spectral_abscissa(a) >= 0:
        raise ConsistencyError("generated matrix fails its postconditions")
    return a


def random_two_block(rng: np.random.Generator, k1: int, k2: int, coupling: float = 1.0):
    """Random 2-block matrix with Hurwitz diagonal blocks; returns ``(A, Partition)``.

    Diagonal blocks are ``S - (|eig(S)|_max + u) I`` type shifts of random
    matrices; the couplings are random with spectral norm drawn up to
    `coupling`.
    """
    def hurwitz(k):
        m = rng.normal(size=(k, k))
        shift = np.max(np.linalg.eigvals(m).real) + rng.uniform(0.2, 2.0)
        return m - shift * np.eye(k)

    def coupler(r, c):
        m = rng.normal(size=(r, c))
        return m * (rng.uniform(0.05, 1.0) * coupling / np.linalg.norm(m, 2))

    a = np.block([[hurwitz(k1), coupler(k1, k2)], [coupler(k2, k1), hurwitz(k2)]])
    return a, Partition((k1, k2))


def random_partitioned(rng: np.random.Generator, n_max: int = 8):
    """Random dense matrix with a random partition of its coordinates."""
    n = int(rng.integers(2, n_max + 1))
    cuts = sorted(rng.choice(np.arange(1, n), size=rng.integers(0, n - 1), replace=False))
    blocks = tuple(int(b) for b in np.diff([0, *cuts, n]))
    return rng.normal(size=(n, n)) * rng.uniform(0.1, 3.0), Partition(blocks)


def grid_diagonal_stability(a, points: int = 40, lo: float = 1e-3, hi: float = 1e3,
                            chunk: int = 4096) -> Optional[np.ndarray]:
    """Search a log-spaced lattice for a diagonal ``X`` with ``A X + X A' < 0``.

    Every diagonal entry ranges over `points` log-spaced values in
    ``[lo, hi]``. Returns the first certifying diagonal found, or ``None``;
    a ``None`` never proves that no certificate exists.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    grid = np.logspace(np.log10(lo), np.log10(hi), points)
    combos = itertools.product(grid, repeat=n)
    while True:
        xs = np.array(list(itertools.islice(combos, chunk)))
        if xs.size == 0:
            return None
        # A diag(x) + diag(x) A'  for every candidate at once
        s = a[None, :, :] * xs[:, None, :] + xs[:, :, None] * a.T[None, :, :]
        top = np.linalg.eigvalsh(s)[:, -1]
        hit = np.flatnonzero(top < 0)
        if hit.size:
            return np.diag(xs[hit[0]])
