"""Dense matrix primitives, partitions and spectral helpers.

Matrices are plain two-dimensional ``numpy.ndarray`` objects of dtype
float64. :func:`as_matrix` is the single entry point that validates and
converts user input; everything downstream assumes its output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .exceptions import DimensionError, FactorizationError, ShapeError

__all__ = [
    "Partition",
    "SymEigSummary",
    "as_matrix",
    "check_square",
    "check_symmetric",
    "symmetrize",
    "spectral_abscissa",
    "sym_eig_bounds",
    "min_singular_value",
    "spectral_norm",
    "cholesky_or_ldl",
    "is_alpha_diagonal",
    "block_diag_from",
]


def as_matrix(a, name="matrix") -> np.ndarray:
    """Return `a` as a finite float64 2-D array.

    1-D input is treated as a column vector.
    """
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    elif m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got {m.ndim} dimensions")
    if m.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(m)):
        raise ShapeError(f"{name} has non-finite entries")
    return m


def check_square(a, name="matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def _sym_tol(m):
    return 1e-9 * max(1.0, float(np.max(np.abs(m))))


def check_symmetric(a, name="matrix") -> np.ndarray:
    """Validate near-symmetry and return the symmetrized average."""
    m = check_square(a, name)
    if np.max(np.abs(m - m.T)) > _sym_tol(m):
        raise ShapeError(f"{name} is not symmetric")
    return symmetrize(m)


def symmetrize(m) -> np.ndarray:
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class Partition:
    """Ordered block sizes ``(k_1, ..., k_n)`` of an alpha-partition."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(k) for k in self.blocks)
        if not blocks:
            raise DimensionError("partition needs at least one block")
        if any(k < 1 for k in blocks):
            raise DimensionError(f"block sizes must be positive, got {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls((1,) * n)

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        data = json.loads(text)
        if isinstance(data, dict):
            data = data.get("blocks")
        if not isinstance(data, list):
            raise DimensionError('partition JSON must be {"blocks": [k1, ...]}')
        return cls(tuple(data))

    def to_json(self) -> str:
        return json.dumps({"blocks": list(self.blocks)})

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def total(self) -> int:
        return sum(self.blocks)

    @property
    def is_trivial(self) -> bool:
        return all(k == 1 for k in self.blocks)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(np.concatenate(([0], np.cumsum(self.blocks))).astype(int))

    def slices(self) -> list[slice]:
        off = self.offsets
        return [slice(off[i], off[i + 1]) for i in range(self.n)]

    def block_of(self, index: int) -> int:
        """Block number owning scalar coordinate `index`."""
        return int(np.searchsorted(self.offsets, index, side="right") - 1)

    def check(self, m: np.ndarray, name="matrix") -> None:
        if m.shape[0] != self.total or m.shape[1] != self.total:
            raise DimensionError(
                f"partition total {self.total} does not match {name} shape {m.shape}"
            )

    def blocks_of(self, m: np.ndarray) -> Iterator[tuple[int, int, np.ndarray]]:
        sl = self.slices()
        for i, si in enumerate(sl):
            for j, sj in enumerate(sl):
                yield i, j, m[si, sj]


def default_partition(partition: Partition | Sequence[int] | None, n: int) -> Partition:
    if partition is None:
        return Partition.trivial(n)
    if not isinstance(partition, Partition):
        partition = Partition(tuple(partition))
    return partition


@dataclass(frozen=True)
class SymEigSummary:
    min_eig: float
    max_eig: float
    tol: float = 0.0


def spectral_abscissa(a) -> float:
    """Largest real part over the spectrum of a square matrix."""
    m = check_square(a)
    return float(np.max(np.linalg.eigvals(m).real))


def sym_eig_bounds(s) -> SymEigSummary:
    m = check_symmetric(s)
    w = np.linalg.eigvalsh(m)
    return SymEigSummary(float(w[0]), float(w[-1]), _sym_tol(m))


def min_singular_value(b) -> float:
    """Smallest singular value; zero for rank-deficient (incl. non-square) input.

    For a non-square matrix the convention is the smallest of the
    ``min(rows, cols)`` singular values, so a 1x2 row vector returns its
    Euclidean norm.
    """
    m = np.atleast_2d(np.asarray(b))
    if m.size == 0:
        return 0.0
    s = np.linalg.svd(m, compute_uv=False)
    smin = float(s[-1])
    if smin <= s[0] * max(m.shape) * np.finfo(float).eps:
        return 0.0
    return smin


def spectral_norm(b) -> float:
    m = np.atleast_2d(np.asarray(b))
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def cholesky_or_ldl(s, mode="cholesky") -> tuple[np.ndarray, list[int]]:
    """Lower-triangular factor ``F`` with ``F @ F.T`` approximating `s`.

    Both modes run an unpivoted LDL^T elimination so the factor stays
    lower triangular in the original ordering.

    Parameters
    ----------
    s : (n, n) array_like
        Symmetric matrix.
    mode : {'cholesky', 'ldl'}
        ``'cholesky'`` requires `s` positive definite and raises
        :class:`FactorizationError` at the first nonpositive pivot.
        ``'ldl'`` zeroes the columns whose pivot is nonpositive (up to a
        rounding threshold) and reports them.

    Returns
    -------
    factor : (n, n) ndarray
        ``L @ diag(sqrt(max(d, 0)))``.
    zeroed : list of int
        0-based indices of the zeroed columns (always empty for cholesky).
    """
    if mode not in ("cholesky", "ldl"):
        raise ValueError(f"unknown mode {mode!r}")
    w = check_symmetric(s).copy()
    n = w.shape[0]
    thresh = n * np.finfo(float).eps * max(float(np.max(np.abs(np.diag(w)))), 1e-300)
    factor = np.zeros((n, n))
    zeroed = []
    for k in range(n):
        d = w[k, k]
        if d <= thresh:
            if mode == "cholesky":
                raise FactorizationError(
                    f"matrix is not positive definite (pivot {k} = {d:.3e})", pivot=k
                )
            zeroed.append(k)
            continue
        col = w[k:, k] / d
        factor[k:, k] = col * np.sqrt(d)
        w[k + 1:, k + 1:] -= d * np.outer(col[1:], col[1:])
    return factor, zeroed


def is_alpha_diagonal(x, partition: Partition) -> bool:
    """True iff every off-diagonal block of `x` is identically zero."""
    for i, j, blk in partition.blocks_of(x):
        if i != j and np.any(blk != 0):
            return False
    return True


def block_diag_from(blocks: Sequence[np.ndarray]) -> np.ndarray:
    sizes = [b.shape[0] for b in blocks]
    out = np.zeros((sum(sizes), sum(sizes)))
    k = 0
    for b, m in zip(blocks, sizes):
        out[k:k + m, k:k + m] = b
        k += m
    return out
