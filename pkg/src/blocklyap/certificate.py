"""Block-diagonal Lyapunov certificates and their independent verification."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .core import Partition, check_square, default_partition, is_alpha_diagonal, symmetrize
from .exceptions import DimensionError, ParseError

__all__ = ["Method", "Certificate", "ValidityReport", "verify_certificate", "make_certificate"]


class Method(str, enum.Enum):
    THEOREM4 = "theorem4"
    SCALED_LP = "scaled_lp"
    RICCATI = "riccati"
    BASIS_PURSUIT = "basis_pursuit"
    LP = "lp"


@dataclass
class Certificate:
    """Candidate ``X`` for ``A X + X A^T < 0`` with spectral evidence.

    ``max_eig_slack`` is the largest eigenvalue of ``A X + X A^T``; the
    certificate is valid when ``min_eig_X > 0`` and ``max_eig_slack < 0``.
    """

    X: np.ndarray
    partition: Partition
    min_eig_X: float
    max_eig_slack: float
    method: Method
    extra: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.min_eig_X > 0 and self.max_eig_slack < 0

    def to_dict(self) -> dict:
        out = {
            "method": Method(self.method).value,
            "X": self.X.tolist(),
            "min_eig_X": self.min_eig_X,
            "max_eig_slack": self.max_eig_slack,
            "partition": list(self.partition.blocks),
        }
        if self.extra:
            out["proof"] = _jsonable(self.extra)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        """Inverse of :meth:`to_dict`. Only ``X`` and ``method`` are required;
        the spectral fields default to NaN since verification recomputes them."""
        try:
            x = np.asarray(data["X"], dtype=float)
            method = Method(data["method"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"certificate needs a numeric 'X' and a known 'method': {exc}") from exc
        blocks = data.get("partition") or [1] * (x.shape[0] if x.ndim else 0)
        return cls(
            X=x,
            partition=Partition(tuple(blocks)),
            min_eig_X=float(data.get("min_eig_X", np.nan)),
            max_eig_slack=float(data.get("max_eig_slack", np.nan)),
            method=method,
            extra=dict(data.get("proof", {})),
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _spectra(a, x):
    s = symmetrize(a @ x + x @ a.T)
    return float(np.linalg.eigvalsh(symmetrize(x))[0]), float(np.linalg.eigvalsh(s)[-1])


def make_certificate(a, x, partition, method, **extra) -> Certificate:
    """Wrap `x` as a certificate for `a`, zeroing off-block entries exactly."""
    a = check_square(a, "A")
    x = symmetrize(np.asarray(x, dtype=float))
    alpha = default_partition(partition, a.shape[0])
    alpha.check(x, "X")
    mask = np.zeros_like(x, dtype=bool)
    for sl in alpha.slices():
        mask[sl, sl] = True
    x = np.where(mask, x, 0.0)
    lo, hi = _spectra(a, x)
    return Certificate(x, alpha, lo, hi, Method(method), dict(extra))


@dataclass
class ValidityReport:
    valid: bool
    min_eig_X: float
    max_eig_slack: float
    symmetric: bool
    alpha_diagonal: bool
    failures: list = field(default_factory=list)


def verify_certificate(a, cert, partition=None) -> ValidityReport:
    """Recompute the spectral evidence of `cert` from scratch.

    `cert` may be a :class:`Certificate` or a bare matrix ``X``. The
    partition defaults to the certificate's own.
    """
    a = check_square(a, "A")
    if isinstance(cert, Certificate):
        x = np.asarray(cert.X, dtype=float)
        alpha = partition if partition is not None else cert.partition
    else:
        x = np.asarray(cert, dtype=float)
        alpha = partition
    alpha = default_partition(alpha, a.shape[0])
    if x.shape != a.shape:
        raise DimensionError(f"X shape {x.shape} does not match A shape {a.shape}")
    alpha.check(x, "X")
    failures = []
    symmetric = bool(np.array_equal(x, x.T))
    if not symmetric:
        failures.append("X is not symmetric")
    blockdiag = is_alpha_diagonal(x, alpha)
    if not blockdiag:
        failures.append("X has nonzero off-diagonal blocks")
    lo, hi = _spectra(a, x)
    if not lo > 0:
        failures.append(f"X is not positive definite (min eigenvalue {lo:.3e})")
    if not hi < 0:
        failures.append(f"A X + X A^T is not negative definite (max eigenvalue {hi:.3e})")
    return ValidityReport(not failures, lo, hi, symmetric, blockdiag, failures)
