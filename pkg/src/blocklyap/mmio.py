"""Matrix Market reader/writer for dense real matrices.

Supports the ``array`` and ``coordinate`` layouts with ``real`` or
``integer`` fields and ``general``, ``symmetric`` or ``skew-symmetric``
symmetry. Indices in coordinate files are 1-based. Values are written with
17 significant digits so a save/load round trip is bit-exact.
"""
from __future__ import annotations

import os

import numpy as np

from .core import Partition, as_matrix
from .exceptions import DimensionError, ParseError

__all__ = ["load_matrix", "save_matrix", "load_partition", "save_partition"]

_HEADER = "%%matrixmarket"


def _data_lines(lines, start):
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        yield lineno, line.split()


def _floats(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected numeric values, got {' '.join(tokens)!r}", lineno) from None


def parse_matrix(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != _HEADER or head[1].lower() != "matrix":
        raise ParseError("malformed Matrix Market header", 1)
    layout, field, symmetry = (h.lower() for h in head[2:])
    if layout not in ("array", "coordinate"):
        raise ParseError(f"unsupported layout {layout!r}", 1)
    if field not in ("real", "integer", "double"):
        raise ParseError(f"unsupported field {field!r}", 1)
    if symmetry not in ("general", "symmetric", "skew-symmetric"):
        raise ParseError(f"unsupported symmetry {symmetry!r}", 1)

    body = _data_lines(lines, 1)
    try:
        lineno, size = next(body)
    except StopIteration:
        raise ParseError("missing size line", len(lines)) from None

    if layout == "array":
        if len(size) != 2:
            raise ParseError("array size line needs 'rows cols'", lineno)
        rows, cols = (int(v) for v in _floats(size, lineno))
        if symmetry != "general" and rows != cols:
            raise ParseError("symmetric array must be square", lineno)
        values = []
        last = lineno
        for last, tokens in body:
            values.extend(_floats(tokens, last))
        m = np.zeros((rows, cols))
        if symmetry == "general":
            if len(values) != rows * cols:
                raise DimensionError(
                    f"expected {rows * cols} entries, found {len(values)} (line {last})"
                )
            m[:, :] = np.reshape(values, (cols, rows)).T
        else:
            skew = symmetry == "skew-symmetric"
            need = rows * (rows - 1) // 2 if skew else rows * (rows + 1) // 2
            if len(values) != need:
                raise DimensionError(f"expected {need} entries, found {len(values)} (line {last})")
            it = iter(values)
            for j in range(cols):
                for i in range(j + 1 if skew else j, rows):
                    v = next(it)
                    m[i, j] = v
                    m[j, i] = -v if skew else v
        return as_matrix(m)

    if len(size) != 3:
        raise ParseError("coordinate size line needs 'rows cols nnz'", lineno)
    rows, cols, nnz = (int(v) for v in _floats(size, lineno))
    m = np.zeros((rows, cols))
    count = 0
    for lineno, tokens in body:
        if len(tokens) != 3:
            raise ParseError("coordinate entry needs 'row col value'", lineno)
        i, j, v = _floats(tokens, lineno)
        i, j = int(i), int(j)
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise DimensionError(f"line {lineno}: index ({i}, {j}) outside {rows}x{cols}")
        m[i - 1, j - 1] = v
        if symmetry == "symmetric":
            m[j - 1, i - 1] = v
        elif symmetry == "skew-symmetric":
            m[j - 1, i - 1] = -v
        count += 1
    if count != nnz:
        raise DimensionError(f"header announces {nnz} entries, found {count}")
    return as_matrix(m)


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        return parse_matrix(fh.read())


def format_matrix(m, symmetric=False) -> str:
    m = as_matrix(m)
    rows, cols = m.shape
    kind = "symmetric" if symmetric else "general"
    out = [f"%%MatrixMarket matrix array real {kind}", f"{rows} {cols}"]
    for j in range(cols):
        start = j if symmetric else 0
        out.extend(f"{v:.17g}" for v in m[start:, j])
    return "\n".join(out) + "\n"


def save_matrix(m, path, symmetric=False) -> None:
    """Write `m` in Matrix Market ``array`` layout (column-major)."""
    text = format_matrix(m, symmetric=symmetric)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def load_partition(source) -> Partition:
    """Read a partition from a JSON file path or an inline JSON string."""
    if isinstance(source, Partition):
        return source
    text = str(source)
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    return Partition.from_json(text)


def save_partition(partition: Partition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(partition.to_json() + "\n")
