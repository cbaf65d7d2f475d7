"""Dense linear algebra over GF(q).

Matrices are 2-D int64 numpy arrays paired with a :class:`Field`. Functions
never mutate their inputs. :class:`FieldMatrix` is the immutable carrier used
for file I/O and for values that cross module boundaries.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .field import Field, FieldError

__all__ = [
    "Field",
    "FieldMatrix",
    "rref",
    "rank",
    "nullspace_basis",
    "solve_particular",
    "matmul",
    "invert",
    "all_vectors",
    "format_matrix",
    "parse_matrix",
    "read_matrix",
    "write_matrix",
]


def _work(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64, order="C", copy=True, ndmin=2)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return arr


def rref(field: Field, a) -> tuple[np.ndarray, tuple[int, ...]]:
    """Reduced row-echelon form and pivot columns.

    >>> R, piv = rref(Field(2), [[1, 1, 0], [1, 1, 1]])
    >>> R.tolist(), piv
    ([[1, 1, 0], [0, 0, 1]], (0, 2))
    """
    R = _work(a)
    if R.size == 0:
        return R, ()
    pivots = kernels.rref_inplace(R, *field.kernel_args)
    return R, tuple(int(p) for p in pivots)


def rank(field: Field, a) -> int:
    return len(rref(field, a)[1])


def nullspace_basis(field: Field, a) -> np.ndarray:
    """Rows spanning {v : a @ v = 0}; one row per free column of rref(a)."""
    R, pivots = rref(field, a)
    n = R.shape[1]
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for j, f in enumerate(free):
        basis[j, f] = 1
        for i, p in enumerate(pivots):
            basis[j, p] = field.neg(R[i, f])
    return basis


def solve_particular(field: Field, A, b) -> np.ndarray | None:
    """One solution x of A @ x = b (free variables set to 0), or None if inconsistent."""
    A = _work(A)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
    n = A.shape[1]
    R, pivots = rref(field, np.hstack([A, b[:, None]]))
    if pivots and pivots[-1] == n:
        return None
    x = np.zeros(n, dtype=np.int64)
    for i, p in enumerate(pivots):
        x[p] = R[i, n]
    return x


def matmul(field: Field, a, b) -> np.ndarray:
    a = _work(a)
    b = _work(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    return kernels.matmul(a, b, *field.kernel_args)


def invert(field: Field, a) -> np.ndarray | None:
    a = _work(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"cannot invert non-square {a.shape} matrix")
    R, pivots = rref(field, np.hstack([a, np.eye(n, dtype=np.int64)]))
    if len(pivots) < n or pivots[n - 1] != n - 1:
        return None
    return R[:, n:].copy()


def all_vectors(field: Field, n: int) -> np.ndarray:
    """Every vector of GF(q)^n as rows, in base-q counting order (first entry most significant)."""
    q = field.q
    idx = np.arange(q**n, dtype=np.int64)
    out = np.empty((q**n, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        out[:, j] = idx % q
        idx //= q
    return out


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Immutable matrix over a field."""

    field: Field
    data: np.ndarray

    def __post_init__(self):
        arr = self.field.asarray(np.array(self.data, dtype=np.int64, ndmin=2))
        if arr.ndim != 2:
            raise ValueError("FieldMatrix must be 2-D")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.field is other.field and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.field.q, self.data.shape, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"FieldMatrix(q={self.field.q}, {self.data.tolist()})"


def format_matrix(m: FieldMatrix) -> str:
    """Text form: ``q rows cols`` then one line per row."""
    lines = [f"{m.field.q} {m.rows} {m.cols}"]
    lines += [" ".join(str(int(v)) for v in row) for row in m.data]
    return "\n".join(lines) + "\n"


def parse_matrix(stream) -> FieldMatrix:
    """Read one matrix from a text stream, skipping blank lines and ``#`` comments."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    def next_line():
        for line in stream:
            line = line.split("#", 1)[0].strip()
            if line:
                return line
        raise ValueError("unexpected end of matrix text")

    header = next_line().split()
    if len(header) != 3:
        raise ValueError(f"bad matrix header {header!r}")
    q, rows, cols = (int(t) for t in header)
    data = np.zeros((rows, cols), dtype=np.int64)
    for i in range(rows):
        vals = next_line().split()
        if len(vals) != cols:
            raise ValueError(f"row {i} has {len(vals)} entries, expected {cols}")
        data[i] = [int(v) for v in vals]
    try:
        return FieldMatrix(Field(q), data)
    except FieldError as exc:
        raise ValueError(str(exc)) from exc


def read_matrix(path: str | Path) -> FieldMatrix:
    with open(path) as fh:
        return parse_matrix(fh)


def write_matrix(path: str | Path, m: FieldMatrix) -> None:
    Path(path).write_text(format_matrix(m))
