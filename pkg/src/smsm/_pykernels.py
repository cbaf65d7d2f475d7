"""Pure-Python (numpy) implementations of the hot finite-field kernels.

Signatures mirror ``_ckernels`` exactly; ``smsm.kernels`` picks one at import.
All matrices are C-contiguous int64 arrays and field parameters arrive as the
``Field.kernel_args`` tuple ``(q, kind, exp, log, inv)``.
"""

from __future__ import annotations

import numpy as np

from .field import BINARY_EXT, PRIME

NAME = "python"


def _mul(a, b, q, kind, exp, log):
    if kind == PRIME:
        return (a * b) % q
    return np.where((a == 0) | (b == 0), 0, exp[log[a] + log[b]])


def rref_inplace(a, q, kind, exp, log, inv):
    """Reduce ``a`` to reduced row-echelon form in place; return pivot columns.

    The pivot row is the first row (from the current one down) with a nonzero
    entry in the column, which keeps results reproducible.
    """
    if q == 2:
        return rref_gf2_bits(a)
    return rref_generic(a, q, kind, exp, log, inv)


def rref_generic(a, q, kind, exp, log, inv):
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        pv = int(a[r, c])
        if pv != 1:
            a[r] = _mul(a[r], inv[pv], q, kind, exp, log)
        f = a[:, c].copy()
        f[r] = 0
        hit = np.flatnonzero(f)
        if hit.size:
            delta = _mul(f[hit, None], a[r][None, :], q, kind, exp, log)
            if kind == BINARY_EXT:
                a[hit] ^= delta
            else:
                a[hit] = (a[hit] - delta) % q
        pivots.append(c)
        r += 1
    return pivots


def rref_gf2_bits(a):
    """GF(2) elimination on bit-packed rows (Python ints); same output as the generic path."""
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return []
    weights = 1 << np.arange(cols - 1, -1, -1, dtype=object)
    packed = [int((a[i].astype(object) * weights).sum()) for i in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        bit = 1 << (cols - 1 - c)
        p = next((i for i in range(r, rows) if packed[i] & bit), None)
        if p is None:
            continue
        packed[r], packed[p] = packed[p], packed[r]
        pr = packed[r]
        for i in range(rows):
            if i != r and packed[i] & bit:
                packed[i] ^= pr
        pivots.append(c)
        r += 1
    for i in range(rows):
        v = packed[i]
        for c in range(cols - 1, -1, -1):
            a[i, c] = v & 1
            v >>= 1
    return pivots


def matmul(a, b, q, kind, exp, log, inv):
    n, inner = a.shape
    m = b.shape[1]
    if kind == PRIME:
        step = max(1, (1 << 62) // ((q - 1) ** 2))
        out = np.zeros((n, m), dtype=np.int64)
        for lo in range(0, inner, step):
            out = (out + a[:, lo : lo + step] @ b[lo : lo + step]) % q
        return out
    out = np.zeros((n, m), dtype=np.int64)
    for l in range(inner):
        out ^= _mul(a[:, l, None], b[None, l, :], q, kind, exp, log)
    return out


def reduce_insert(basis, pivots, rank, row, q, kind, exp, log, inv):
    """Reduce ``row`` against an echelon ``basis`` and insert it if independent.

    ``basis[:rank]`` holds monic rows sorted by pivot column ``pivots[:rank]``;
    each has zeros left of its pivot. ``row`` is modified in place. Returns the
    new rank.
    """
    for i in range(rank):
        c = pivots[i]
        f = row[c]
        if f:
            if kind == BINARY_EXT:
                row ^= _mul(basis[i], f, q, kind, exp, log)
            else:
                row[:] = (row - basis[i] * f) % q
    nz = np.flatnonzero(row)
    if nz.size == 0:
        return rank
    c = int(nz[0])
    pv = int(row[c])
    if pv != 1:
        row[:] = _mul(row, inv[pv], q, kind, exp, log)
    pos = int(np.searchsorted(pivots[:rank], c))
    basis[pos + 1 : rank + 1] = basis[pos:rank].copy()
    pivots[pos + 1 : rank + 1] = pivots[pos:rank].copy()
    basis[pos] = row
    pivots[pos] = c
    return rank + 1
