# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled finite-field kernels; same contracts as ``smsm._pykernels``."""

import numpy as np

NAME = "cython"

ctypedef long long i64


cdef inline i64 fmul(i64 a, i64 b, i64 q, int kind, const i64[::1] exp, const i64[::1] log) nogil:
    if a == 0 or b == 0:
        return 0
    if kind == 0:
        return (a * b) % q
    return exp[log[a] + log[b]]


cdef inline i64 fsub(i64 a, i64 b, i64 q, int kind) nogil:
    if kind == 0:
        a = a - b
        return a + q if a < 0 else a
    return a ^ b


def rref_inplace(i64[:, ::1] a, i64 q, int kind, const i64[::1] exp, const i64[::1] log,
                 const i64[::1] inv):
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1]
    cdef Py_ssize_t r = 0, c, i, j, p
    cdef i64 pv, f, t
    pivots = []
    for c in range(cols):
        if r == rows:
            break
        p = -1
        for i in range(r, rows):
            if a[i, c] != 0:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for j in range(cols):
                t = a[r, j]
                a[r, j] = a[p, j]
                a[p, j] = t
        pv = a[r, c]
        if pv != 1:
            pv = inv[pv]
            for j in range(c, cols):
                a[r, j] = fmul(a[r, j], pv, q, kind, exp, log)
        for i in range(rows):
            if i == r:
                continue
            f = a[i, c]
            if f == 0:
                continue
            for j in range(c, cols):
                if a[r, j] != 0:
                    a[i, j] = fsub(a[i, j], fmul(f, a[r, j], q, kind, exp, log), q, kind)
        pivots.append(c)
        r += 1
    return pivots


def matmul(const i64[:, ::1] a, const i64[:, ::1] b, i64 q, int kind, const i64[::1] exp,
           const i64[::1] log, const i64[::1] inv):
    cdef Py_ssize_t n = a.shape[0], inner = a.shape[1], m = b.shape[1]
    out_arr = np.zeros((n, m), dtype=np.int64)
    cdef i64[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, l
    cdef i64 av, acc
    for i in range(n):
        for l in range(inner):
            av = a[i, l]
            if av == 0:
                continue
            for j in range(m):
                if kind == 0:
                    out[i, j] = (out[i, j] + av * b[l, j]) % q
                else:
                    out[i, j] = out[i, j] ^ fmul(av, b[l, j], q, kind, exp, log)
    return out_arr


def reduce_insert(i64[:, ::1] basis, i64[::1] pivots, Py_ssize_t rank, i64[::1] row, i64 q,
                  int kind, const i64[::1] exp, const i64[::1] log, const i64[::1] inv):
    cdef Py_ssize_t width = row.shape[0]
    cdef Py_ssize_t i, j, c, pos
    cdef i64 f, pv
    for i in range(rank):
        c = pivots[i]
        f = row[c]
        if f == 0:
            continue
        for j in range(c, width):
            if basis[i, j] != 0:
                row[j] = fsub(row[j], fmul(f, basis[i, j], q, kind, exp, log), q, kind)
    c = -1
    for j in range(width):
        if row[j] != 0:
            c = j
            break
    if c < 0:
        return rank
    pv = row[c]
    if pv != 1:
        pv = inv[pv]
        for j in range(c, width):
            row[j] = fmul(row[j], pv, q, kind, exp, log)
    pos = rank
    for i in range(rank):
        if pivots[i] > c:
            pos = i
            break
    i = rank
    while i > pos:
        for j in range(width):
            basis[i, j] = basis[i - 1, j]
        pivots[i] = pivots[i - 1]
        i -= 1
    for j in range(width):
        basis[pos, j] = row[j]
    pivots[pos] = c
    return rank + 1
