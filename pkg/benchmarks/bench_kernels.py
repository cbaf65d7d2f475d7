"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one row per (kernel, field, size) with the median time of each
backend and the speedup. Both backends are also checked for equal output.
Raw backends are compared; ``smsm.kernels.matmul`` already routes large
prime-field products to numpy, where the compiled loop loses.
"""

import argparse
import statistics
import time

import numpy as np

from smsm import kernels
from smsm.field import Field


def _time(fn, repeat):
    samples = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t)
    return statistics.median(samples)


def cases(rng):
    for q, n in ((2, 16), (2, 64), (3, 16), (256, 16), (256, 48)):
        F = Field(q)
        a = F.random(rng, (n, n + 4))
        yield "rref", F, n, a
    for q, n in ((2, 64), (256, 64)):
        F = Field(q)
        yield "matmul", F, n, (F.random(rng, (n, n)), F.random(rng, (n, n)))
    for q, n in ((2, 12), (256, 12)):
        F = Field(q)
        yield "insert", F, n, F.random(rng, (4 * n, n))


def run_case(backend, kind, F, payload):
    args = F.kernel_args
    if kind == "rref":
        a = payload.copy()
        piv = backend.rref_inplace(a, *args)
        return lambda: backend.rref_inplace(payload.copy(), *args), (a, list(piv))
    if kind == "matmul":
        a, b = payload
        return lambda: backend.matmul(a, b, *args), backend.matmul(a, b, *args)

    def insert_all():
        n = payload.shape[1]
        basis = np.zeros((n, n), dtype=np.int64)
        pivots = np.zeros(n, dtype=np.int64)
        rank = 0
        for row in payload:
            rank = backend.reduce_insert(basis, pivots, rank, row.copy(), *args)
        return basis, rank

    return insert_all, insert_all()


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled extension not built; reinstall with Cython available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':8} {'q':>4} {'n':>4} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for kind, F, n, payload in cases(rng):
        fn_py, out_py = run_case(kernels.python_backend, kind, F, payload)
        fn_c, out_c = run_case(kernels.compiled_backend, kind, F, payload)
        if kind == "matmul":
            same = np.array_equal(out_py, out_c)
        else:
            same = np.array_equal(out_py[0], out_c[0]) and list(np.atleast_1d(out_py[1])) == list(np.atleast_1d(out_c[1]))
        t_py = _time(fn_py, args.repeat) * 1e3
        t_c = _time(fn_c, args.repeat) * 1e3
        flag = "" if same else "  MISMATCH"
        print(f"{kind:8} {F.q:>4} {n:>4} {t_py:>10.3f} {t_c:>12.3f} {t_py / t_c:>8.1f}{flag}")


if __name__ == "__main__":
    main()
