"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback. Set ``SMSM_KERNELS=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

python_backend = _pykernels

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("SMSM_KERNELS", "").lower() != "python":
    backend = compiled_backend
else:
    backend = python_backend

BACKEND = backend.NAME
rref_inplace = backend.rref_inplace
reduce_insert = backend.reduce_insert

# numpy's vectorised product-then-mod wins for large prime-field products
_PRIME_CUTOVER = 16 ** 3


def matmul(a, b, q, kind, exp, log, inv):
    if kind == _pykernels.PRIME and a.shape[0] * a.shape[1] * b.shape[1] >= _PRIME_CUTOVER:
        return python_backend.matmul(a, b, q, kind, exp, log, inv)
    return backend.matmul(a, b, q, kind, exp, log, inv)
