"""Scalar arithmetic over GF(p) and GF(2^m).

Elements are plain integers in ``[0, q)``. For GF(2^m) an element's bits are
the coefficients of a polynomial over GF(2), reduced modulo a fixed primitive
polynomial from ``PRIMITIVE_POLYNOMIALS``. Every operation below accepts numpy
arrays and broadcasts.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

PRIME = 0
BINARY_EXT = 1

# Primitive polynomials, bit i = coefficient of x^i. x is a generator of the
# multiplicative group for each of these, which is checked when tables are built.
PRIMITIVE_POLYNOMIALS = {
    1: 0b11,  # x + 1
    2: 0x7,  # x^2 + x + 1
    3: 0xB,  # x^3 + x + 1
    4: 0x13,  # x^4 + x + 1
    5: 0x25,  # x^5 + x^2 + 1
    6: 0x43,  # x^6 + x + 1
    7: 0x89,  # x^7 + x^3 + 1
    8: 0x11D,  # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,  # x^9 + x^4 + 1
    10: 0x409,  # x^10 + x^3 + 1
    11: 0x805,  # x^11 + x^2 + 1
    12: 0x1053,  # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,  # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,  # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,  # x^15 + x + 1
    16: 0x1100B,  # x^16 + x^12 + x^3 + x + 1
}

MAX_ORDER = 1 << 16


class FieldError(ValueError):
    pass


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


class Field:
    """GF(q) for q prime or q = 2^m, with q <= 2^16.

    Instances are interned: ``Field(256) is Field(256)``.
    """

    __slots__ = ("q", "kind", "m", "poly", "exp", "log", "inv_table", "kernel_args")

    def __new__(cls, q: int) -> "Field":
        return _field(int(q))

    def __reduce__(self):
        return (Field, (self.q,))

    def __repr__(self) -> str:
        return f"Field({self.q})"

    @property
    def char(self) -> int:
        return 2 if self.kind == BINARY_EXT else self.q

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    def asarray(self, a) -> np.ndarray:
        arr = np.asarray(a, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.q):
            raise FieldError(f"entries outside [0, {self.q})")
        return arr

    def add(self, a, b):
        if self.kind == BINARY_EXT:
            return np.bitwise_xor(a, b)
        return (np.asarray(a, dtype=np.int64) + b) % self.q

    def sub(self, a, b):
        if self.kind == BINARY_EXT:
            return np.bitwise_xor(a, b)
        return (np.asarray(a, dtype=np.int64) - b) % self.q

    def neg(self, a):
        if self.kind == BINARY_EXT:
            return np.asarray(a, dtype=np.int64)
        return (-np.asarray(a, dtype=np.int64)) % self.q

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.kind == PRIME:
            return (a * b) % self.q
        out = self.exp[self.log[a] + self.log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse")
        return self.inv_table[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def dot(self, a, b):
        """Matrix product over the field for 1-D/2-D arrays (numpy semantics)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.kind == PRIME:
            # chunk the inner dimension so int64 accumulation cannot overflow
            step = max(1, (1 << 62) // ((self.q - 1) ** 2))
            inner = a.shape[-1]
            if inner <= step:
                return (a @ b) % self.q
            out = 0
            for lo in range(0, inner, step):
                out = (out + a[..., lo : lo + step] @ b[lo : lo + step]) % self.q
            return out
        a2 = a if a.ndim == 2 else a[None, :]
        b2 = b if b.ndim == 2 else b[:, None]
        out = np.zeros((a2.shape[0], b2.shape[1]), dtype=np.int64)
        for l in range(a2.shape[1]):
            out ^= self.mul(a2[:, l, None], b2[None, l, :])
        if a.ndim == 1 and b.ndim == 1:
            return out[0, 0]
        if a.ndim == 1:
            return out[0]
        if b.ndim == 1:
            return out[:, 0]
        return out

    def random(self, rng: np.random.Generator, size=None):
        return rng.integers(0, self.q, size=size, dtype=np.int64)

    def random_nonzero_vector(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform draw from GF(q)^n minus the zero vector (n >= 1)."""
        while True:
            v = rng.integers(0, self.q, size=n, dtype=np.int64)
            if v.any():
                return v


@lru_cache(maxsize=None)
def _field(q: int) -> Field:
    if q < 2 or q > MAX_ORDER:
        raise FieldError(f"field order {q} outside [2, {MAX_ORDER}]")
    self = object.__new__(Field)
    self.q = q
    if _is_prime(q):
        self.kind = PRIME
        self.m = 1
        self.poly = 0
        self.exp = np.zeros(1, dtype=np.int64)
        self.log = np.zeros(1, dtype=np.int64)
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = pow(a, q - 2, q)
        self.inv_table = inv
    elif q & (q - 1) == 0:
        m = q.bit_length() - 1
        self.kind = BINARY_EXT
        self.m = m
        self.poly = PRIMITIVE_POLYNOMIALS[m]
        self.exp, self.log = _log_tables(m, self.poly)
        inv = np.zeros(q, dtype=np.int64)
        nz = np.arange(1, q)
        inv[1:] = self.exp[(q - 1 - self.log[nz]) % (q - 1)]
        self.inv_table = inv
    else:
        raise FieldError(f"{q} is neither prime nor a power of two")
    for arr in (self.exp, self.log, self.inv_table):
        arr.setflags(write=False)
    self.kernel_args = (q, self.kind, self.exp, self.log, self.inv_table)
    return self


def _log_tables(m: int, poly: int) -> tuple[np.ndarray, np.ndarray]:
    q = 1 << m
    exp = np.zeros(2 * q, dtype=np.int64)
    log = np.zeros(q, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        exp[i] = x
        if i and x == 1:
            raise FieldError(f"polynomial {poly:#x} is not primitive")
        log[x] = i
        x <<= 1
        if x & q:
            x ^= poly
    if x != 1:
        raise FieldError(f"polynomial {poly:#x} is not primitive")
    # doubled so log[a] + log[b] never needs a modulo
    exp[q - 1 : 2 * (q - 1)] = exp[: q - 1]
    return exp, log
