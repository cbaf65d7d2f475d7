"""Linear coset codes for individual secrecy.

A (k, w) code C with generator G (w x k) partitions GF(q)^k into q^(k-w)
cosets. A message column m of length k is encoded as

    x = m[:k'] @ Gstar + m[k':] @ G,        k' = k - w

so the first k' symbols (the coset index) equal the syndrome H @ x, and the
last w symbols pick the word inside the coset. If every w columns of G are
linearly independent, any w coordinates of x reveal nothing about the coset
index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import gf
from .field import Field


class InvalidGeneratorError(ValueError):
    pass


class InfeasibleError(ValueError):
    pass


CODE_HEADER = "smsm-coset-code 1"


@dataclass(frozen=True, eq=False)
class CosetCode:
    field: Field
    k: int
    w: int
    H: np.ndarray
    G: np.ndarray
    Gstar: np.ndarray
    _encoder: np.ndarray = dc_field(repr=False, default=None)
    _decoder: np.ndarray = dc_field(repr=False, default=None)

    def __post_init__(self):
        for name in ("H", "G", "Gstar"):
            arr = np.array(getattr(self, name), dtype=np.int64).reshape(-1, self.k)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        validate(self)
        enc = np.vstack([self.Gstar, self.G])
        dec = gf.invert(self.field, enc)
        enc.setflags(write=False)
        dec.setflags(write=False)
        object.__setattr__(self, "_encoder", enc)
        object.__setattr__(self, "_decoder", dec)

    @property
    def kp(self) -> int:
        """Width of the coset index, k - w."""
        return self.k - self.w

    @property
    def degenerate(self) -> bool:
        """w = 0: the code is the identity map and protects nothing."""
        return self.w == 0

    @property
    def encoder_matrix(self) -> np.ndarray:
        """The stacked k x k matrix [Gstar; G]; x = m @ encoder_matrix."""
        return self._encoder

    def __eq__(self, other):
        if not isinstance(other, CosetCode):
            return NotImplemented
        return (
            self.field is other.field
            and (self.k, self.w) == (other.k, other.w)
            and np.array_equal(self.H, other.H)
            and np.array_equal(self.G, other.G)
            and np.array_equal(self.Gstar, other.Gstar)
        )

    __hash__ = None


def validate(code: CosetCode) -> None:
    """Raise InvalidGeneratorError unless every structural invariant holds."""
    F, k, w = code.field, code.k, code.w
    if not 0 <= w < k:
        raise InvalidGeneratorError(f"need 0 <= w < k, got k={k}, w={w}")
    kp = k - w
    if code.H.shape != (kp, k) or code.G.shape != (w, k) or code.Gstar.shape != (kp, k):
        raise InvalidGeneratorError("matrix shapes do not match (k, w)")
    for name in ("H", "G", "Gstar"):
        F.asarray(getattr(code, name))
    if gf.rank(F, code.H) != kp:
        raise InvalidGeneratorError("H is rank deficient")
    if w and gf.rank(F, code.G) != w:
        raise InvalidGeneratorError("G is rank deficient")
    if w and gf.matmul(F, code.H, code.G.T).any():
        raise InvalidGeneratorError("H @ G^T != 0")
    if not np.array_equal(gf.matmul(F, code.H, code.Gstar.T), np.eye(kp, dtype=np.int64)):
        raise InvalidGeneratorError("H @ Gstar^T != I")


def construct_from_generator(G, field: Field) -> CosetCode:
    """Build H and Gstar from a generator matrix.

    H is the row-reduced basis of the dual code and row j of Gstar is the
    particular solution of H @ g = e_j with free variables zero, so the result
    depends only on G.
    """
    G = np.array(G, dtype=np.int64, ndmin=2)
    if G.size == 0:
        k = G.shape[1]
        G = np.zeros((0, k), dtype=np.int64)
    w, k = G.shape
    if w >= k:
        raise InvalidGeneratorError(f"need w < k, got {w} x {k} generator")
    if w and gf.rank(field, G) < w:
        raise InvalidGeneratorError("generator rows are linearly dependent")
    H = gf.nullspace_basis(field, G) if w else np.eye(k, dtype=np.int64)
    kp = k - w
    Gstar = np.zeros((kp, k), dtype=np.int64)
    for j in range(kp):
        e = np.zeros(kp, dtype=np.int64)
        e[j] = 1
        Gstar[j] = gf.solve_particular(field, H, e)
    return CosetCode(field, k, w, H, G, Gstar)


def encode_column(code: CosetCode, m) -> np.ndarray:
    m = np.asarray(m, dtype=np.int64)
    if m.shape != (code.k,):
        raise ValueError(f"message column must have length {code.k}")
    return gf.matmul(code.field, m[None, :], code.encoder_matrix)[0]


def decode_column(code: CosetCode, x) -> np.ndarray:
    """Recover the message column: syndrome first, then the within-coset index."""
    F = code.field
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (code.k,):
        raise ValueError(f"codeword column must have length {code.k}")
    syndrome = gf.matmul(F, code.H, x[:, None])[:, 0]
    if code.w == 0:
        return syndrome
    rest = F.sub(x, gf.matmul(F, syndrome[None, :], code.Gstar)[0])
    r = gf.solve_particular(F, code.G.T, rest)
    return np.concatenate([syndrome, r])


def encode_matrix(code: CosetCode, M) -> np.ndarray:
    """Encode each column of a k x c message matrix independently."""
    M = np.asarray(M, dtype=np.int64)
    if M.ndim != 2 or M.shape[0] != code.k:
        raise ValueError(f"message matrix must be {code.k} x c, got {M.shape}")
    return gf.matmul(code.field, code.encoder_matrix.T, M)


def decode_matrix(code: CosetCode, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != code.k:
        raise ValueError(f"codeword matrix must be {code.k} x c, got {X.shape}")
    return gf.matmul(code.field, code._decoder.T, X)


def check_columns(code: CosetCode) -> bool:
    """True iff every w columns of G are linearly independent."""
    return column_witness(code.field, code.G) is None


def column_witness(field: Field, G) -> tuple[int, ...] | None:
    """First w-subset of columns of G that is rank deficient, or None."""
    G = np.asarray(G, dtype=np.int64)
    w, k = G.shape
    if w == 0:
        return None
    for cols in itertools.combinations(range(k), w):
        if gf.rank(field, G[:, cols]) < w:
            return cols
    return None


def min_k_bound(rho_sd: int, rho_sz: int) -> int:
    """Smallest k for a binary coset code: ceil(rho_sd / (rho_sd - rho_sz))."""
    if rho_sz < 0 or rho_sd <= rho_sz:
        raise InfeasibleError(f"no secure positive rate with rho(s,d)={rho_sd}, rho(s,z)={rho_sz}")
    return -(-rho_sd // (rho_sd - rho_sz))


def search_code(k: int, w: int, field: Field, budget: int = 1 << 16, seed: int = 0) -> CosetCode | None:
    """Find a generator passing the column check (every w columns of G independent).

    Exhaustive in lexicographic order when q^(w*k) <= budget, otherwise
    ``budget`` uniformly random generators. Returns None when nothing passes.
    """
    if not 0 <= w < k:
        raise ValueError(f"need 0 <= w < k, got k={k}, w={w}")
    if w == 0:
        return construct_from_generator(np.zeros((0, k), dtype=np.int64), field)
    q = field.q
    total = q ** (w * k)
    if total <= budget:
        candidates = (
            np.array(digits, dtype=np.int64).reshape(w, k)
            for digits in itertools.product(range(q), repeat=w * k)
        )
    else:
        rng = np.random.default_rng(seed)
        candidates = (field.random(rng, (w, k)) for _ in range(budget))
    for G in candidates:
        if gf.rank(field, G) == w and column_witness(field, G) is None:
            return construct_from_generator(G, field)
    return None


def format_code(code: CosetCode) -> str:
    F = code.field
    parts = [
        CODE_HEADER,
        f"{F.q} {code.k} {code.w}",
        "# H",
        gf.format_matrix(gf.FieldMatrix(F, code.H.reshape(code.kp, code.k))),
        "# G",
        gf.format_matrix(gf.FieldMatrix(F, code.G.reshape(code.w, code.k))),
        "# Gstar",
        gf.format_matrix(gf.FieldMatrix(F, code.Gstar.reshape(code.kp, code.k))),
    ]
    return "\n".join(p.rstrip("\n") for p in parts) + "\n"


def parse_code(text: str) -> CosetCode:
    """Parse a code descriptor and re-validate it; raises ValueError on any inconsistency."""
    lines = iter(text.splitlines(keepends=True))
    first = next((l.strip() for l in lines if l.strip()), "")
    if first != CODE_HEADER:
        raise ValueError(f"not a coset code descriptor (header {first!r})")
    header = next((l.split("#", 1)[0].split() for l in lines if l.split("#", 1)[0].strip()), None)
    if not header or len(header) != 3:
        raise ValueError("missing 'q k w' line")
    q, k, w = (int(t) for t in header)
    mats = [gf.parse_matrix(lines) for _ in range(3)]
    field = Field(q)
    for name, m in zip(("H", "G", "Gstar"), mats):
        if m.field is not field:
            raise ValueError(f"{name} is over GF({m.field.q}), header says GF({q})")
    H, G, Gstar = (m.data for m in mats)
    return CosetCode(field, k, w, H, G, Gstar)


def load_code(path: str | Path) -> CosetCode:
    return parse_code(Path(path).read_text())


def save_code(path: str | Path, code: CosetCode) -> None:
    Path(path).write_text(format_code(code))
