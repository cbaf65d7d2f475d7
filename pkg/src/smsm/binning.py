"""Random-binning codebooks over GF(2).

Individual mode (n = k): 2^(k-w) bins, the first k-w message bits pick the
bin and the last w bits pick the codeword. Strong mode (n >= k + w): one bin
per message column, and the encoder picks a codeword uniformly at random
inside it. Each bin holds Delta = 2^(w + ceil(n * epsilon)) codewords.

Two generation modes exist. ``iid`` draws every bit Bernoulli(1/2), which
matches the random-coding construction but is generally not injective.
``partition`` (epsilon = 0 only) splits a seeded random permutation of
GF(2)^n into the bins, which gives an exact bijection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

INDIVIDUAL = "individual"
STRONG = "strong"
DEFAULT_MAX_CELLS = 1 << 24
CODEBOOK_HEADER = "smsm-codebook 1"


class CodebookTooLarge(MemoryError):
    pass


class DecodeError(ValueError):
    pass


class AmbiguousDecodeError(DecodeError):
    def __init__(self, candidates):
        self.candidates = candidates
        super().__init__(f"codeword matches {len(candidates)} messages")


def delta_exponent(w: int, n: int, epsilon: float) -> int:
    # round first so 12 * 0.25 is exactly 3, not 3.0000000000000004
    return w + math.ceil(round(n * epsilon, 9))


@dataclass(frozen=True, eq=False)
class BinCodebook:
    mode: str
    k: int
    w: int
    n: int
    epsilon: float
    seed: int | None
    partition: bool
    codewords: np.ndarray  # (bins, delta, n) of 0/1

    def __post_init__(self):
        cw = np.ascontiguousarray(self.codewords, dtype=np.uint8)
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)
        _validate(self)

    @property
    def num_bins(self) -> int:
        return self.codewords.shape[0]

    @property
    def delta(self) -> int:
        return self.codewords.shape[1]

    @property
    def usable(self) -> int:
        """Codewords per bin the encoder can actually emit."""
        return 1 << self.w if self.mode == INDIVIDUAL else self.delta

    def __eq__(self, other):
        if not isinstance(other, BinCodebook):
            return NotImplemented
        return (
            (self.mode, self.k, self.w, self.n, self.epsilon, self.seed, self.partition)
            == (other.mode, other.k, other.w, other.n, other.epsilon, other.seed, other.partition)
            and np.array_equal(self.codewords, other.codewords)
        )

    __hash__ = None


def _validate(cb: BinCodebook) -> None:
    if cb.mode not in (INDIVIDUAL, STRONG):
        raise ValueError(f"unknown mode {cb.mode!r}")
    if cb.mode == INDIVIDUAL:
        if not (0 <= cb.w < cb.k and cb.n == cb.k):
            raise ValueError("individual mode needs 0 <= w < k and n == k")
        bins = 1 << (cb.k - cb.w)
    else:
        if cb.w < 0 or cb.k < 1 or cb.n < cb.k + cb.w:
            raise ValueError("strong mode needs k >= 1, w >= 0, n >= k + w")
        bins = 1 << cb.k
    delta = 1 << delta_exponent(cb.w, cb.n, cb.epsilon)
    if cb.codewords.shape != (bins, delta, cb.n):
        raise ValueError(f"codeword array {cb.codewords.shape} != {(bins, delta, cb.n)}")
    if cb.codewords.size and cb.codewords.max() > 1:
        raise ValueError("codewords must be binary")
    if cb.partition:
        ints = _to_ints(cb.codewords.reshape(-1, cb.n))
        if ints.size != 1 << cb.n or np.unique(ints).size != ints.size:
            raise ValueError("partition codebook must list every word of GF(2)^n exactly once")


def _to_ints(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[-1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return (bits.astype(np.int64) * weights).sum(axis=-1)


def _to_bits(ints, n: int) -> np.ndarray:
    ints = np.asarray(ints, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ints[..., None] >> shifts) & 1).astype(np.uint8)


def _check_budget(bins: int, delta: int, n: int, max_cells: int) -> None:
    cells = bins * delta * n
    if cells > max_cells:
        raise CodebookTooLarge(f"{bins} bins x {delta} x {n} = {cells} cells exceeds cap {max_cells}")


def _build(mode, k, w, n, epsilon, seed, partition, bins, max_cells) -> BinCodebook:
    delta = 1 << delta_exponent(w, n, epsilon)
    _check_budget(bins, delta, n, max_cells)
    rng = np.random.default_rng(seed)
    if partition:
        if bins * delta != 1 << n:
            raise ValueError("partition mode needs bins * Delta == 2^n (epsilon = 0)")
        perm = rng.permutation(1 << n)
        codewords = _to_bits(perm.reshape(bins, delta), n)
    else:
        codewords = rng.integers(0, 2, size=(bins, delta, n), dtype=np.uint8)
    return BinCodebook(mode, k, w, n, float(epsilon), seed, partition, codewords)


def generate_individual(
    k: int, w: int, epsilon: float = 0.0, seed: int = 0, partition: bool = False,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> BinCodebook:
    if not 0 < w < k:
        raise ValueError(f"need 0 < w < k, got k={k}, w={w}")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return _build(INDIVIDUAL, k, w, k, epsilon, seed, partition, 1 << (k - w), max_cells)


def generate_strong(
    k: int, w: int, epsilon: float = 0.0, seed: int = 0, n: int | None = None,
    partition: bool = False, max_cells: int = DEFAULT_MAX_CELLS,
) -> BinCodebook:
    if k < 1 or w < 1:
        raise ValueError(f"need k >= 1 and w >= 1, got k={k}, w={w}")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    n = k + w if n is None else n
    if n < k + w:
        raise ValueError(f"strong mode needs n >= k + w = {k + w}")
    return _build(STRONG, k, w, n, epsilon, seed, partition, 1 << k, max_cells)


def from_coset_code(code) -> BinCodebook:
    """Partition codebook whose bins are the cosets of a binary CosetCode."""
    from .coset import encode_matrix

    if code.field.q != 2:
        raise ValueError("binning codebooks are binary")
    k, w = code.k, code.w
    msgs = _to_bits(np.arange(1 << k), k).astype(np.int64)
    X = encode_matrix(code, msgs.T).T
    codewords = X.reshape(1 << (k - w), 1 << w, k)
    return BinCodebook(INDIVIDUAL, k, w, k, 0.0, None, True, codewords)


def _split(cb: BinCodebook, m) -> tuple[int, int]:
    m = np.asarray(m, dtype=np.int64)
    if m.shape != (cb.k,) or (m.size and m.max() > 1) or (m.size and m.min() < 0):
        raise ValueError(f"message must be a length-{cb.k} bit vector")
    value = int(_to_ints(m))
    if cb.mode == INDIVIDUAL:
        return value >> cb.w, value & ((1 << cb.w) - 1)
    return value, 0


def encode_individual(cb: BinCodebook, m) -> np.ndarray:
    if cb.mode != INDIVIDUAL:
        raise ValueError("not an individual-mode codebook")
    b, e = _split(cb, m)
    return cb.codewords[b, e].copy()


def encode_strong(cb: BinCodebook, m, randomness) -> np.ndarray:
    """``randomness`` is either a within-bin index or a numpy Generator."""
    if cb.mode != STRONG:
        raise ValueError("not a strong-mode codebook")
    b, _ = _split(cb, m)
    if isinstance(randomness, np.random.Generator):
        e = int(randomness.integers(cb.delta))
    else:
        e = int(randomness)
        if not 0 <= e < cb.delta:
            raise ValueError(f"within-bin index {e} outside [0, {cb.delta})")
    return cb.codewords[b, e].copy()


def lookup(cb: BinCodebook, x) -> list[tuple[int, int]]:
    """All emit-able (bin, index) positions holding codeword x."""
    x = np.asarray(x, dtype=np.uint8)
    usable = cb.codewords[:, : cb.usable]
    hits = np.argwhere((usable == x).all(axis=-1))
    return [(int(b), int(e)) for b, e in hits]


def _message(cb: BinCodebook, b: int, e: int) -> tuple[int, ...]:
    value = (b << cb.w) | e if cb.mode == INDIVIDUAL else b
    return tuple(int(v) for v in _to_bits(value, cb.k))


def decode_individual(cb: BinCodebook, x) -> np.ndarray:
    if cb.mode != INDIVIDUAL:
        raise ValueError("not an individual-mode codebook")
    return _decode(cb, x)


def decode_strong(cb: BinCodebook, x) -> np.ndarray:
    if cb.mode != STRONG:
        raise ValueError("not a strong-mode codebook")
    return _decode(cb, x)


def _decode(cb, x):
    messages = sorted({_message(cb, b, e) for b, e in lookup(cb, x)})
    if not messages:
        raise DecodeError("not a codeword of this codebook")
    if len(messages) > 1:
        raise AmbiguousDecodeError([np.array(m, dtype=np.int64) for m in messages])
    return np.array(messages[0], dtype=np.int64)


def injective(cb: BinCodebook) -> bool:
    """True when no emit-able codeword is shared by two different messages."""
    usable = cb.codewords[:, : cb.usable]
    ints = _to_ints(usable)
    if cb.mode == INDIVIDUAL:
        return np.unique(ints).size == ints.size
    # strong mode: repeats inside one bin are harmless
    per_bin = [np.unique(row) for row in ints]
    flat = np.concatenate(per_bin)
    return np.unique(flat).size == flat.size


@dataclass(frozen=True)
class ShellReport:
    positions: tuple[int, ...]
    values: tuple[int, ...]
    counts: np.ndarray
    total: int
    mean: float
    min: int
    max: int


def shell_report(cb: BinCodebook, positions, values) -> ShellReport:
    """Per-bin number of stored codewords agreeing with ``values`` at ``positions``."""
    positions = tuple(int(p) for p in positions)
    values = tuple(int(v) for v in values)
    if len(positions) != cb.w or len(values) != cb.w:
        raise ValueError(f"observation must have exactly w={cb.w} positions and values")
    if len(set(positions)) != len(positions) or any(not 0 <= p < cb.n for p in positions):
        raise ValueError("positions must be distinct indices into the codeword")
    if cb.w:
        match = (cb.codewords[:, :, list(positions)] == np.array(values, dtype=np.uint8)).all(axis=-1)
    else:
        match = np.ones(cb.codewords.shape[:2], dtype=bool)
    counts = match.sum(axis=1)
    return ShellReport(
        positions, values, counts, int(counts.sum()), float(counts.mean()),
        int(counts.min()), int(counts.max()),
    )


@dataclass(frozen=True)
class ConcentrationResult:
    passed: bool
    fraction: float
    expected: float
    mean_count: float
    min_count: int
    max_count: int
    trials: int
    threshold: float
    varepsilon: float


def expected_shell_count(cb: BinCodebook) -> float:
    """Delta * 2^-w, i.e. 2^ceil(n * epsilon)."""
    return cb.delta / (1 << cb.w)


def concentration_check(
    cb: BinCodebook, trials: int, varepsilon: float, threshold: float = 0.9, seed: int = 0
) -> ConcentrationResult:
    """Fraction of (observation, bin) pairs whose shell count lies within
    (1 +- varepsilon) of the expected count, over random w-position observations.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    target = expected_shell_count(cb)
    lo, hi = (1 - varepsilon) * target, (1 + varepsilon) * target
    inside = 0
    pairs = 0
    all_counts = []
    for _ in range(trials):
        positions = rng.choice(cb.n, size=cb.w, replace=False)
        values = rng.integers(0, 2, size=cb.w)
        counts = shell_report(cb, positions, values).counts
        inside += int(((counts >= lo) & (counts <= hi)).sum())
        pairs += counts.size
        all_counts.append(counts)
    counts = np.concatenate(all_counts)
    fraction = inside / pairs
    return ConcentrationResult(
        fraction >= threshold, fraction, target, float(counts.mean()), int(counts.min()),
        int(counts.max()), trials, threshold, varepsilon,
    )


def format_codebook(cb: BinCodebook) -> str:
    lines = [
        CODEBOOK_HEADER,
        f"mode {cb.mode}",
        f"k {cb.k}",
        f"w {cb.w}",
        f"n {cb.n}",
        f"epsilon {cb.epsilon!r}",
        f"seed {'none' if cb.seed is None else cb.seed}",
        f"delta {cb.delta}",
        f"partition {int(cb.partition)}",
    ]
    for b in range(cb.num_bins):
        lines.append(" ".join("".join(str(int(v)) for v in word) for word in cb.codewords[b]))
    return "\n".join(lines) + "\n"


def parse_codebook(text: str) -> BinCodebook:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines or lines[0] != CODEBOOK_HEADER:
        raise ValueError("not a codebook dump")
    meta = {}
    for line in lines[1:9]:
        key, _, value = line.partition(" ")
        meta[key] = value
    try:
        k, w, n, delta = (int(meta[key]) for key in ("k", "w", "n", "delta"))
        epsilon = float(meta["epsilon"])
        seed = None if meta["seed"] == "none" else int(meta["seed"])
        partition = bool(int(meta["partition"]))
        mode = meta["mode"]
    except KeyError as exc:
        raise ValueError(f"codebook header missing {exc}") from None
    if delta != 1 << delta_exponent(w, n, epsilon):
        raise ValueError(f"delta {delta} inconsistent with w={w}, n={n}, epsilon={epsilon}")
    bins = [row.split() for row in lines[9:]]
    try:
        codewords = np.array([[[int(ch) for ch in word] for word in row] for row in bins], dtype=np.uint8)
    except ValueError:
        raise ValueError("codewords must be bit strings of equal length") from None
    return BinCodebook(mode, k, w, n, epsilon, seed, partition, codewords)


def save_codebook(path: str | Path, cb: BinCodebook) -> None:
    Path(path).write_text(format_codebook(cb))


def load_codebook(path: str | Path) -> BinCodebook:
    return parse_codebook(Path(path).read_text())
