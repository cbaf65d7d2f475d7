"""Eavesdropper observations and exact leakage by full enumeration.

Leakage is computed for a single column: columns of a codeword matrix are
encoded independently, so one column carries all the structure. Every
(message, randomness) pair of an encoder is equally likely, which keeps all
probabilities as integer counts over a common denominator. ``I = 0`` is decided
by an integer independence test, never by a float tolerance.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import gf
from .binning import INDIVIDUAL, BinCodebook, _to_bits, injective
from .coset import CosetCode, construct_from_generator
from .field import Field

DEFAULT_ENUMERATION_CAP = 1 << 20


class EnumerationInfeasible(ValueError):
    pass


# --- encoders as equiprobable column tables ---------------------------------


def encoder_field(encoder) -> Field:
    return encoder.field if isinstance(encoder, CosetCode) else Field(2)


def encoder_k(encoder) -> int:
    return encoder.k


def encoder_name(encoder) -> str:
    if isinstance(encoder, CosetCode):
        return f"coset(q={encoder.field.q},k={encoder.k},w={encoder.w})"
    kind = "partition" if encoder.partition else "iid"
    return f"binning({encoder.mode},{kind},k={encoder.k},w={encoder.w},n={encoder.n},seed={encoder.seed})"


_TABLES: dict = {}
_MI_CACHE: dict = {}


def column_table(encoder, cap: int = DEFAULT_ENUMERATION_CAP) -> tuple[np.ndarray, np.ndarray]:
    """(messages, codewords) rows, each row pair equally likely.

    Rows enumerate every message column (and, for strong codebooks, every
    within-bin choice).
    """
    key = id(encoder)
    hit = _TABLES.get(key)
    if hit is not None and hit[0] is encoder:
        return hit[1], hit[2]
    if isinstance(encoder, CosetCode):
        size = encoder.field.q**encoder.k
        if size > cap:
            raise EnumerationInfeasible(f"{size} message columns exceed cap {cap}")
        msgs = gf.all_vectors(encoder.field, encoder.k)
        cws = gf.matmul(encoder.field, msgs, encoder.encoder_matrix)
    elif isinstance(encoder, BinCodebook):
        per_msg = 1 if encoder.mode == INDIVIDUAL else encoder.delta
        size = (1 << encoder.k) * per_msg
        if size > cap:
            raise EnumerationInfeasible(f"{size} (message, randomness) pairs exceed cap {cap}")
        values = np.arange(1 << encoder.k)
        msgs = _to_bits(values, encoder.k).astype(np.int64)
        if encoder.mode == INDIVIDUAL:
            cws = encoder.codewords[values >> encoder.w, values & ((1 << encoder.w) - 1)]
        else:
            cws = encoder.codewords.reshape(-1, encoder.n)
            msgs = np.repeat(msgs, per_msg, axis=0)
        cws = cws.astype(np.int64)
    else:
        raise TypeError(f"unsupported encoder {type(encoder).__name__}")
    msgs.setflags(write=False)
    cws.setflags(write=False)
    if len(_TABLES) > 64:
        _TABLES.clear()
    _TABLES[key] = (encoder, msgs, cws)
    return msgs, cws


# --- mutual information -------------------------------------------------------


@dataclass(frozen=True)
class Leakage:
    bits: float
    exact_zero: bool

    def __float__(self) -> float:
        return self.bits


def _row_ids(a: np.ndarray, radix: int | None = None) -> tuple[np.ndarray, int]:
    """Dense class ids 0..n-1 for the distinct rows of ``a``."""
    if a.shape[1] == 0:
        return np.zeros(a.shape[0], dtype=np.int64), 1
    if radix is not None and a.shape[1] * math.log2(radix) < 62:
        key = np.zeros(a.shape[0], dtype=np.int64)
        for col in a.T:
            key = key * radix + col
        _, inv = np.unique(key, return_inverse=True)
    else:
        _, inv = np.unique(a, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    return inv, int(inv.max()) + 1


def mutual_information_counts(a_ids: np.ndarray, z_ids: np.ndarray) -> Leakage:
    """Exact I(A; Z) for equally likely samples given as integer class ids."""
    N = a_ids.size
    a_ids, na = _row_ids(a_ids[:, None], int(a_ids.max()) + 1)
    z_ids, nz = _row_ids(z_ids[:, None], int(z_ids.max()) + 1)
    ca = np.bincount(a_ids, minlength=na)
    cz = np.bincount(z_ids, minlength=nz)
    pairs, cj = np.unique(a_ids * nz + z_ids, return_counts=True)
    pa, pz = pairs // nz, pairs % nz
    dt = np.int64 if N < 1 << 31 else object  # counts are <= N, so products fit
    lhs = cj.astype(dt) * N
    rhs = ca[pa].astype(dt) * cz[pz]
    independent = pairs.size == na * nz and bool(np.all(lhs == rhs))
    if independent:
        return Leakage(0.0, True)
    bits = float(np.sum(cj / N * (np.log2(cj) + math.log2(N) - np.log2(ca[pa]) - np.log2(cz[pz]))))
    return Leakage(max(bits, 0.0), False)


def linear_mutual_information(code: CosetCode, functionals, subset: Sequence[int]) -> Leakage:
    """I(M_J; F x) for a coset code from ranks alone.

    With uniform m and z = m A (A = E F^T), I(M_J; Z) = (rank A - rank A_rest)
    log2 q, where A_rest drops the rows of A indexed by J.
    """
    F = code.field
    functionals = np.asarray(functionals, dtype=np.int64).reshape(-1, code.k)
    subset = sorted(set(subset))
    if functionals.shape[0] == 0 or not subset:
        return Leakage(0.0, True)
    A = gf.matmul(F, code.encoder_matrix, functionals.T)
    rest = [i for i in range(code.k) if i not in subset]
    drop = gf.rank(F, A) - (gf.rank(F, A[rest]) if rest else 0)
    return Leakage(drop * math.log2(F.q), drop == 0)


def exact_mutual_information(
    encoder, functionals, subset: Sequence[int], cap: int = DEFAULT_ENUMERATION_CAP,
    method: str = "auto",
) -> Leakage:
    """I(M_J; F x) for one column, x the encoder output and J = ``subset``.

    ``method="enumerate"`` always tabulates every equally likely column;
    ``"auto"`` uses the rank formula for coset codes.
    """
    if method not in ("auto", "enumerate", "linear"):
        raise ValueError(f"unknown method {method!r}")
    if method == "linear" or (method == "auto" and isinstance(encoder, CosetCode)):
        if not isinstance(encoder, CosetCode):
            raise TypeError("the rank formula needs a coset code")
        return linear_mutual_information(encoder, functionals, subset)
    F = encoder_field(encoder)
    msgs, cws = column_table(encoder, cap)
    subset = list(subset)
    functionals = np.asarray(functionals, dtype=np.int64).reshape(-1, cws.shape[1])
    if functionals.shape[0] == 0 or not subset:
        return Leakage(0.0, True)
    key = (id(encoder), functionals.tobytes(), functionals.shape, tuple(subset))
    hit = _MI_CACHE.get(key)
    if hit is not None and hit[0] is encoder:
        return hit[1]
    z = gf.matmul(F, cws, functionals.T)
    a_ids, _ = _row_ids(msgs[:, subset], F.q)
    z_ids, _ = _row_ids(z, F.q)
    result = mutual_information_counts(a_ids, z_ids)
    if len(_MI_CACHE) > 4096:
        _MI_CACHE.clear()
    _MI_CACHE[key] = (encoder, result)
    return result


def coordinate_functionals(n: int, positions: Iterable[int]) -> np.ndarray:
    positions = list(positions)
    out = np.zeros((len(positions), n), dtype=np.int64)
    out[np.arange(len(positions)), positions] = 1
    return out


def coset_consistency_count(code: CosetCode, functionals, values) -> int:
    """Number of cosets holding at least one word x with F x = values."""
    F = code.field
    functionals = np.asarray(functionals, dtype=np.int64).reshape(-1, code.k)
    values = np.asarray(values, dtype=np.int64).reshape(-1)
    if functionals.shape[0] == 0:
        return F.q**code.kp
    x0 = gf.solve_particular(F, functionals, values)
    if x0 is None:
        return 0
    null = gf.nullspace_basis(F, functionals)
    if null.shape[0] == 0:
        return 1
    return F.q ** gf.rank(F, gf.matmul(F, code.H, null.T))


# --- observations -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WiretapObservation:
    """Independent linear functionals of the stacked source rows, with their values."""

    edges: tuple
    coding: np.ndarray  # (rank, K) in reduced row-echelon form
    payload: np.ndarray  # (rank, c)
    captured: int
    dropped: int

    @property
    def rank(self) -> int:
        return self.coding.shape[0]


def canonicalize(field: Field, packets: Sequence, total_k: int | None = None, edges=()) -> WiretapObservation:
    """Gaussian elimination over the captured coding vectors (payloads ride along)."""
    packets = list(packets)
    if not packets:
        K = total_k or 0
        return WiretapObservation(tuple(edges), np.zeros((0, K), np.int64), np.zeros((0, 0), np.int64), 0, 0)
    C = np.array([p.coding for p in packets], dtype=np.int64)
    P = np.array([p.payload for p in packets], dtype=np.int64)
    K = C.shape[1]
    R, pivots = gf.rref(field, np.hstack([C, P]))
    r = sum(1 for p in pivots if p < K)
    return WiretapObservation(tuple(edges), R[:r, :K].copy(), R[:r, K:].copy(), len(packets), len(packets) - r)


def project_source(field: Field, coding: np.ndarray, offset: int, k: int) -> np.ndarray:
    """Functionals in the span of ``coding`` that involve only one source's rows.

    Returned as an rref basis of k-vectors over that source's block.
    """
    coding = np.asarray(coding, dtype=np.int64)
    if coding.shape[0] == 0:
        return np.zeros((0, k), dtype=np.int64)
    K = coding.shape[1]
    own = list(range(offset, offset + k))
    other = [c for c in range(K) if c < offset or c >= offset + k]
    R, pivots = gf.rref(field, coding[:, other + own])
    n_other = len(other)
    rows = [i for i, p in enumerate(pivots) if p >= n_other]
    return R[rows, n_other:].copy()


# --- reports --------------------------------------------------------------------


@dataclass(frozen=True)
class LeakageRow:
    wiretap: str
    source: str
    subset: tuple[int, ...]
    bits: float
    exact_zero: bool
    joint: bool = False  # True for the all-messages term I(M_s; Z)


@dataclass
class LeakageReport:
    encoder: str
    wiretap: str
    rows: list = dc_field(default_factory=list)
    exhaustive: bool = True
    flags: list = dc_field(default_factory=list)
    facts: dict = dc_field(default_factory=dict)

    def scoped(self) -> list[LeakageRow]:
        return [r for r in self.rows if not r.joint]

    @property
    def max_bits(self) -> float:
        return max((r.bits for r in self.scoped()), default=0.0)

    @property
    def secure(self) -> bool:
        """Every audited message subset has exactly zero leakage."""
        return all(r.exact_zero for r in self.scoped())

    @property
    def max_joint_bits(self) -> float:
        return max((r.bits for r in self.rows if r.joint), default=0.0)

    def witnesses(self) -> list[LeakageRow]:
        """Leaking rows, largest leakage first."""
        return sorted((r for r in self.scoped() if not r.exact_zero), key=lambda r: -r.bits)

    def per_message(self) -> dict:
        """Largest leakage of each single message, keyed by (source, index)."""
        out: dict = {}
        for r in self.scoped():
            if len(r.subset) == 1:
                key = (r.source, r.subset[0])
                out[key] = max(out.get(key, 0.0), r.bits)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["wiretap", "source", "subset", "joint", "exact_zero", "mi_bits"])
        for r in sorted(self.rows, key=lambda r: (r.wiretap, r.source, r.joint, r.subset)):
            writer.writerow([
                r.wiretap, r.source, " ".join(map(str, r.subset)), int(r.joint),
                int(r.exact_zero), f"{r.bits:.12g}",
            ])
        return buf.getvalue()

    def to_dict(self) -> dict:
        witnesses = self.witnesses()
        return {
            "encoder": self.encoder,
            "wiretap": self.wiretap,
            "exhaustive": self.exhaustive,
            "verdict": "secure" if self.secure else "insecure",
            "max_mi_bits": round(self.max_bits, 12),
            "max_joint_mi_bits": round(self.max_joint_bits, 12),
            "rows": len(self.rows),
            "witness": None if not witnesses else {
                "wiretap": witnesses[0].wiretap,
                "source": witnesses[0].source,
                "subset": list(witnesses[0].subset),
                "mi_bits": round(witnesses[0].bits, 12),
            },
            "flags": list(self.flags),
            "facts": dict(sorted(self.facts.items())),
        }

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def message_subsets(indices: Sequence[int], max_size: int):
    for size in range(1, max_size + 1):
        yield from itertools.combinations(indices, size)


def scope_indices(encoder, scope: str) -> list[int]:
    """Message indices an audit covers: the coset index (first k - w) or all k."""
    if scope == "all":
        return list(range(encoder_k(encoder)))
    if scope == "coset":
        w = encoder.w
        return list(range(encoder_k(encoder) - w))
    raise ValueError(f"unknown scope {scope!r}")


class _Auditor:
    """Evaluates captures against per-source encoders with memoised leakage."""

    def __init__(self, encoders, layout, k_s, scope, cap, field):
        self.audited = set(encoders)
        self.layout = list(layout)
        # sources without an encoder send raw uniform messages
        self.encoders = {
            s: encoders.get(s) or construct_from_generator(np.zeros((0, k), dtype=np.int64), field)
            for s, k in self.layout
        }
        for s, enc in self.encoders.items():
            if encoder_field(enc) is not field:
                raise ValueError(f"encoder for {s} is over GF({encoder_field(enc).q}), network uses GF({field.q})")
        self.k_s = k_s
        self.scope = scope
        self.cap = cap
        self.cache: dict = {}
        offsets, pos = {}, 0
        for s, k in self.layout:
            offsets[s] = pos
            pos += k
        self.offsets = offsets
        self.total_k = pos

    def leakage(self, s, functionals, subset):
        key = (s, functionals.tobytes(), functionals.shape, subset)
        hit = self.cache.get(key)
        if hit is None:
            hit = exact_mutual_information(self.encoders[s], functionals, subset, self.cap)
            self.cache[key] = hit
        return hit

    def masked(self, s) -> bool:
        """Other sources' codeword columns are uniform, so they pad what they touch."""
        return all(isinstance(self.encoders.get(o), CosetCode) for o, _ in self.layout if o != s)

    def joint(self, field, s, coding, subset):
        key = ("joint", s, coding.tobytes(), coding.shape, subset)
        hit = self.cache.get(key)
        if hit is None:
            hit = joint_source_mutual_information(self.encoders, self.layout, field, coding, s, subset, self.cap)
            self.cache[key] = hit
        return hit

    def rows_for(self, label: str, field: Field, coding: np.ndarray) -> list[LeakageRow]:
        rows = []
        for s, k in self.layout:
            if s not in self.audited:
                continue
            enc = self.encoders[s]
            full = tuple(range(k))
            subsets = list(message_subsets(scope_indices(enc, self.scope), self.k_s))
            if self.masked(s):
                funcs = project_source(field, coding, self.offsets[s], k)
                measure = lambda J: self.leakage(s, funcs, J)
            else:
                measure = lambda J: self.joint(field, s, coding, J)
            for subset in subsets:
                lk = measure(subset)
                rows.append(LeakageRow(label, s, subset, lk.bits, lk.exact_zero))
            lk = measure(full)
            rows.append(LeakageRow(label, s, full, lk.bits, lk.exact_zero, joint=True))
        return rows


def _edge_label(edges) -> str:
    return "+".join(f"{u}->{v}#{i}" for u, v, i in edges) or "none"


def _flags(encoders) -> list[str]:
    return [
        f"{s}: w=0 code gives no secrecy"
        for s, enc in sorted(encoders.items())
        if isinstance(enc, CosetCode) and enc.degenerate
    ]


def individual_security_audit(
    encoders: Mapping[str, object],
    run,
    w: int,
    k_s: int = 1,
    scope: str = "coset",
    max_sets: int = 10_000,
    seed: int = 0,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> LeakageReport:
    """Exact leakage for every set of w unit links in a logged RLNC run.

    Eve receives every packet that crossed her links. Sets of exactly w links
    are enumerated: leakage cannot drop when links are added. Above
    ``max_sets`` sets, a seeded sample is audited and the report is marked
    non-exhaustive.
    """
    spec = run.spec
    field = spec.field
    auditor = _Auditor(encoders, spec.sources, k_s, scope, cap, field)
    names = ",".join(f"{s}:{encoder_name(e)}" for s, e in sorted(encoders.items()))
    report = LeakageReport(names, f"any {w} link(s)", flags=_flags(encoders))
    if w <= 0:
        report.facts["wiretap_sets"] = 0
        return report
    edges = spec.unit_edges()
    size = min(w, len(edges))
    total = math.comb(len(edges), size)
    if total <= max_sets:
        sets = itertools.combinations(edges, size)
    else:
        rng = np.random.default_rng(seed)
        sets = (tuple(edges[i] for i in sorted(rng.choice(len(edges), size, replace=False))) for _ in range(max_sets))
        report.exhaustive = False
    by_edge: dict = {}
    for p in run.packets:
        by_edge.setdefault(p.edge, []).append(p)
    count = 0
    for taps in sets:
        count += 1
        captured = [p for e in taps for p in by_edge.get(e, [])]
        obs = canonicalize(field, captured, spec.total_k, taps)
        report.rows += auditor.rows_for(_edge_label(taps), field, obs.coding)
    report.facts["wiretap_sets"] = count
    return report


def audit_capture(
    encoders: Mapping[str, object],
    layout: Sequence[tuple[str, int]],
    field: Field,
    packets: Sequence,
    label: str,
    k_s: int = 1,
    scope: str = "coset",
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> LeakageReport:
    """Audit one explicit capture (e.g. tapped gossip calls)."""
    auditor = _Auditor(encoders, layout, k_s, scope, cap, field)
    K = sum(k for _, k in layout)
    obs = canonicalize(field, packets, K)
    names = ",".join(f"{s}:{encoder_name(e)}" for s, e in sorted(encoders.items()))
    report = LeakageReport(names, label, flags=_flags(encoders))
    report.rows += auditor.rows_for(label, field, obs.coding)
    report.facts["captured"] = obs.captured
    report.facts["independent"] = obs.rank
    return report


def strong_security_audit(
    codebook: BinCodebook, w: int | None = None, max_sets: int = 10_000, seed: int = 0,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> LeakageReport:
    """Exact I(M; Z) when Eve reads w codeword positions, for every position set.

    Finite i.i.d. codebooks are never declared exactly secure by assumption;
    the integer independence test decides. Reliability (injectivity) is
    reported alongside.
    """
    w = codebook.w if w is None else w
    report = LeakageReport(encoder_name(codebook), f"any {w} position(s)")
    report.facts["n"] = codebook.n
    report.facts["injective"] = injective(codebook)
    if w <= 0:
        return report
    n = codebook.n
    total = math.comb(n, w)
    if total <= max_sets:
        sets = itertools.combinations(range(n), w)
    else:
        rng = np.random.default_rng(seed)
        sets = (tuple(sorted(rng.choice(n, w, replace=False))) for _ in range(max_sets))
        report.exhaustive = False
    full = tuple(range(codebook.k))
    for positions in sets:
        funcs = coordinate_functionals(n, positions)
        lk = exact_mutual_information(codebook, funcs, full, cap)
        label = "pos:" + ",".join(map(str, positions))
        # strong secrecy protects all messages jointly: the audited subset is M itself
        report.rows.append(LeakageRow(label, "s", full, lk.bits, lk.exact_zero))
        report.rows.append(LeakageRow(label, "s", full, lk.bits, lk.exact_zero, joint=True))
    return report


def joint_source_mutual_information(
    encoders: Mapping[str, object],
    layout: Sequence[tuple[str, int]],
    field: Field,
    coding,
    source: str,
    subset: Sequence[int],
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Leakage:
    """I(M_{source,J}; C X) with every source's messages enumerated jointly.

    Cross-checks the per-source projection used by the audits; only feasible
    for tiny instances.
    """
    coding = np.asarray(coding, dtype=np.int64)
    tables = [column_table(encoders[s], cap) for s, _ in layout]
    size = math.prod(t[0].shape[0] for t in tables)
    if size > cap:
        raise EnumerationInfeasible(f"{size} joint columns exceed cap {cap}")
    grids = np.meshgrid(*[np.arange(t[0].shape[0]) for t in tables], indexing="ij")
    idx = [g.reshape(-1) for g in grids]
    X = np.hstack([tables[i][1][idx[i]] for i in range(len(tables))])
    which = [s for s, _ in layout].index(source)
    msgs = tables[which][0][idx[which]][:, list(subset)]
    if coding.shape[0] == 0:
        return Leakage(0.0, True)
    z = gf.matmul(field, X, coding.T)
    a_ids, _ = _row_ids(msgs, field.q)
    z_ids, _ = _row_ids(z, field.q)
    return mutual_information_counts(a_ids, z_ids)


def coordinate_audit(
    encoder, w: int | None = None, k_s: int = 1, scope: str = "coset", max_sets: int = 10_000,
    seed: int = 0, cap: int = DEFAULT_ENUMERATION_CAP,
) -> LeakageReport:
    """Eve reads w symbols of one codeword column; every w-subset of positions is audited."""
    w = encoder.w if w is None else w
    n = encoder.k if isinstance(encoder, CosetCode) else encoder.n
    report = LeakageReport(encoder_name(encoder), f"any {w} position(s)")
    if isinstance(encoder, CosetCode):
        report.flags += _flags({"s": encoder})
        witness = None
        if encoder.w:
            from .coset import column_witness

            witness = column_witness(encoder.field, encoder.G)
        report.facts["column_check"] = "pass" if witness is None else "fail"
        if witness is not None:
            report.facts["column_check_witness"] = list(witness)
    if w <= 0:
        return report
    size = min(w, n)
    total = math.comb(n, size)
    if total <= max_sets:
        sets = itertools.combinations(range(n), size)
    else:
        rng = np.random.default_rng(seed)
        sets = (tuple(sorted(rng.choice(n, size, replace=False))) for _ in range(max_sets))
        report.exhaustive = False
    full = tuple(range(encoder_k(encoder)))
    subsets = list(message_subsets(scope_indices(encoder, scope), k_s))
    for positions in sets:
        funcs = coordinate_functionals(n, positions)
        label = "pos:" + ",".join(map(str, positions))
        for J in subsets:
            lk = exact_mutual_information(encoder, funcs, J, cap)
            report.rows.append(LeakageRow(label, "s", J, lk.bits, lk.exact_zero))
        lk = exact_mutual_information(encoder, funcs, full, cap)
        report.rows.append(LeakageRow(label, "s", full, lk.bits, lk.exact_zero, joint=True))
    return report
