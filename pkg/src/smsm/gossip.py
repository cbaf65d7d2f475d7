"""Algebraic gossip in the random phone call model.

Rounds are synchronous. In every round each node calls one peer drawn from a
stream that depends only on (seed, round), so the call pattern is oblivious to
the data. A call moves a packet caller -> callee (PUSH), callee -> caller (PULL)
or both; a packet flows only if its sender already holds something. Packets
are uniform nonzero combinations of the sender's subspace at the start of the
round.
"""

from __future__ import annotations

import csv
import io
import math
import zlib
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import adversary, gf
from .coset import CosetCode, encode_matrix
from .field import Field
from .network import Packet, Subspace
from .seeds import substream

PUSH = "push"
PULL = "pull"
PUSH_PULL = "push-pull"
EXCHANGES = (PUSH, PULL, PUSH_PULL)


def complete_graph_calls(v: int, rng: np.random.Generator) -> np.ndarray:
    """Callee of every node: uniform over the other v - 1 nodes."""
    callee = rng.integers(0, v - 1, size=v)
    return callee + (callee >= np.arange(v))


@dataclass(frozen=True)
class GossipConfig:
    v: int
    sources: tuple = ()  # (node, k) pairs
    q: int = 2
    exchange: str = PUSH_PULL
    payload: int = 1
    max_rounds: int = 500
    seed: int = 0
    topology: Callable[[int, np.random.Generator], np.ndarray] = dc_field(
        default=complete_graph_calls, compare=False, repr=False
    )

    def __post_init__(self):
        srcs = self.sources.items() if isinstance(self.sources, Mapping) else self.sources
        object.__setattr__(self, "sources", tuple((int(s), int(k)) for s, k in srcs))
        if self.v < 2:
            raise ValueError("gossip needs at least 2 nodes")
        if self.exchange not in EXCHANGES:
            raise ValueError(f"exchange must be one of {EXCHANGES}")
        nodes = [s for s, _ in self.sources]
        if len(set(nodes)) != len(nodes):
            raise ValueError("a node is listed as a source twice")
        for s, k in self.sources:
            if not 0 <= s < self.v:
                raise ValueError(f"source {s} is not a node")
            if k < 0:
                raise ValueError(f"source {s} has negative k")
        Field(self.q)
        if self.payload < 1:
            raise ValueError("payload length must be >= 1")

    @property
    def field(self) -> Field:
        return Field(self.q)

    @property
    def total_k(self) -> int:
        return sum(k for _, k in self.sources)

    @property
    def layout(self) -> tuple:
        """Source names and sizes as used by the adversary module."""
        return tuple((str(s), k) for s, k in self.sources)

    def with_(self, **changes) -> "GossipConfig":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return GossipConfig(**kw)


@dataclass(frozen=True, eq=False)
class Call:
    round: int
    caller: int
    callee: int
    direction: str
    packet: Packet  # edge = (sender, receiver, round)

    @property
    def sender(self) -> int:
        return self.caller if self.direction == PUSH else self.callee

    @property
    def receiver(self) -> int:
        return self.callee if self.direction == PUSH else self.caller


@dataclass
class GossipTrace:
    config: GossipConfig
    calls: list
    ranks: np.ndarray  # (rounds + 1, v): rank of every node after each round
    completion_round: int | None
    spaces: list = dc_field(repr=False, default_factory=list)
    tapped: list = dc_field(default_factory=list)

    @property
    def rounds(self) -> int:
        return self.ranks.shape[0] - 1

    def call_pattern(self) -> list[tuple]:
        return [(c.round, c.caller, c.callee, c.direction) for c in self.calls]

    def decode(self, node: int) -> dict | None:
        """Every source's codeword rows as seen by ``node``, or None if short of rank."""
        space = self.spaces[node]
        K = self.config.total_k
        if space.coding_rank < K:
            return None
        R, _ = gf.rref(self.config.field, space.rows())
        out, pos = {}, 0
        for s, k in self.config.sources:
            out[s] = R[pos : pos + k, K:].copy()
            pos += k
        return out

    def dump(self) -> str:
        """One line per transfer: round caller callee direction coding digest."""
        lines = []
        for c in self.calls:
            coding = "".join(f"{int(x):02x}" if self.config.q > 16 else f"{int(x):x}" for x in c.packet.coding)
            digest = f"{hash_payload(c.packet.payload):08x}"
            lines.append(f"{c.round} {c.caller} {c.callee} {c.direction} {coding} {digest}")
        return "\n".join(lines) + ("\n" if lines else "")


def hash_payload(payload) -> int:
    return zlib.crc32(np.asarray(payload, dtype=np.int64).tobytes())


def random_codewords(config: GossipConfig, rng: np.random.Generator) -> dict:
    F = config.field
    return {s: F.random(rng, (k, config.payload)) for s, k in config.sources}


def run(config: GossipConfig, codewords: Mapping[int, np.ndarray] | None = None) -> GossipTrace:
    """Gossip until every node has full rank or ``max_rounds`` pass."""
    F = config.field
    v, K, c = config.v, config.total_k, config.payload
    if codewords is None:
        codewords = random_codewords(config, substream(config.seed, "gossip", "data"))
    coeff_rng = substream(config.seed, "gossip", "coefficients")
    spaces = [Subspace(F, K, c) for _ in range(v)]
    pos = 0
    for s, k in config.sources:
        X = F.asarray(np.asarray(codewords[s], dtype=np.int64).reshape(k, c))
        for i in range(k):
            row = np.zeros(K + c, dtype=np.int64)
            row[pos + i] = 1
            row[K:] = X[i]
            spaces[s].insert(row)
        pos += k
    ranks = [[sp.coding_rank for sp in spaces]]
    calls: list = []
    done = 0 if all(r == K for r in ranks[0]) else None
    directions = {PUSH: (PUSH,), PULL: (PULL,), PUSH_PULL: (PUSH, PULL)}[config.exchange]
    t = 0
    while done is None and t < config.max_rounds:
        t += 1
        callee = config.topology(v, substream(config.seed, "gossip", "calls", t))
        informed = [sp.rank > 0 for sp in spaces]
        deliveries = []
        for u in range(v):
            peer = int(callee[u])
            for d in directions:
                sender, receiver = (u, peer) if d == PUSH else (peer, u)
                if not informed[sender]:
                    continue
                row = spaces[sender].random_element(coeff_rng)
                pkt = Packet((sender, receiver, t), row[:K].copy(), row[K:].copy())
                calls.append(Call(t, u, peer, d, pkt))
                deliveries.append((receiver, row))
        for receiver, row in deliveries:
            spaces[receiver].insert(row)
        ranks.append([sp.coding_rank for sp in spaces])
        if all(r == K for r in ranks[-1]):
            done = t
    return GossipTrace(config, calls, np.array(ranks, dtype=np.int64), done, spaces)


def completion_rounds(config: GossipConfig, trials: int, stream: str = "trials") -> np.ndarray:
    """Completion round of ``trials`` independent runs (-1 when unfinished)."""
    out = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        seed = int(substream(config.seed, "gossip", stream, i).integers(1 << 62))
        r = run(config.with_(seed=seed)).completion_round
        out[i] = -1 if r is None else r
    return out


# --- flooding time and throughput --------------------------------------------


@dataclass(frozen=True)
class FloodingEstimate:
    T: float
    alpha: float
    alpha_is_lower_bound: bool
    samples: dict  # start vertex -> stopping times
    residuals: tuple
    per_vertex: dict  # start vertex -> (T, alpha, lower_bound)


def _fit_tail(samples: np.ndarray, T: float, q: int) -> tuple[float, bool, tuple]:
    n = samples.size
    ks, ys = [], []
    k = 1
    while True:
        p = np.mean(samples >= T + k)
        if p == 0:
            break
        ks.append(k)
        ys.append(-math.log(p, q))
        k += 1
    if not ks:
        # nothing beyond T: the tail is below 1/n, all we can say is alpha >= log_q n
        return math.log(n, q), True, ()
    ks, ys = np.array(ks, float), np.array(ys, float)
    alpha = float(ks @ ys / (ks @ ks))
    if alpha <= 0:
        return math.log(n, q), True, tuple(float(r) for r in ys)
    return alpha, False, tuple(float(r) for r in ys - alpha * ks)


def flood(config: GossipConfig, start: int, seed: int, loss: float = 0.0) -> int:
    """Stopping time of one message flooded from ``start`` on ``config``'s call pattern.

    Each transfer from an informed node delivers the message with probability
    1 - ``loss``; for a random linear combination over GF(q) this is the chance
    that a packet carries the component of one tracked message, 1 - 1/q.
    """
    v = config.v
    directions = {PUSH: (PUSH,), PULL: (PULL,), PUSH_PULL: (PUSH, PULL)}[config.exchange]
    informed = np.zeros(v, dtype=bool)
    informed[start] = True
    drop = substream(seed, "gossip", "loss")
    t = 0
    nodes = np.arange(v)
    while not informed.all():
        if t >= config.max_rounds:
            raise RuntimeError("flooding hit max_rounds")
        t += 1
        callee = config.topology(v, substream(seed, "gossip", "calls", t))
        new = informed.copy()
        for d in directions:
            sender, receiver = (nodes, callee) if d == PUSH else (callee, nodes)
            ok = informed[sender]
            if loss:
                ok &= drop.random(v) >= loss
            new[receiver[ok]] = True
        informed = new
    return t


def estimate_flooding(
    config: GossipConfig,
    trials: int,
    quantile: float = 0.5,
    starts: Sequence[int] | None = None,
    loss: float | None = None,
) -> FloodingEstimate:
    """(T, alpha) for single-message flooding on ``config``'s topology.

    Each start vertex (default: the configured sources, else node 0) floods
    one message ``trials`` times with transfer loss ``loss`` (default 1/q).
    T is the stopping-time quantile and alpha the least-squares slope through
    the origin of -log_q P[S >= T + k] against k. The worst case over start
    vertices is returned: largest T, smallest alpha.
    """
    if trials < 100:
        raise ValueError("estimate_flooding needs at least 100 trials")
    if starts is None:
        starts = [s for s, _ in config.sources] or [0]
    loss = 1.0 / config.q if loss is None else loss
    samples, per_vertex = {}, {}
    for s in starts:
        S = np.array([
            flood(config, int(s), int(substream(config.seed, "flooding", s, i).integers(1 << 62)), loss)
            for i in range(trials)
        ])
        T = float(np.quantile(S, quantile, method="inverted_cdf"))
        alpha, lower, res = _fit_tail(S, T, config.q)
        samples[s] = S
        per_vertex[s] = (T, alpha, lower, res)
    T = max(p[0] for p in per_vertex.values())
    worst = min(per_vertex, key=lambda s: (per_vertex[s][1], s))
    _, alpha, lower, res = per_vertex[worst]
    return FloodingEstimate(
        T, alpha, lower, samples, res, {s: p[:3] for s, p in per_vertex.items()}
    )


def gossip_round_bound(T: float, alpha: float, k: int, num_sources: int, eps: float, q: int = 2) -> float:
    """Rounds after which k messages from each of num_sources sources reach every node
    with probability 1 - eps: T + (k |S| + log_q(1/eps)) / alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return T + (k * num_sources + math.log(1 / eps, q)) / alpha


# --- secure gossip -----------------------------------------------------------


@dataclass
class SecureGossipReport:
    coded_rounds: np.ndarray
    uncoded_rounds: np.ndarray
    p_value: float
    significance: float
    audits: list  # one LeakageReport per coded trial
    w: int

    @property
    def same_distribution(self) -> bool:
        return self.p_value >= self.significance

    @property
    def secure_trials(self) -> int:
        return sum(r.secure for r in self.audits)

    @property
    def secure(self) -> bool:
        return self.secure_trials == len(self.audits)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "coded_round", "uncoded_round", "verdict", "max_mi_bits"])
        for i, (a, b) in enumerate(zip(self.coded_rounds, self.uncoded_rounds)):
            rep = self.audits[i] if i < len(self.audits) else None
            verdict = "" if rep is None else ("secure" if rep.secure else "insecure")
            mi = "" if rep is None else f"{rep.max_bits:.12g}"
            w.writerow([i, int(a), int(b), verdict, mi])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "trials": int(self.coded_rounds.size),
            "w": self.w,
            "coded_mean_round": round(float(self.coded_rounds.mean()), 6),
            "uncoded_mean_round": round(float(self.uncoded_rounds.mean()), 6),
            "coded_p95_round": float(np.quantile(self.coded_rounds, 0.95, method="inverted_cdf")),
            "mann_whitney_p": round(float(self.p_value), 6),
            "same_distribution": bool(self.same_distribution),
            "secure_trials": int(self.secure_trials),
            "verdict": "secure" if self.secure else "insecure",
        }


def tap_calls(trace: GossipTrace, w: int, rng: np.random.Generator) -> list:
    """w transfers chosen uniformly without replacement."""
    if w <= 0 or not trace.calls:
        return []
    idx = sorted(rng.choice(len(trace.calls), size=min(w, len(trace.calls)), replace=False))
    return [trace.calls[i] for i in idx]


def gossip_trial(config: GossipConfig, code: CosetCode, w: int, trial: int, k_s: int = 1, audit: bool = True):
    """One paired trial: (coded completion round, uncoded completion round, LeakageReport or None)."""
    F = config.field
    encoders = {str(s): code for s, _ in config.sources}
    seed = int(substream(config.seed, "gossip", "coded", trial).integers(1 << 62))
    rng = substream(seed, "gossip", "messages")
    msgs = {s: F.random(rng, (k, config.payload)) for s, k in config.sources}
    X = {s: encode_matrix(code, m) for s, m in msgs.items()}
    trace = run(config.with_(seed=seed), X)
    coded = -1 if trace.completion_round is None else trace.completion_round
    report = None
    if audit:
        trace.tapped = tap_calls(trace, w, substream(seed, "adversary", "taps"))
        label = ";".join(f"r{c.round}:{c.sender}->{c.receiver}" for c in trace.tapped) or "none"
        report = adversary.audit_capture(
            encoders, config.layout, F, [c.packet for c in trace.tapped], label, k_s=k_s
        )
    seed_u = int(substream(config.seed, "gossip", "uncoded", trial).integers(1 << 62))
    t_u = run(config.with_(seed=seed_u)).completion_round
    return coded, (-1 if t_u is None else t_u), report


def compare_rounds(a, b) -> float:
    """Two-sided Mann-Whitney U p-value (1.0 when both samples are one identical constant)."""
    a, b = np.asarray(a), np.asarray(b)
    if np.unique(np.concatenate([a, b])).size == 1:
        return 1.0
    return float(stats.mannwhitneyu(a, b, alternative="two-sided").pvalue)


def secure_gossip_experiment(
    config: GossipConfig,
    code: CosetCode,
    w: int,
    trials: int,
    k_s: int = 1,
    significance: float = 0.01,
    audit: bool = True,
    map_fn=map,
) -> SecureGossipReport:
    """Coded vs. uncoded gossip on independent trials, with Eve tapping w transfers.

    Every source encodes its k x c message matrix with ``code``; the uncoded
    baseline sends raw messages. Completion rounds are compared with a
    two-sided Mann-Whitney U test. ``map_fn`` may be a pool's map; results are
    consumed in trial order.
    """
    if code.field is not config.field:
        raise ValueError("code and gossip field differ")
    for s, k in config.sources:
        if k != code.k:
            raise ValueError(f"source {s} has k={k}, code has k={code.k}")
    n = range(trials)
    results = list(map_fn(gossip_trial, [config] * trials, [code] * trials, [w] * trials, n,
                          [k_s] * trials, [audit] * trials))
    coded = np.array([r[0] for r in results], dtype=np.int64)
    uncoded = np.array([r[1] for r in results], dtype=np.int64)
    audits = [r[2] for r in results if r[2] is not None]
    return SecureGossipReport(coded, uncoded, compare_rounds(coded, uncoded), significance, audits, w)
