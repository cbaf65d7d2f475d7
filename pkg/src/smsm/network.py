"""Unit-capacity multicast networks: min-cuts, feasibility, RLNC and decoding."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping

import numpy as np

from . import gf, kernels
from .field import Field

Edge = tuple  # (tail, head, copy index) identifies one unit-capacity link

INF = float("inf")


class UnsupportedTopologyError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkSpec:
    """Directed multigraph with unit-capacity links.

    ``edges`` lists (tail, head, multiplicity); each multiplicity expands into
    that many parallel unit links. ``sources`` maps source node -> k.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]
    sources: tuple[tuple[str, int], ...]
    destinations: tuple[str, ...]
    q: int = 2
    payload: int = 1

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((str(u), str(v), int(m)) for u, v, m in self.edges))
        srcs = self.sources.items() if isinstance(self.sources, Mapping) else self.sources
        object.__setattr__(self, "sources", tuple((str(s), int(k)) for s, k in srcs))
        object.__setattr__(self, "destinations", tuple(self.destinations))
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("duplicate node names")
        seen = set()
        for u, v, m in self.edges:
            if u not in known or v not in known:
                raise ValueError(f"edge {u}->{v} references an unknown node")
            if m < 1:
                raise ValueError(f"edge {u}->{v} has multiplicity {m} < 1")
            if (u, v) in seen:
                raise ValueError(f"edge {u}->{v} listed twice; use multiplicity")
            seen.add((u, v))
        for s, k in self.sources:
            if s not in known:
                raise ValueError(f"unknown source {s}")
            if k < 0:
                raise ValueError(f"source {s} has negative k")
        for d in self.destinations:
            if d not in known:
                raise ValueError(f"unknown destination {d}")
        Field(self.q)
        if self.payload < 1:
            raise ValueError("payload length must be >= 1")

    @property
    def field(self) -> Field:
        return Field(self.q)

    @property
    def source_names(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.sources)

    @property
    def k_of(self) -> dict[str, int]:
        return dict(self.sources)

    @property
    def total_k(self) -> int:
        return sum(k for _, k in self.sources)

    @property
    def overlap(self) -> tuple[str, ...]:
        """Nodes that are both a source and a destination (allowed, but flagged)."""
        return tuple(sorted(set(self.source_names) & set(self.destinations)))

    def offsets(self) -> dict[str, int]:
        """Column offset of each source's rows inside a global coding vector."""
        out, pos = {}, 0
        for s, k in self.sources:
            out[s] = pos
            pos += k
        return out

    def unit_edges(self) -> list[Edge]:
        return [(u, v, i) for u, v, m in self.edges for i in range(m)]


def two_source_network(q: int = 256, k: int = 2, payload: int = 4) -> NetworkSpec:
    """Two sources, four relays, four destinations.

    s1 feeds r1, r2; s2 feeds r3, r4; every relay feeds every destination, so
    rho(s, d) = 2, rho({s1, s2}, d) = 4 and any single link carries at most one
    unit from a source.
    """
    relays = ["r1", "r2", "r3", "r4"]
    dests = ["d1", "d2", "d3", "d4"]
    edges = [("s1", "r1", 1), ("s1", "r2", 1), ("s2", "r3", 1), ("s2", "r4", 1)]
    edges += [(r, d, 1) for r in relays for d in dests]
    return NetworkSpec(
        nodes=("s1", "s2", *relays, *dests),
        edges=tuple(edges),
        sources=(("s1", k), ("s2", k)),
        destinations=tuple(dests),
        q=q,
        payload=payload,
    )


# --- max flow ---------------------------------------------------------------


def max_flow(capacity: Mapping[tuple, float], source, sink) -> float:
    """Edmonds-Karp on a capacity map {(u, v): c}."""
    residual: dict = {}
    adj: dict = {}
    for (u, v), c in capacity.items():
        residual[(u, v)] = residual.get((u, v), 0) + c
        residual.setdefault((v, u), 0)
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    if source not in adj or sink not in adj:
        return 0
    flow = 0
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in sorted(adj[u], key=repr):
                if v not in parent and residual[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow
        push = INF
        v = sink
        while parent[v] is not None:
            u = parent[v]
            push = min(push, residual[(u, v)])
            v = u
        v = sink
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= push
            residual[(v, u)] += push
            v = u
        flow += push


_SUPER = ("__super_source__",)
_EVE = ("__eve__",)


def _as_set(nodes) -> set:
    return {nodes} if isinstance(nodes, str) else set(nodes)


def _capacities(spec: NetworkSpec, taps: Iterable[Edge] = ()) -> dict:
    tapped: dict = {}
    for u, v, i in taps:
        tapped.setdefault((u, v), set()).add(i)
    cap: dict = {}
    for u, v, m in spec.edges:
        hit = tapped.pop((u, v), set())
        if any(not 0 <= i < m for i in hit):
            raise ValueError(f"tap index out of range on {u}->{v}")
        if m - len(hit):
            cap[(u, v)] = m - len(hit)
        for i in sorted(hit):
            t = ("__tap__", u, v, i)
            cap[(u, t)] = 1
            cap[(t, v)] = 1
            cap[(t, _EVE)] = INF
    if tapped:
        raise ValueError(f"tapped edges not in network: {sorted(tapped)}")
    return cap


def _flow_from(spec: NetworkSpec, sources, sink, cap) -> int:
    srcs = _as_set(sources)
    if len(srcs) == 1:
        (s,) = srcs
        return int(max_flow(cap, s, sink))
    cap = dict(cap)
    for s in srcs:
        cap[(_SUPER, s)] = INF
    return int(max_flow(cap, _SUPER, sink))


def min_cut(spec: NetworkSpec, sources, sink: str) -> int:
    """Minimum number of unit links separating ``sink`` from the source set."""
    if sink in _as_set(sources):
        raise ValueError("sink must not be one of the sources")
    return _flow_from(spec, sources, sink, _capacities(spec))


def eve_min_cut(spec: NetworkSpec, sources, taps: Iterable[Edge]) -> int:
    """Min-cut from the sources to a virtual node fed by every tapped link."""
    taps = list(taps)
    if not taps:
        return 0
    return _flow_from(spec, sources, _EVE, _capacities(spec, taps))


# --- feasibility ------------------------------------------------------------


@dataclass(frozen=True)
class CutCondition:
    regime: str  # "individual" or "naive-strong"
    label: str  # e.g. "rho(s,d) >= k"
    source: str  # a source name, or "S" for all sources jointly
    destination: str
    value: int
    required: int

    @property
    def ok(self) -> bool:
        return self.value >= self.required


@dataclass(frozen=True)
class FeasibilityReport:
    k: int
    w: int
    conditions: tuple[CutCondition, ...]
    notes: tuple[str, ...] = ()

    def _ok(self, regime: str) -> bool:
        rows = [c for c in self.conditions if c.regime == regime]
        return bool(rows) and not self.notes and all(c.ok for c in rows)

    @property
    def individual_feasible(self) -> bool:
        return self._ok("individual")

    @property
    def naive_strong_feasible(self) -> bool:
        return self._ok("naive-strong")

    def violations(self, regime: str = "individual") -> list[CutCondition]:
        return [c for c in self.conditions if c.regime == regime and not c.ok]

    def text(self) -> str:
        S = "|S|"
        lines = [f"feasibility k={self.k} w={self.w}"]
        for regime, feasible, conds in (
            ("individual", self.individual_feasible, ("rho(s,d) >= k", f"rho(S,d) >= k{S}")),
            ("naive-strong", self.naive_strong_feasible, ("rho(s,d) >= k+w", f"rho(S,d) >= (k+w){S}")),
        ):
            verdict = "feasible" if feasible else "infeasible"
            lines.append(f"{regime}: {verdict} (conditions: {'; '.join(conds)})")
            for c in self.conditions:
                if c.regime == regime and not c.ok:
                    lines.append(
                        f"  violated {c.label}: rho({c.source},{c.destination}) = {c.value} < {c.required}"
                    )
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def feasibility_check(spec: NetworkSpec, k: int, w: int = 0) -> FeasibilityReport:
    notes = []
    if not spec.sources:
        notes.append("network has no sources")
    if not spec.destinations:
        notes.append("network has no destinations")
    num = len(spec.sources)
    conds = []
    for d in spec.destinations:
        per = {s: min_cut(spec, s, d) for s in spec.source_names if s != d}
        joint = min_cut(spec, [s for s in spec.source_names if s != d], d) if per else 0
        for regime, need, label_s, label_S in (
            ("individual", k, "rho(s,d) >= k", "rho(S,d) >= k|S|"),
            ("naive-strong", k + w, "rho(s,d) >= k+w", "rho(S,d) >= (k+w)|S|"),
        ):
            for s, value in per.items():
                conds.append(CutCondition(regime, label_s, s, d, value, need))
            conds.append(CutCondition(regime, label_S, "S", d, joint, need * num))
    return FeasibilityReport(k, w, tuple(conds), tuple(notes))


def cut_set_bound(rho_sd: int, rho_sz: int, w: int) -> int:
    """Largest H(M_s) compatible with secrecy of every (k - w)-subset: rho_sd - rho_sz + w, floored at 0."""
    return max(0, rho_sd - rho_sz + w)


def converse_bounds(spec: NetworkSpec, s: str, d: str, w: int, eve_links: int | None = None):
    """Bound per admissible wiretap set of ``eve_links`` unit links (default w)."""
    eve_links = w if eve_links is None else eve_links
    rho_sd = min_cut(spec, s, d)
    out = []
    for taps in itertools.combinations(spec.unit_edges(), eve_links):
        rho_sz = eve_min_cut(spec, s, taps)
        out.append((taps, rho_sz, cut_set_bound(rho_sd, rho_sz, w)))
    return out


def converse_bound(spec: NetworkSpec, s: str, d: str, w: int, eve_links: int | None = None) -> int:
    """Worst case over wiretap sets, i.e. using the largest rho(s, z)."""
    rows = converse_bounds(spec, s, d, w, eve_links)
    rho_sd = min_cut(spec, s, d)
    rho_sz = max((r[1] for r in rows), default=0)
    return cut_set_bound(rho_sd, rho_sz, w)


# --- random linear network coding ------------------------------------------


@dataclass(frozen=True, eq=False)
class Packet:
    edge: Edge
    coding: np.ndarray
    payload: np.ndarray


class Subspace:
    """Row space of augmented [coding | payload] vectors, kept in echelon form."""

    def __init__(self, field: Field, total_k: int, payload: int):
        self.field = field
        self.total_k = total_k
        self.width = total_k + payload
        self.basis = np.zeros((self.width, self.width), dtype=np.int64)
        self.pivots = np.zeros(self.width, dtype=np.int64)
        self.rank = 0

    def insert(self, row) -> bool:
        row = np.array(row, dtype=np.int64)
        before = self.rank
        self.rank = kernels.reduce_insert(
            self.basis, self.pivots, self.rank, row, *self.field.kernel_args
        )
        return self.rank > before

    @property
    def coding_rank(self) -> int:
        """Rank of the coding part (pivots inside the first total_k columns)."""
        return int((self.pivots[: self.rank] < self.total_k).sum())

    def rows(self) -> np.ndarray:
        return self.basis[: self.rank]

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform nonzero element, or the zero vector if the space is trivial."""
        if self.rank == 0:
            return np.zeros(self.width, dtype=np.int64)
        r = self.field.random_nonzero_vector(rng, self.rank)
        return gf.matmul(self.field, r[None, :], self.rows())[0]

    def copy(self) -> "Subspace":
        out = Subspace.__new__(Subspace)
        out.field, out.total_k, out.width = self.field, self.total_k, self.width
        out.basis, out.pivots, out.rank = self.basis.copy(), self.pivots.copy(), self.rank
        return out


@dataclass
class NodeState:
    node: str
    space: Subspace
    received: list = dc_field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.space.coding_rank

    @property
    def coding_matrix(self) -> np.ndarray:
        if not self.received:
            return np.zeros((0, self.space.total_k), dtype=np.int64)
        return np.array([p.coding for p in self.received])


@dataclass
class RunResult:
    spec: NetworkSpec
    states: dict
    packets: list
    order: tuple
    policy_fallbacks: int = 0


def topological_order(spec: NetworkSpec) -> list[str]:
    indeg = {n: 0 for n in spec.nodes}
    succ: dict = {n: [] for n in spec.nodes}
    for u, v, _ in spec.edges:
        indeg[v] += 1
        succ[u].append(v)
    ready = deque(n for n in spec.nodes if indeg[n] == 0)
    order = []
    while ready:
        u = ready.popleft()
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != len(spec.nodes):
        raise UnsupportedTopologyError("dissemination needs an acyclic network")
    return order


def stack_codewords(spec: NetworkSpec, codewords: Mapping[str, np.ndarray]) -> np.ndarray:
    """Rows of every source's codeword matrix, in source order (total_k x c)."""
    blocks = []
    for s, k in spec.sources:
        X = np.asarray(codewords[s], dtype=np.int64)
        if X.shape != (k, spec.payload):
            raise ValueError(f"codeword matrix of {s} must be {k} x {spec.payload}, got {X.shape}")
        blocks.append(X)
    if not blocks:
        return np.zeros((0, spec.payload), dtype=np.int64)
    return spec.field.asarray(np.vstack(blocks))


def secure_emission(field: Field, G, previous, rng, max_tries: int = 10_000):
    """Draw a nonzero coefficient vector a over one source's rows such that,
    together with any w-1 earlier draws, it sees G through a full-rank w x w window.

    Returns (vector, ok); ok is False if no admissible vector was found.
    """
    G = np.asarray(G, dtype=np.int64)
    w, k = G.shape
    if w == 0:
        return field.random_nonzero_vector(rng, k), True
    prev = [np.asarray(p, dtype=np.int64) for p in previous]
    groups = list(itertools.combinations(range(len(prev)), min(w - 1, len(prev))))
    for _ in range(max_tries):
        a = field.random_nonzero_vector(rng, k)
        if all(
            gf.rank(field, gf.matmul(field, np.array([prev[i] for i in g] + [a]), G.T)) == len(g) + 1
            for g in groups
        ):
            return a, True
    return field.random_nonzero_vector(rng, k), False


def rlnc_run(
    spec: NetworkSpec,
    codewords: Mapping[str, np.ndarray],
    seed=0,
    source_policy: str = "uniform",
    generators: Mapping[str, np.ndarray] | None = None,
) -> RunResult:
    """One generation of random linear network coding in topological order.

    Every unit link carries one packet: a uniformly random nonzero element of
    the sender's subspace. With ``source_policy="column-check"`` a source whose
    subspace is exactly its own rows instead draws coefficient vectors with
    :func:`secure_emission` against its coset generator in ``generators``.
    """
    if source_policy not in ("uniform", "column-check"):
        raise ValueError(f"unknown source policy {source_policy!r}")
    generators = generators or {}
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    F = spec.field
    K = spec.total_k
    X = stack_codewords(spec, codewords)
    order = tuple(topological_order(spec))
    states = {n: NodeState(n, Subspace(F, K, spec.payload)) for n in spec.nodes}
    offsets = spec.offsets()
    k_of = spec.k_of
    for s in spec.source_names:
        for i in range(k_of[s]):
            row = np.zeros(K + spec.payload, dtype=np.int64)
            row[offsets[s] + i] = 1
            row[K:] = X[offsets[s] + i]
            states[s].space.insert(row)
    out_edges: dict = {n: [] for n in spec.nodes}
    for u, v, m in spec.edges:
        out_edges[u] += [(u, v, i) for i in range(m)]
    packets = []
    fallbacks = 0
    for u in order:
        space = states[u].space
        pure_source = (
            source_policy == "column-check"
            and u in generators
            and not states[u].received
        )
        emitted = []
        for edge in out_edges[u]:
            if pure_source:
                a, ok = secure_emission(F, generators[u], emitted, rng)
                fallbacks += not ok
                emitted.append(a)
                off, k = offsets[u], k_of[u]
                coding = np.zeros(K, dtype=np.int64)
                coding[off : off + k] = a
                row = np.concatenate([coding, gf.matmul(F, a[None, :], X[off : off + k])[0]])
            else:
                row = space.random_element(rng)
            pkt = Packet(edge, row[:K].copy(), row[K:].copy())
            packets.append(pkt)
            dest = states[edge[1]]
            dest.received.append(pkt)
            dest.space.insert(row)
    return RunResult(spec, states, packets, order, fallbacks)


@dataclass(frozen=True)
class DecodeResult:
    node: str
    rank: int
    needed: int
    matrices: dict | None

    @property
    def complete(self) -> bool:
        return self.matrices is not None


def decode_at(state: NodeState, spec: NetworkSpec) -> DecodeResult:
    """Invert the received coding matrix; partial result if rank is short."""
    K = spec.total_k
    rank = state.rank
    if rank < K:
        return DecodeResult(state.node, rank, K, None)
    R, pivots = gf.rref(spec.field, state.space.rows())
    stacked = R[:K, K:]
    out, pos = {}, 0
    for s, k in spec.sources:
        out[s] = stacked[pos : pos + k].copy()
        pos += k
    return DecodeResult(state.node, rank, K, out)


def replay_check(run: RunResult, codewords: Mapping[str, np.ndarray]) -> bool:
    """Every logged packet satisfies payload = coding @ stacked codewords."""
    F = run.spec.field
    X = stack_codewords(run.spec, codewords)
    for p in run.packets:
        if not np.array_equal(gf.matmul(F, p.coding[None, :], X)[0], p.payload):
            return False
    return True
