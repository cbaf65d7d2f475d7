import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from smsm import gf
from smsm.coset import construct_from_generator, encode_matrix
from smsm.field import Field
from smsm.network import (
    NetworkSpec,
    Subspace,
    UnsupportedTopologyError,
    converse_bound,
    converse_bounds,
    cut_set_bound,
    decode_at,
    eve_min_cut,
    feasibility_check,
    two_source_network,
    max_flow,
    min_cut,
    replay_check,
    rlnc_run,
    secure_emission,
    topological_order,
)

import oracles

TWO_SOURCE = two_source_network()


def test_two_source_cut_values():
    for s in ("s1", "s2"):
        for d in TWO_SOURCE.destinations:
            assert min_cut(TWO_SOURCE, s, d) == 2
    for d in TWO_SOURCE.destinations:
        assert min_cut(TWO_SOURCE, ["s1", "s2"], d) == 4
    assert min_cut(TWO_SOURCE, "s1", "s2") == 0


def test_two_source_eve_cut_at_most_one():
    assert max(eve_min_cut(TWO_SOURCE, ["s1", "s2"], [e]) for e in TWO_SOURCE.unit_edges()) == 1
    assert eve_min_cut(TWO_SOURCE, "s1", [("s1", "r1", 0)]) == 1
    assert eve_min_cut(TWO_SOURCE, "s1", [("s2", "r3", 0)]) == 0


def test_parallel_taps():
    # s has three edge-disjoint paths to d
    spec = NetworkSpec(("s", "a", "b", "c", "d"),
                       (("s", "a", 1), ("s", "b", 1), ("s", "c", 1), ("a", "d", 1), ("b", "d", 1), ("c", "d", 1)),
                       (("s", 1),), ("d",))
    taps = [("a", "d", 0), ("b", "d", 0), ("c", "d", 0)]
    for w in range(4):
        assert eve_min_cut(spec, "s", taps[:w]) == min(w, min_cut(spec, "s", "d"))


def test_multiplicity_and_empty():
    spec = NetworkSpec(("s", "d"), (("s", "d", 3),), (("s", 3),), ("d",))
    assert min_cut(spec, "s", "d") == 3
    empty = NetworkSpec(("s", "d"), (), (("s", 1),), ("d",))
    assert min_cut(empty, "s", "d") == 0
    with pytest.raises(ValueError):
        min_cut(spec, "s", "s")


def test_spec_validation():
    with pytest.raises(ValueError):
        NetworkSpec(("a", "a"), (), (), ())
    with pytest.raises(ValueError):
        NetworkSpec(("a",), (("a", "b", 1),), (), ())
    with pytest.raises(ValueError):
        NetworkSpec(("a", "b"), (("a", "b", 0),), (), ())
    with pytest.raises(ValueError):
        NetworkSpec(("a", "b"), (("a", "b", 1), ("a", "b", 2)), (), ())
    with pytest.raises(ValueError):
        NetworkSpec(("a", "b"), (), (("c", 1),), ())
    with pytest.raises(ValueError):
        NetworkSpec(("a", "b"), (), (), (), q=6)
    spec = NetworkSpec(("a", "b"), (("a", "b", 1),), {"a": 1, "b": 1}, ("b",))
    assert spec.overlap == ("b",)


@st.composite
def small_graphs(draw):
    n = draw(st.integers(3, 6))
    nodes = [f"n{i}" for i in range(n)]
    pairs = [(u, v) for u, v in itertools.product(range(n), repeat=2) if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=8, unique=True))
    edges = []
    for u, v in chosen:
        edges.append((nodes[u], nodes[v], draw(st.integers(1, 2))))
    return nodes, edges


@given(small_graphs(), st.data())
def test_min_cut_matches_subset_oracle(graph, data):
    nodes, edges = graph
    spec = NetworkSpec(tuple(nodes), tuple(edges), (), ())
    unit = [(u, v) for u, v, m in edges for _ in range(m)]
    if len(unit) > 10:
        return
    srcs = data.draw(st.lists(st.sampled_from(nodes), min_size=1, max_size=2, unique=True))
    sink = data.draw(st.sampled_from([x for x in nodes if x not in srcs] or nodes))
    if sink in srcs:
        return
    assert min_cut(spec, srcs, sink) == oracles.min_cut(unit, srcs, sink)


@given(small_graphs(), st.data())
def test_min_cut_matches_networkx(graph, data):
    nodes, edges = graph
    spec = NetworkSpec(tuple(nodes), tuple(edges), (), ())
    G = nx.DiGraph()
    G.add_nodes_from(nodes)
    for u, v, m in edges:
        G.add_edge(u, v, capacity=m)
    s, t = data.draw(st.sampled_from(list(itertools.permutations(nodes, 2))))
    assert min_cut(spec, s, t) == nx.maximum_flow_value(G, s, t)


@given(small_graphs(), st.data())
def test_eve_cut_matches_subset_oracle(graph, data):
    nodes, edges = graph
    spec = NetworkSpec(tuple(nodes), tuple(edges), (), ())
    units = spec.unit_edges()
    if not units or len(units) > 9:
        return
    taps = data.draw(st.lists(st.sampled_from(range(len(units))), min_size=1, max_size=2, unique=True))
    src = data.draw(st.sampled_from(nodes))
    plain = [(u, v) for u, v, _ in units]
    assert eve_min_cut(spec, src, [units[i] for i in taps]) == oracles.eve_cut(plain, [src], taps)


def test_max_flow_raw():
    cap = {("s", "a"): 2, ("a", "t"): 1, ("s", "t"): 1}
    assert max_flow(cap, "s", "t") == 2
    assert max_flow(cap, "t", "s") == 0


def test_feasibility_two_source():
    rep = feasibility_check(TWO_SOURCE, 2, 1)
    assert rep.individual_feasible and not rep.naive_strong_feasible
    text = rep.text()
    assert "rho(s,d) >= k" in text and "rho(S,d) >= k|S|" in text
    assert "rho(s,d) >= k+w" in text and "rho(S,d) >= (k+w)|S|" in text
    assert "violated rho(s,d) >= k+w: rho(s1,d1) = 2 < 3" in text
    bad = feasibility_check(TWO_SOURCE, 3)
    assert not bad.individual_feasible
    assert {c.label for c in bad.violations()} == {"rho(s,d) >= k", "rho(S,d) >= k|S|"}


def test_feasibility_empty_network():
    rep = feasibility_check(NetworkSpec((), (), (), ()), 1)
    assert not rep.individual_feasible
    assert "no sources" in rep.text() and "no destinations" in rep.text()


def test_converse():
    assert cut_set_bound(2, 1, 1) == 2
    assert cut_set_bound(2, 2, 1) == 1  # Eve on w+1 = 2 independent links
    assert cut_set_bound(5, 0, 0) == 5
    assert converse_bound(TWO_SOURCE, "s1", "d1", 1) == 2
    assert converse_bound(TWO_SOURCE, "s1", "d1", 1, eve_links=2) == 1
    rows = converse_bounds(TWO_SOURCE, "s1", "d1", 1)
    assert len(rows) == len(TWO_SOURCE.unit_edges())


def test_topological_order_and_cycles():
    order = topological_order(TWO_SOURCE)
    assert order.index("s1") < order.index("r1") < order.index("d1")
    cyc = NetworkSpec(("a", "b"), (("a", "b", 1), ("b", "a", 1)), (("a", 1),), ("b",))
    with pytest.raises(UnsupportedTopologyError):
        rlnc_run(cyc, {"a": np.zeros((1, 1), int)})


def _codewords(spec, seed):
    F = spec.field
    rng = np.random.default_rng(seed)
    return {s: F.random(rng, (k, spec.payload)) for s, k in spec.sources}


def test_single_hop():
    spec = NetworkSpec(("s", "d"), (("s", "d", 1),), (("s", 1),), ("d",), q=3, payload=2)
    for seed in range(20):
        X = _codewords(spec, seed)
        run = rlnc_run(spec, X, seed)
        assert run.packets[0].coding[0] != 0
        assert np.array_equal(decode_at(run.states["d"], spec).matrices["s"], X["s"])


@pytest.mark.parametrize("policy", ["uniform", "column-check"])
def test_rlnc_run_consistency(policy):
    spec = two_source_network(q=16)
    code = construct_from_generator([[1, 1]], spec.field)
    for seed in range(10):
        X = _codewords(spec, seed)
        run = rlnc_run(spec, X, seed, policy, {s: code.G for s in spec.source_names})
        assert replay_check(run, X)
        assert len(run.packets) == len(spec.unit_edges())
        for d in spec.destinations:
            res = decode_at(run.states[d], spec)
            assert res.needed == 4
            if res.complete:
                for s in spec.source_names:
                    assert np.array_equal(res.matrices[s], X[s])
        again = rlnc_run(spec, X, seed, policy, {s: code.G for s in spec.source_names})
        assert [p.coding.tolist() for p in again.packets] == [p.coding.tolist() for p in run.packets]


def test_decode_partial():
    spec = two_source_network(q=16)
    F = spec.field
    empty = Subspace(F, 4, spec.payload)
    from smsm.network import NodeState

    assert decode_at(NodeState("d1", empty), spec).rank == 0
    X = _codewords(spec, 0)
    run = rlnc_run(spec, X, 0)
    state = run.states["d1"]
    # drop the received packets and re-insert all but one
    short = NodeState("d1", Subspace(F, 4, spec.payload))
    rows = [np.concatenate([p.coding, p.payload]) for p in state.received]
    for row in rows[:-1]:
        short.space.insert(row)
    res = decode_at(short, spec)
    assert not res.complete and res.rank == 3 and res.needed == 4


def test_replay_detects_tampering():
    spec = two_source_network(q=4)
    X = _codewords(spec, 1)
    run = rlnc_run(spec, X, 1)
    other = {s: (x + 1) % 4 for s, x in X.items()}
    assert not replay_check(run, other)


def test_secure_emission_windows():
    F = Field(2)
    G = np.array([[1, 1, 1]])
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, ok = secure_emission(F, G, [], rng)
        assert ok and gf.matmul(F, a[None, :], G.T)[0, 0] != 0
    G2 = np.array([[0, 1, 1], [1, 0, 1]])
    prev = []
    for _ in range(3):
        a, ok = secure_emission(F, G2, prev, rng)
        assert ok
        prev.append(a)
    for i, j in itertools.combinations(range(3), 2):
        assert gf.rank(F, gf.matmul(F, np.array([prev[i], prev[j]]), G2.T)) == 2


def test_field_size_reliability_ordering():
    rates = {}
    for q in (2, 256):
        spec = two_source_network(q=q)
        code = construct_from_generator([[1, 1]], spec.field)
        ok = 0
        for seed in range(150):
            rng = np.random.default_rng(seed)
            X = {s: encode_matrix(code, spec.field.random(rng, (2, 4))) for s in spec.source_names}
            run = rlnc_run(spec, X, rng)
            ok += all(decode_at(run.states[d], spec).complete for d in spec.destinations)
        rates[q] = ok / 150
    assert rates[2] < rates[256]
    assert rates[256] >= 0.95
