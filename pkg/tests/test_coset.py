import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smsm import gf
from smsm.coset import (
    InfeasibleError,
    InvalidGeneratorError,
    CosetCode,
    check_columns,
    construct_from_generator,
    decode_column,
    decode_matrix,
    encode_column,
    encode_matrix,
    format_code,
    column_witness,
    load_code,
    min_k_bound,
    parse_code,
    save_code,
    search_code,
)
from smsm.field import Field

from oracles import columns_hide_coset, min_k, ref_field

F2 = Field(2)


def test_repetition_code_canonical_form():
    code = construct_from_generator([[1, 1]], F2)
    assert code.H.tolist() == [[1, 1]]
    assert code.Gstar.tolist() == [[1, 0]]
    # message (coset index, within-coset index) -> codeword
    table = {m: tuple(encode_column(code, np.array(m))) for m in itertools.product(range(2), repeat=2)}
    assert table == {(0, 0): (0, 0), (0, 1): (1, 1), (1, 0): (1, 0), (1, 1): (0, 1)}


def test_identity_when_w_zero():
    code = construct_from_generator(np.zeros((0, 3), dtype=np.int64), Field(5))
    assert code.degenerate
    assert np.array_equal(code.encoder_matrix, np.eye(3, dtype=np.int64))


@st.composite
def codes(draw):
    q = draw(st.sampled_from([2, 3, 4, 5, 16]))
    k = draw(st.integers(1, 5))
    w = draw(st.integers(0, k - 1))
    F = Field(q)
    G = F.random(np.random.default_rng(draw(st.integers(0, 2**31))), (w, k))
    try:
        return construct_from_generator(G, F)
    except InvalidGeneratorError:
        return construct_from_generator(np.eye(k, dtype=np.int64)[:w], F)


@given(codes())
def test_structural_invariants(code):
    F = code.field
    assert gf.rank(F, code.H) == code.kp
    if code.w:
        assert not gf.matmul(F, code.H, code.G.T).any()
    assert np.array_equal(gf.matmul(F, code.H, code.Gstar.T), np.eye(code.kp, dtype=np.int64))


@given(codes(), st.data())
def test_roundtrip_and_syndrome(code, data):
    F = code.field
    m = np.array(data.draw(st.lists(st.integers(0, F.q - 1), min_size=code.k, max_size=code.k)))
    x = encode_column(code, m)
    assert np.array_equal(decode_column(code, x), m)
    # the coset index is the syndrome
    assert np.array_equal(gf.matmul(F, code.H, x[:, None])[:, 0], m[: code.kp])


@given(codes(), st.integers(1, 4), st.integers(0, 1000))
def test_matrix_roundtrip(code, c, seed):
    M = code.field.random(np.random.default_rng(seed), (code.k, c))
    X = encode_matrix(code, M)
    assert np.array_equal(decode_matrix(code, X), M)
    for j in range(c):
        assert np.array_equal(X[:, j], encode_column(code, M[:, j]))


def test_encoder_is_a_bijection():
    code = construct_from_generator([[1, 2, 1]], Field(3))
    words = {tuple(encode_column(code, np.array(m))) for m in itertools.product(range(3), repeat=3)}
    assert len(words) == 27


def test_invalid_generators():
    with pytest.raises(InvalidGeneratorError):
        construct_from_generator([[1, 1], [1, 1]], Field(3))  # w >= k
    with pytest.raises(InvalidGeneratorError):
        construct_from_generator([[1, 1, 0], [1, 1, 0]], F2)  # dependent rows
    code = construct_from_generator([[1, 1]], F2)
    with pytest.raises(InvalidGeneratorError):
        CosetCode(F2, 2, 1, [[1, 0]], code.G, code.Gstar)  # H G^T != 0
    with pytest.raises(InvalidGeneratorError):
        CosetCode(F2, 2, 1, code.H, code.G, [[1, 1]])  # H Gstar^T != I


def test_encode_length_errors():
    code = construct_from_generator([[1, 1]], F2)
    with pytest.raises(ValueError):
        encode_column(code, [1, 0, 1])
    with pytest.raises(ValueError):
        decode_matrix(code, np.zeros((3, 1), dtype=np.int64))


def test_column_check_examples():
    assert check_columns(construct_from_generator([[1, 1]], F2))
    weak = construct_from_generator([[1, 0, 0], [0, 1, 0]], F2)
    assert not check_columns(weak)
    assert column_witness(F2, weak.G) == (0, 2)
    assert check_columns(construct_from_generator([[0, 1, 1], [1, 0, 1]], F2))


@pytest.mark.parametrize("q,k,w", [(2, 3, 1), (2, 4, 1), (3, 3, 2), (3, 4, 2), (4, 4, 2)])
def test_column_check_matches_definition_oracle(q, k, w):
    F = Field(q)
    R = ref_field(F)
    rng = np.random.default_rng(q * 100 + k * 10 + w)
    for _ in range(15):
        G = F.random(rng, (w, k))
        if gf.rank(F, G) < w:
            continue
        code = construct_from_generator(G, F)
        assert check_columns(code) == columns_hide_coset(R, G.tolist())


def test_search_code():
    code = search_code(2, 1, F2)
    assert code.G.tolist() == [[1, 1]]
    found = search_code(3, 2, F2)
    assert found is not None and check_columns(found)
    assert search_code(4, 2, F2) is None  # only 3 nonzero columns exist in GF(2)^2
    big = search_code(6, 3, Field(8), budget=200, seed=1)
    assert big is None or check_columns(big)
    assert search_code(3, 0, F2).degenerate
    with pytest.raises(ValueError):
        search_code(2, 2, F2)


def test_min_k_bound_examples():
    assert min_k_bound(2, 1) == 2
    assert min_k_bound(10, 9) == 10
    assert min_k_bound(4, 0) == 1
    for rd, rz in [(3, 3), (2, 5), (3, -1)]:
        with pytest.raises(InfeasibleError):
            min_k_bound(rd, rz)


def test_min_k_bound_table():
    for rho in range(1, 11):
        for rz in range(1, rho):
            assert min_k_bound(rho, rz) == min_k(rho, rz)


def test_descriptor_roundtrip(tmp_path):
    code = construct_from_generator([[1, 2, 3, 1], [0, 1, 1, 2]], Field(5))
    text = format_code(code)
    assert parse_code(text) == code
    save_code(tmp_path / "c.code", code)
    assert load_code(tmp_path / "c.code") == code
    assert parse_code(format_code(search_code(3, 0, F2))).degenerate


def test_descriptor_rejects_tampering():
    text = format_code(construct_from_generator([[1, 1]], F2))
    with pytest.raises(ValueError):
        parse_code(text.replace("smsm-coset-code 1", "something else"))
    lines = text.splitlines()
    lines[-1] = "1 1"  # Gstar = [1, 1] breaks H Gstar^T = I
    with pytest.raises(ValueError):
        parse_code("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        parse_code(text.replace("2 2 1", "3 2 1", 1))
