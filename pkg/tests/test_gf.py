import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smsm import gf
from smsm.field import Field

from oracles import rank as ref_rank, ref_field

QS = [2, 3, 4, 5, 16, 256]


@st.composite
def matrices(draw, max_rows=6, max_cols=7):
    q = draw(st.sampled_from(QS))
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(1, max_cols))
    vals = draw(st.lists(st.integers(0, q - 1), min_size=r * c, max_size=r * c))
    return Field(q), np.array(vals, dtype=np.int64).reshape(r, c)


def test_rref_doc_example():
    R, piv = gf.rref(Field(2), [[1, 1, 0], [1, 1, 1]])
    assert R.tolist() == [[1, 1, 0], [0, 0, 1]]
    assert piv == (0, 2)


@given(matrices())
def test_rank_matches_reference(fa):
    F, A = fa
    assert gf.rank(F, A) == ref_rank(ref_field(F), A.tolist())


@given(matrices())
def test_rref_structure(fa):
    F, A = fa
    R, piv = gf.rref(F, A)
    assert gf.rank(F, R) == len(piv)
    for i, p in enumerate(piv):
        assert R[i, p] == 1
        assert not R[:i, p].any() and not R[i + 1 :, p].any()
        assert not R[i, :p].any()
    assert not R[len(piv) :].any()
    # same row space
    assert gf.rank(F, np.vstack([A, R])) == len(piv)
    # idempotent
    R2, piv2 = gf.rref(F, R)
    assert np.array_equal(R, R2) and piv == piv2


@given(matrices())
def test_rank_of_transpose(fa):
    F, A = fa
    assert gf.rank(F, A) == gf.rank(F, A.T)


@given(matrices())
def test_nullspace(fa):
    F, A = fa
    N = gf.nullspace_basis(F, A)
    assert N.shape == (A.shape[1] - gf.rank(F, A), A.shape[1])
    if N.size:
        assert not gf.matmul(F, A, N.T).any()
        assert gf.rank(F, N) == N.shape[0]


@given(matrices(), st.data())
def test_solve_particular(fa, data):
    F, A = fa
    if A.shape[0] == 0:
        return
    x = np.array(data.draw(st.lists(st.integers(0, F.q - 1), min_size=A.shape[1], max_size=A.shape[1])))
    b = gf.matmul(F, A, x[:, None])[:, 0]
    y = gf.solve_particular(F, A, b)
    assert y is not None
    assert np.array_equal(gf.matmul(F, A, y[:, None])[:, 0], b)


def test_solve_inconsistent_and_mismatch():
    F = Field(2)
    assert gf.solve_particular(F, [[1, 1], [1, 1]], [0, 1]) is None
    with pytest.raises(ValueError):
        gf.solve_particular(F, [[1, 1]], [0, 1])


@given(st.sampled_from(QS), st.integers(1, 5), st.integers(0, 10_000))
def test_invert(q, n, seed):
    F = Field(q)
    A = F.random(np.random.default_rng(seed), (n, n))
    inv = gf.invert(F, A)
    if gf.rank(F, A) < n:
        assert inv is None
    else:
        assert np.array_equal(gf.matmul(F, A, inv), np.eye(n, dtype=np.int64))


def test_invert_non_square():
    with pytest.raises(ValueError):
        gf.invert(Field(2), [[1, 0, 1]])


def test_matmul_shape_error():
    with pytest.raises(ValueError):
        gf.matmul(Field(3), np.ones((2, 3), int), np.ones((2, 3), int))


def test_all_vectors_order():
    V = gf.all_vectors(Field(3), 2)
    assert V.tolist()[:4] == [[0, 0], [0, 1], [0, 2], [1, 0]]
    assert len({tuple(v) for v in V}) == 9


def test_inputs_not_mutated():
    F = Field(5)
    A = np.array([[1, 2, 3], [2, 4, 1]])
    before = A.copy()
    gf.rref(F, A)
    gf.nullspace_basis(F, A)
    assert np.array_equal(A, before)


def test_field_matrix_roundtrip(tmp_path):
    m = gf.FieldMatrix(Field(16), [[1, 15, 0], [3, 4, 5]])
    text = gf.format_matrix(m)
    assert text.splitlines()[0] == "16 2 3"
    assert gf.parse_matrix(text) == m
    path = tmp_path / "m.txt"
    gf.write_matrix(path, m)
    assert gf.read_matrix(path) == m
    assert hash(gf.parse_matrix(text)) == hash(m)


def test_field_matrix_is_read_only():
    m = gf.FieldMatrix(Field(2), [[1, 0]])
    with pytest.raises(ValueError):
        m.data[0, 0] = 0


def test_parse_matrix_comments_and_errors():
    m = gf.parse_matrix(io.StringIO("# header\n\n2 1 2\n1 1 # row\n"))
    assert m.data.tolist() == [[1, 1]]
    for bad in ("2 1 2\n1\n", "2 1\n1 1\n", "2 1 2\n1 2\n", "6 1 1\n1\n", ""):
        with pytest.raises(ValueError):
            gf.parse_matrix(bad)
