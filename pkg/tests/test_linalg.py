import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asyncfw.errors import DegenerateInputError, DimensionError, ParameterError
from asyncfw.linalg import (as_matrix, frobenius_inner, full_svd_reference, lmo_nuclear,
                            load_csv, nuclear_norm, power_iteration_1svd, random_feasible,
                            read_matrix, write_matrix)
from oracles import inner_loop, top_singular


def test_inner_trivial():
    assert frobenius_inner(np.eye(2), np.eye(2)) == 2.0
    assert frobenius_inner(np.ones((3, 2)), np.zeros((3, 2))) == 0.0


def test_inner_matches_loop():
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((2, 3, 3))
    assert frobenius_inner(A, B) == pytest.approx(inner_loop(A, B), abs=1e-14)


def test_inner_shape_mismatch():
    with pytest.raises(DimensionError):
        frobenius_inner(np.zeros((2, 3)), np.zeros((3, 2)))


def test_as_matrix_rejects():
    with pytest.raises(DimensionError):
        as_matrix(np.zeros(3))
    with pytest.raises(ParameterError):
        as_matrix([[1.0, np.nan]])


def test_power_iteration_diagonal():
    t = power_iteration_1svd(np.diag([3.0, 1.0]))
    assert t.sigma == pytest.approx(3.0)
    assert np.allclose(np.abs(t.u), [1, 0], atol=1e-6) and np.allclose(np.abs(t.v), [1, 0], atol=1e-6)
    assert t.converged


def test_power_iteration_rank_one():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(5), rng.standard_normal(4)
    t = power_iteration_1svd(np.outer(a, b))
    assert t.sigma == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b), rel=1e-12)
    assert abs(t.u @ a) / np.linalg.norm(a) == pytest.approx(1.0)
    assert abs(t.v @ b) / np.linalg.norm(b) == pytest.approx(1.0)


def test_power_iteration_vs_svd():
    M = np.random.default_rng(2).standard_normal((10, 8))
    t = power_iteration_1svd(M)
    u, s, v = top_singular(M)
    assert abs(t.sigma - s) < 1e-6
    assert abs(abs(t.u @ u) - 1) < 1e-4 and abs(abs(t.v @ v) - 1) < 1e-4


def test_power_iteration_sign_and_seed():
    M = np.random.default_rng(3).standard_normal((6, 6))
    a = power_iteration_1svd(M, seed=1)
    b = power_iteration_1svd(M, seed=1)
    assert np.array_equal(a.u, b.u)
    assert a.u[np.flatnonzero(a.u)[0]] >= 0


def test_power_iteration_zero_and_args():
    with pytest.raises(DegenerateInputError):
        power_iteration_1svd(np.zeros((3, 3)))
    with pytest.raises(ParameterError):
        power_iteration_1svd(np.eye(2), tol=0)
    t = power_iteration_1svd(np.diag([1.0, 0.5]), max_iters=1)
    assert not t.converged and t.iterations == 1


def test_null_space_start_restart():
    # start vector orthogonal to the row space would give M v = 0
    M = np.zeros((2, 2))
    M[0, 0] = 1.0
    for seed in range(20):
        assert power_iteration_1svd(M, seed=seed).sigma == pytest.approx(1.0)


def test_lmo_examples():
    U = lmo_nuclear(np.diag([5.0, 1.0]), 1.0).direction()
    assert np.allclose(U, -np.outer([1, 0], [1, 0]), atol=1e-6)
    assert frobenius_inner(np.diag([5.0, 1.0]), U) == pytest.approx(-5.0)
    G = np.random.default_rng(4).standard_normal((6, 6))
    _, s, _ = top_singular(G)
    assert frobenius_inner(G, lmo_nuclear(G, 1.0).direction()) == pytest.approx(-s, abs=1e-6)
    two = frobenius_inner(G, lmo_nuclear(G, 2.0).direction())
    assert two == pytest.approx(2 * frobenius_inner(G, lmo_nuclear(G, 1.0).direction()))


def test_lmo_degenerate_and_folded():
    r = lmo_nuclear(np.zeros((3, 2)), 2.0)
    assert r.degenerate and nuclear_norm(r.direction()) == pytest.approx(2.0)
    G = np.random.default_rng(5).standard_normal((4, 3))
    r = lmo_nuclear(G, 3.0)
    u, v = r.folded()
    assert np.allclose(np.outer(u, v), r.direction())
    assert np.linalg.norm(u) == pytest.approx(3.0)
    with pytest.raises(ParameterError):
        lmo_nuclear(G, 0.0)


def test_full_svd_reference():
    s, _, _ = full_svd_reference(np.eye(3))
    assert np.allclose(s, 1)
    s, _, _ = full_svd_reference(np.diag([2.0, -3.0]))
    assert np.allclose(s, [3, 2])
    M = np.random.default_rng(6).standard_normal((5, 4))
    s, U, V = full_svd_reference(M)
    assert np.abs(U @ np.diag(s) @ V.T - M).max() < 1e-8


def test_nuclear_norm():
    assert nuclear_norm(np.diag([1.0, 2.0, 3.0])) == pytest.approx(6.0)
    u, v = np.array([0.6, 0.8]), np.array([0.0, 1.0, 0.0])
    assert nuclear_norm(np.outer(u, v)) == pytest.approx(1.0)
    M = np.random.default_rng(7).standard_normal((4, 4))
    w, Q = np.linalg.eigh(M.T @ M)
    sqrt = Q @ np.diag(np.sqrt(np.clip(w, 0, None))) @ Q.T
    assert nuclear_norm(M) == pytest.approx(np.trace(sqrt), rel=1e-10)


def test_random_feasible():
    rng = np.random.default_rng(8)
    X = random_feasible((5, 3), 2.0, rng)
    assert nuclear_norm(X) <= 2.0 + 1e-12
    assert nuclear_norm(random_feasible((5, 3), 2.0, rng, radius=1.5)) == pytest.approx(1.5)


def test_matrix_file_roundtrip(tmp_path):
    M = np.random.default_rng(9).standard_normal((3, 5))
    write_matrix(tmp_path / "m.afw", M)
    data = (tmp_path / "m.afw").read_bytes()
    assert data[:4] == b"AFW1" and len(data) == 12 + 8 * 15
    assert int.from_bytes(data[4:8], "little") == 3
    assert np.array_equal(read_matrix(tmp_path / "m.afw"), M)


def test_matrix_file_errors(tmp_path):
    (tmp_path / "bad.afw").write_bytes(b"XXXX" + bytes(8))
    with pytest.raises(DimensionError):
        read_matrix(tmp_path / "bad.afw")
    write_matrix(tmp_path / "m.afw", np.ones((2, 2)))
    (tmp_path / "short.afw").write_bytes((tmp_path / "m.afw").read_bytes()[:-8])
    with pytest.raises(DimensionError):
        read_matrix(tmp_path / "short.afw")


def test_load_csv(tmp_path):
    (tmp_path / "m.csv").write_text("1,2\n3,4\n")
    assert np.array_equal(load_csv(tmp_path / "m.csv"), [[1, 2], [3, 4]])


matrices = st.tuples(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2 ** 31 - 1),
                     st.floats(0.1, 10))


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_lmo_properties(args):
    d1, d2, seed, theta = args
    G = np.random.default_rng(seed).standard_normal((d1, d2))
    s, _, _ = full_svd_reference(G)
    pair = lmo_nuclear(G, theta, seed=seed)
    U = pair.direction()
    assert frobenius_inner(G, U) <= -theta * s[0] + 1e-6 * theta * np.linalg.norm(G)
    assert nuclear_norm(U) == pytest.approx(theta, abs=1e-8)
    assert abs(np.linalg.norm(pair.u) - 1) < 1e-10 and abs(np.linalg.norm(pair.v) - 1) < 1e-10
    t = power_iteration_1svd(G, seed=seed)
    assert t.sigma <= s[0] + 1e-8
    again = power_iteration_1svd(G, seed=seed)
    assert np.array_equal(t.u, again.u) and t.sigma == again.sigma
