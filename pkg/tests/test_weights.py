import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddps.errors import GraphError
from ddps.graph import DirectedGraph, random_strongly_connected
from ddps.weights import (assemble_m, build_weights, choose_epsilon, epsilon_upper_bound,
                          estimate_gamma, fit_log_linear, limit_error_series, limit_matrix,
                          log_epsilon_upper_bound, matrix_limit_error, surplus_system)

CYCLE3 = DirectedGraph(3, frozenset({(0, 1), (1, 2), (2, 0)}))
ONE = DirectedGraph(1)


def test_cycle_weights_are_halves():
    A, B = build_weights(CYCLE3)
    assert set(np.unique(A)) == {0.0, 0.5}
    assert set(np.unique(B)) == {0.0, 0.5}
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(B.sum(axis=0), 1.0, atol=1e-12)
    # in-neighbours of 1 are {0, 1}; out-neighbours of 0 are {0, 1}
    assert A[1, 0] == 0.5 and A[1, 2] == 0.0
    assert B[1, 0] == 0.5 and B[2, 0] == 0.0


def test_single_node_weights():
    A, B = build_weights(ONE)
    assert A.tolist() == [[1.0]] and B.tolist() == [[1.0]]


def test_weights_require_strong_connectivity():
    star = DirectedGraph(3, frozenset({(0, 1), (0, 2)}))
    with pytest.raises(GraphError):
        build_weights(star)


def test_assemble_single_node():
    M = assemble_m([[1.0]], [[1.0]], 0.1)
    np.testing.assert_array_equal(M, [[1.0, 0.1], [0.0, 0.9]])
    assert sorted(np.linalg.eigvals(M).real) == pytest.approx([0.9, 1.0], abs=1e-15)


def test_assemble_cycle_entries():
    A, B = build_weights(CYCLE3)
    M = assemble_m(A, B, 0.05)
    assert M.shape == (6, 6)
    assert M[0, 3] == 0.05
    assert M[3, 0] == 0.5
    np.testing.assert_allclose(M.sum(axis=0), 1.0, atol=1e-12)


def test_assemble_rejects_bad_epsilon():
    A, B = build_weights(CYCLE3)
    with pytest.raises(ValueError):
        assemble_m(A, B, 0.0)
    with pytest.raises(ValueError):
        assemble_m(A, B, 0.6)  # b_ii = 0.5


def test_choose_epsilon_policy():
    A, B = build_weights(CYCLE3)
    assert choose_epsilon(B) == 1e-3
    assert choose_epsilon(B, cap=1.0) == pytest.approx(0.495)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.floats(0.0, 0.6), st.integers(0, 10**6), st.floats(1e-4, 1.0))
def test_block_layout_and_column_sums(n, prob, seed, frac):
    g = random_strongly_connected(n, prob, seed)
    A, B = build_weights(g)
    eps = frac * B.diagonal().min()
    M = assemble_m(A, B, eps)
    I = np.eye(n)
    np.testing.assert_array_equal(M[:n, :n], A)
    np.testing.assert_array_equal(M[:n, n:], eps * I)
    np.testing.assert_array_equal(M[n:, :n], I - A)
    np.testing.assert_array_equal(M[n:, n:], B - eps * I)
    assert np.abs(M.sum(axis=0) - 1).max() <= 1e-12
    assert (np.diagonal(B - eps * I) >= 0).all()
    adj = g.adjacency()
    assert ((A > 0) == adj).all() and ((B > 0) == adj).all()


def test_column_sums_preserved_under_powers():
    sys = surplus_system(random_strongly_connected(8, 0.3, 1), epsilon_cap=0.05)
    P = np.eye(16)
    for k in range(1, 301):
        P = P @ sys.M
        assert np.abs(P.sum(axis=0) - 1).max() <= k * 1e-12


def test_upper_bound_single_node_is_undefined():
    with pytest.raises(ValueError, match="too small"):
        epsilon_upper_bound([[1.0]], [[1.0]])


def test_upper_bound_cycle_closed_form():
    # M with eps = 0 is block lower-triangular, so its spectrum is eig(A) u eig(B).
    # For the 3-cycle A = (I + P)/2 with P a cyclic shift, so the moduli are
    # 1, 1, 1/2, 1/2, 1/2, 1/2 and |lam3| = 1/2.
    A, B = build_weights(CYCLE3)
    expected = 0.5 ** 3 / 44 ** 3
    assert epsilon_upper_bound(A, B) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_upper_bound_positive(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    A, B = build_weights(random_strongly_connected(n, 0.2, seed))
    assert epsilon_upper_bound(A, B) > 0
    assert np.isfinite(log_epsilon_upper_bound(A, B))


def test_limit_error_single_node_closed_form():
    # M^k = [[1, 1 - 0.9^k], [0, 0.9^k]], so ||M^k - L||_inf = 0.9^k exactly
    M = assemble_m([[1.0]], [[1.0]], 0.1)
    assert matrix_limit_error(M, 0) == 1.0
    series = limit_error_series(M, 60)
    np.testing.assert_allclose(series, 0.9 ** np.arange(61), rtol=1e-12)
    Gamma, gamma = estimate_gamma(M, 60)
    assert gamma == pytest.approx(0.9, abs=1e-6)
    assert Gamma == pytest.approx(1.0, abs=1e-6)


def test_limit_error_paths_agree():
    sys = surplus_system(random_strongly_connected(6, 0.2, 4), epsilon_cap=0.05)
    series = limit_error_series(sys.M, 50)
    for k in (0, 1, 7, 50):
        assert matrix_limit_error(sys.M, k) == pytest.approx(series[k], rel=1e-9, abs=1e-14)


def test_limit_error_decays_log_linearly():
    sys = surplus_system(random_strongly_connected(5, 0.15, 0), epsilon=1e-3)
    series = limit_error_series(sys.M, 200)
    ks = np.arange(10, 201)
    _, slope, _ = fit_log_linear(ks, series[10:])
    assert slope < 0


def test_gamma_fit_in_unit_interval_and_stable():
    sys = surplus_system(random_strongly_connected(6, 0.3, 2), epsilon_cap=0.2)
    _, g1 = estimate_gamma(sys.M, 400)
    _, g2 = estimate_gamma(sys.M, 800)
    assert 0 < g1 < 1 and 0 < g2 < 1
    assert abs(g1 - g2) < 1e-3


def test_bottom_block_vanishes():
    sys = surplus_system(random_strongly_connected(6, 0.3, 2), epsilon_cap=0.2)
    P = np.linalg.matrix_power(sys.M, 2000)
    assert np.abs(P[6:]).max() < 1e-10
    np.testing.assert_allclose(P, limit_matrix(6), atol=1e-10)


def test_fit_on_flat_series_has_undefined_r2():
    _, slope, r2 = fit_log_linear(np.arange(100.0), np.full(100, 0.0115))
    assert slope == pytest.approx(0.0, abs=1e-12)
    assert np.isnan(r2)
