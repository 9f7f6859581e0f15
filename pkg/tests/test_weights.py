import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ugt import graph, weights
from ugt.weights import NotStochasticError, WeightMatrix


def cyclic_shift(n):
    # P x shifts node i's value to node i+1, i.e. node i receives from i-1
    p = np.zeros((n, n))
    for i in range(n):
        p[i, (i - 1) % n] = 1.0
    return p


def test_directed_cycle_n3():
    w = weights.laplacian_weights(graph.directed_cycle(3))
    np.testing.assert_array_equal(w.entries, (np.eye(3) + cyclic_shift(3)) / 2)
    assert weights.validate_weights(w).ok


def test_complete_graph_with_tau_n_is_averaging():
    n = 6
    w = weights.laplacian_weights(graph.erdos_renyi(n, 1.0), tau=n)
    np.testing.assert_allclose(w.entries, np.full((n, n), 1 / n), atol=1e-15)
    assert w.sigma < 1e-15


def test_exponential_n8_e2_structure():
    g = graph.directed_exponential(8, 2)
    w = weights.laplacian_weights(g)
    a = w.entries
    for i in range(8):
        expected = {i, (i - 1) % 8, (i - 2) % 8}
        assert set(np.flatnonzero(a[i])) == expected
        for j in expected:
            assert a[i, j] == pytest.approx(1 / 3, abs=1e-15)
    np.testing.assert_allclose(a.sum(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(a.sum(axis=1), 1, atol=1e-12)


def test_laplacian_errors():
    unbalanced = graph.from_edges(4, graph.directed_cycle(4).edges() + [(0, 2)])
    with pytest.raises(ValueError, match="node 0"):
        weights.laplacian_weights(unbalanced)
    with pytest.raises(ValueError, match="tau"):
        weights.laplacian_weights(graph.directed_exponential(8, 2), tau=2)
    with pytest.raises(ValueError, match="strongly connected"):
        weights.laplacian_weights(graph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)]))


def test_validate_examples():
    n = 5
    d = weights.validate_weights(np.full((n, n), 1 / n))
    assert d.doubly_stochastic and d.primitive
    d = weights.validate_weights(np.eye(n))
    assert d.doubly_stochastic and not d.primitive
    d = weights.validate_weights(cyclic_shift(n))
    assert d.doubly_stochastic and not d.primitive


def test_primitive_without_diagonal():
    # cycle lengths 2 and 3 are coprime, so this zero-diagonal matrix is primitive
    a = np.array([[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
    assert weights.validate_weights(a).primitive
    assert np.all(np.linalg.matrix_power(a, 4) > 0)


def test_contraction_cycle_n3_is_half():
    # eigenvalue oracle: (1 + w)/2 on the cube roots of unity, largest non-unit modulus
    omega = np.exp(2j * np.pi / 3)
    assert abs((1 + omega) / 2) == pytest.approx(0.5, abs=1e-15)
    w = (np.eye(3) + cyclic_shift(3)) / 2
    assert weights.consensus_contraction(w) == pytest.approx(0.5, abs=1e-14)
    assert weights.consensus_contraction(w, method="power") == pytest.approx(0.5, abs=1e-10)


def test_contraction_undirected_cycle_two_methods():
    w = weights.laplacian_weights(graph.undirected_cycle(4), tau=3)
    s_svd = weights.consensus_contraction(w, method="svd")
    s_pow = weights.consensus_contraction(w, method="power")
    assert abs(s_svd - s_pow) <= 1e-10
    assert s_svd == pytest.approx(1 / 3, abs=1e-14)


def test_contraction_averaging_is_zero():
    assert weights.consensus_contraction(np.full((4, 4), 0.25)) == pytest.approx(0, abs=1e-15)


def test_contraction_rejects_non_stochastic():
    with pytest.raises(NotStochasticError):
        weights.consensus_contraction(np.full((3, 3), 0.4))


@pytest.mark.parametrize("seed", range(5))
def test_power_matches_svd_on_random_families(seed):
    g = graph.erdos_renyi(20, 0.3, seed=seed)
    w = weights.laplacian_weights(g)
    assert weights.consensus_contraction(w, "power") == pytest.approx(
        weights.consensus_contraction(w, "svd"), abs=1e-8
    )


def test_weight_matrix_immutable():
    w = weights.laplacian_weights(graph.directed_cycle(5))
    with pytest.raises(ValueError):
        w.entries[0, 0] = 1.0


def test_lazy_half_is_bitwise_mean():
    w = weights.laplacian_weights(graph.directed_exponential(10, 2))
    assert weights.lazy(w, 0.5) == WeightMatrix((np.eye(10) + w.entries) / 2)


def test_derived_helpers():
    w = weights.laplacian_weights(graph.undirected_cycle(6))
    np.testing.assert_allclose(weights.matrix_power(w, 2).entries, w.entries @ w.entries)
    d = np.eye(6) - w.entries
    np.testing.assert_allclose(weights.second_order_complement(w).entries, np.eye(6) - d @ d)
    lap = weights.support_laplacian(w)
    np.testing.assert_array_equal(lap.sum(axis=1), 0)
    assert np.all(np.diag(lap) == 2)


def test_write_csv_round_trip(tmp_path):
    w = weights.laplacian_weights(graph.directed_exponential(7, 2))
    weights.write_csv(w, tmp_path / "w.csv")
    back = np.loadtxt(tmp_path / "w.csv", delimiter=",")
    np.testing.assert_array_equal(back, w.entries)


FAMILIES = [
    graph.directed_cycle(12),
    graph.directed_exponential(12, 2),
    graph.directed_exponential(12, 3),
    graph.undirected_cycle(12),
    graph.erdos_renyi(12, 0.3, seed=2),
]


@settings(max_examples=40, deadline=None)
@given(idx=st.integers(0, len(FAMILIES) - 1), m=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_mixing_contracts_disagreement_and_projection_is_nonexpansive(idx, m, seed):
    w = weights.laplacian_weights(FAMILIES[idx])
    x = np.random.default_rng(seed).standard_normal((w.n, m)) * 10
    dev = x - x.mean(axis=0)
    mixed = w.entries @ x
    assert np.linalg.norm(mixed - mixed.mean(axis=0)) <= w.sigma * np.linalg.norm(dev) * (1 + 1e-12) + 1e-12
    assert np.linalg.norm(dev) <= np.linalg.norm(x) * (1 + 1e-15)


@settings(max_examples=30, deadline=None)
@given(idx=st.integers(0, len(FAMILIES) - 1), c=st.floats(1e-3, 1.0))
def test_convex_combination_stays_valid(idx, c):
    w = weights.laplacian_weights(FAMILIES[idx])
    assert weights.validate_weights(weights.lazy(w, c)).ok


def test_sigma_in_open_unit_interval():
    for g in FAMILIES:
        s = weights.laplacian_weights(g).sigma
        assert 0 < s < 1
