import numpy as np
import pytest
from scipy import sparse

from conftest import exhaustive_static_max
from multilayer import louvain_matrix
from schema import ConnectivityMatrix, DensityCurve, Partition
from static_mod import (
    best_static_partition,
    modularity_density_sweep,
    modularity_matrix,
    n_retained,
    newman_modularity,
    optimize_static_partition,
    signed_modularity,
    threshold_by_density,
)
from utils.errors import EmptyGraphError, InvalidParameterError


def _random_weights(rng, n, density=1.0):
    w = rng.random((n, n))
    w = np.triu(w, 1)
    if density < 1.0:
        w *= rng.random((n, n)) < density
    return w + w.T


def _planted(rng, sizes, inside=1.0, noise=0.1):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    w = noise * rng.random((n, n))
    w[labels[:, None] == labels[None, :]] += inside
    w = np.triu(w, 1)
    return w + w.T, labels


class TestModularity:
    def test_two_triangles(self, two_triangles):
        assert newman_modularity(two_triangles, [0, 0, 0, 1, 1, 1]) == pytest.approx(0.5, abs=1e-12)

    def test_single_community_is_zero(self, rng):
        w = _random_weights(rng, 7)
        assert newman_modularity(w, np.zeros(7, dtype=int)) == pytest.approx(0.0, abs=1e-12)

    def test_bounded(self, rng):
        w = _random_weights(rng, 8)
        for _ in range(20):
            labels = rng.integers(0, 3, size=8)
            q = newman_modularity(w, labels)
            assert -0.5 - 1e-12 <= q < 1.0

    def test_gamma_zero_is_fraction_within(self, two_triangles):
        labels = np.array([0, 0, 1, 1, 1, 1])
        same = labels[:, None] == labels[None, :]
        expected = two_triangles[same].sum() / two_triangles.sum()
        assert newman_modularity(two_triangles, labels, gamma=0.0) == pytest.approx(expected)

    def test_matrix_rows_sum_to_zero(self, rng):
        B = modularity_matrix(_random_weights(rng, 6))
        np.testing.assert_allclose(B.sum(axis=1), 0.0, atol=1e-12)

    def test_empty_graph(self):
        with pytest.raises(EmptyGraphError):
            newman_modularity(np.zeros((4, 4)), [0, 0, 1, 1])

    def test_negative_weights_rejected(self):
        w = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(InvalidParameterError):
            newman_modularity(w, [0, 1])

    def test_relabeling_invariance(self, rng):
        w = _random_weights(rng, 9)
        labels = rng.integers(0, 4, size=9)
        mapping = np.array([7, 2, 9, 0])
        assert newman_modularity(w, mapping[labels]) == pytest.approx(newman_modularity(w, labels), abs=1e-12)


class TestSignedModularity:
    def test_positive_only_equals_newman(self, two_triangles):
        labels = [0, 0, 0, 1, 1, 1]
        assert signed_modularity(two_triangles, labels) == pytest.approx(
            newman_modularity(two_triangles, labels)
        )

    def test_sign_flip_negates(self, rng):
        w = rng.standard_normal((6, 6))
        w = np.triu(w, 1)
        w = w + w.T
        labels = [0, 0, 1, 1, 2, 2]
        assert signed_modularity(-w, labels) == pytest.approx(-signed_modularity(w, labels), abs=1e-12)

    def test_all_zero(self):
        with pytest.raises(EmptyGraphError):
            signed_modularity(np.zeros((3, 3)), [0, 1, 2])


class TestThreshold:
    def test_pair_count(self):
        assert n_retained(4, 0.5) == 3
        assert n_retained(90, 0.04) == 161
        assert n_retained(90, 1.0) == 4005

    def test_keeps_largest(self):
        w = np.array([
            [0.0, 0.9, 0.1, 0.5],
            [0.9, 0.0, 0.7, 0.2],
            [0.1, 0.7, 0.0, 0.3],
            [0.5, 0.2, 0.3, 0.0],
        ])
        out = threshold_by_density(ConnectivityMatrix(w), 0.5).values
        kept = {(i, j) for i, j in zip(*np.nonzero(np.triu(out)))}
        assert kept == {(0, 1), (1, 2), (0, 3)}
        assert out[0, 1] == 0.9
        assert np.array_equal(out, out.T)

    def test_ties_break_by_index(self):
        w = np.ones((4, 4)) - np.eye(4)
        out = threshold_by_density(w, 0.5).values
        kept = {(i, j) for i, j in zip(*np.nonzero(np.triu(out)))}
        assert kept == {(0, 1), (0, 2), (0, 3)}

    def test_monotone_in_density(self, rng):
        w = _random_weights(rng, 10)
        previous = 0
        for d in [0.1, 0.2, 0.5, 1.0]:
            count = np.count_nonzero(np.triu(threshold_by_density(w, d).values))
            assert count >= previous
            previous = count
        assert previous == 45

    @pytest.mark.parametrize("density", [0.0, -0.1, 1.5])
    def test_invalid_density(self, density):
        with pytest.raises(InvalidParameterError):
            threshold_by_density(np.ones((3, 3)), density)

    def test_all_zero(self):
        with pytest.raises(EmptyGraphError):
            threshold_by_density(np.zeros((4, 4)), 0.5)


class TestOptimize:
    def test_two_triangles_found(self, two_triangles):
        p, q = optimize_static_partition(two_triangles, rng_seed=0)
        assert q == pytest.approx(0.5)
        assert isinstance(p, Partition)
        assert p.n_communities == 2
        assert len(set(p.labels[:3])) == 1 and p.labels[0] != p.labels[3]

    def test_reported_q_matches_partition(self, rng):
        w = _random_weights(rng, 12, density=0.5)
        p, q = optimize_static_partition(w, gamma=1.2, rng_seed=3)
        assert q == pytest.approx(newman_modularity(w, p, gamma=1.2), abs=1e-12)

    def test_never_exceeds_exhaustive(self, rng):
        for n in (4, 5, 6, 7):
            w = _random_weights(rng, n)
            _, q = best_static_partition(w, 1.0, 7, 5)
            assert q <= exhaustive_static_max(w) + 1e-12

    @pytest.mark.parametrize("sizes", [(3, 3), (2, 3, 2), (4, 4)])
    def test_matches_exhaustive_on_planted(self, rng, sizes):
        w, _ = _planted(rng, sizes)
        _, q = best_static_partition(w, 1.0, 11, 10)
        assert q == pytest.approx(exhaustive_static_max(w), abs=1e-9)

    @pytest.mark.parametrize("graph_seed", range(24))
    def test_random_graphs_reach_exhaustive_optimum(self, graph_seed):
        rng = np.random.default_rng(1000 + graph_seed)
        n = 5 + graph_seed % 4
        gamma = (0.8, 1.0, 1.5)[graph_seed % 3]
        w = _random_weights(rng, n, density=0.6)
        w[0, 1] = w[1, 0] = 1.0
        p, q = best_static_partition(w, gamma, 3, 5)
        assert q == pytest.approx(exhaustive_static_max(w, gamma), abs=1e-12)
        assert q == pytest.approx(newman_modularity(w, p, gamma), abs=1e-12)

    def test_heuristic_result_is_move_stable(self, rng):
        w = _random_weights(rng, 20, density=0.5)
        p, q = optimize_static_partition(w, rng_seed=4)
        labels = p.labels
        for u in range(20):
            for target in range(labels.max() + 2):
                moved = labels.copy()
                moved[u] = target
                assert newman_modularity(w, moved) <= q + 1e-10

    def test_refinement_never_lowers_q(self, rng):
        w = _random_weights(rng, 40, density=0.3)
        B = sparse.csr_matrix(modularity_matrix(w))
        for seed in range(5):
            plain = louvain_matrix(B, w.sum(), seed=seed, refine=False)
            refined = louvain_matrix(B, w.sum(), seed=seed)
            assert newman_modularity(w, refined) >= newman_modularity(w, plain) - 1e-12

    def test_deterministic(self, rng):
        w = _random_weights(rng, 15, density=0.4)
        a, qa = best_static_partition(w, 1.0, 5, 4)
        b, qb = best_static_partition(w, 1.0, 5, 4)
        assert qa == qb
        assert np.array_equal(a.labels, b.labels)

    def test_restarts_validated(self, two_triangles):
        with pytest.raises(InvalidParameterError):
            best_static_partition(two_triangles, 1.0, 0, 0)


class TestDensitySweep:
    def test_default_grid_length(self, rng):
        c = ConnectivityMatrix(_random_weights(rng, 20))
        densities = np.round(np.arange(0.04, 0.205, 0.01), 2)
        curve = modularity_density_sweep(c, densities, rng_seed=1, restarts=2)
        assert len(curve.densities) == 17
        assert np.all(np.isfinite(curve.q_values))
        assert curve.mean_over() == pytest.approx(curve.q_values.mean())

    def test_mean_over_subset(self):
        curve = DensityCurve(densities=[0.1, 0.2, 0.3], q_values=[0.3, 0.5, 0.7])
        assert curve.mean_over([0.1, 0.3]) == pytest.approx(0.5)

    def test_empty_grid(self, two_triangles):
        with pytest.raises(InvalidParameterError):
            modularity_density_sweep(two_triangles, [])
