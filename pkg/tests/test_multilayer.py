import numpy as np
import pytest

from conftest import exhaustive_multilayer_max, exhaustive_static_max
from schema import (
    CommunityAssignment,
    ConnectivityKind,
    ConnectivityMatrix,
    DynamicConnectivity,
    ModularityParams,
    MultilayerNetwork,
    canonical_labels,
)
from multilayer import (
    LouvainTrace,
    aggregate,
    build_supra,
    concatenate_group,
    ensemble_stability,
    exact_labels,
    grid_search,
    grid_stability,
    louvain_multilayer,
    multilayer_modularity,
    normalization,
    partition_similarity,
    quality,
    run_ensemble,
    select_from_grid,
    split_assignment,
    supra_modularity_matrix,
)
from static_mod import best_static_partition, newman_modularity
from utils.errors import EmptyLayerError, InvalidParameterError, ShapeMismatchError


def _random_layers(rng, t, n):
    a = rng.random((t, n, n))
    a = np.triu(a, 1)
    return a + a.transpose(0, 2, 1)


def _dfc(layers, subject_id="sub"):
    n = layers.shape[1]
    return DynamicConnectivity(
        layers=[ConnectivityMatrix(l, ConnectivityKind.FISHER_Z_POSITIVE) for l in layers],
        window_width=10,
        step=1,
        region_labels=[f"r{i}" for i in range(n)],
        subject_id=subject_id,
    )


def _two_block_layers(t, n=8, switch_at=None):
    """两块结构；switch_at之后的层交换块归属"""
    half = n // 2
    layers = np.zeros((t, n, n))
    for l in range(t):
        labels = np.repeat([0, 1], half)
        if switch_at is not None and l >= switch_at:
            labels = labels.copy()
            labels[0], labels[-1] = labels[-1], labels[0]
        same = labels[:, None] == labels[None, :]
        layers[l] = np.where(same, 1.0, 0.05)
        np.fill_diagonal(layers[l], 0.0)
    return layers


class TestMultilayerModularity:
    def test_single_community_uncoupled_is_zero(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 3, 5), gamma=1.0, omega=0.0)
        assert multilayer_modularity(ml, CommunityAssignment(np.zeros((3, 5), dtype=int))) == pytest.approx(0.0, abs=1e-12)

    def test_single_community_counts_coupling(self, rng):
        t, n, omega = 3, 5, 0.7
        ml = MultilayerNetwork(_random_layers(rng, t, n), gamma=1.0, omega=omega)
        q = multilayer_modularity(ml, CommunityAssignment(np.zeros((t, n), dtype=int)))
        expected = 2 * omega * n * (t - 1) / normalization(ml)
        assert q == pytest.approx(expected, abs=1e-12)

    def test_single_layer_equals_static(self, rng):
        layers = _random_layers(rng, 1, 6)
        labels = np.array([0, 0, 1, 1, 2, 0])
        ml = MultilayerNetwork(layers, gamma=1.3, omega=1.0)
        q_m = multilayer_modularity(ml, CommunityAssignment(labels[None, :]))
        assert q_m == pytest.approx(newman_modularity(layers[0], labels, gamma=1.3), abs=1e-12)

    def test_normalization(self, rng):
        t, n = 4, 3
        layers = _random_layers(rng, t, n)
        ml = MultilayerNetwork(layers, omega=0.5)
        # 每条层间耦合在两端各计一次
        expected = layers.sum() + n * 2 * 0.5 * (t - 1)
        assert normalization(ml) == pytest.approx(expected)

    def test_supra_matrix_consistent(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 3, 4), gamma=0.9, omega=0.4)
        labels = rng.integers(0, 3, size=(3, 4))
        B = supra_modularity_matrix(ml).toarray()
        assert np.allclose(B, B.T)
        flat = labels.ravel()
        same = flat[:, None] == flat[None, :]
        direct = B[same].sum() / normalization(ml)
        assert direct == pytest.approx(multilayer_modularity(ml, CommunityAssignment(labels)), abs=1e-12)

    def test_empty_layer(self, rng):
        layers = _random_layers(rng, 3, 4)
        layers[1] = 0.0
        with pytest.raises(EmptyLayerError) as info:
            multilayer_modularity(MultilayerNetwork(layers), CommunityAssignment(np.zeros((3, 4), dtype=int)))
        assert info.value.layer == 1

    def test_shape_mismatch(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 2, 4))
        with pytest.raises(ShapeMismatchError):
            multilayer_modularity(ml, CommunityAssignment(np.zeros((2, 3), dtype=int)))

    @pytest.mark.parametrize("gamma,omega", [(0.0, 1.0), (1.0, -0.1), (float("nan"), 1.0)])
    def test_invalid_parameters(self, rng, gamma, omega):
        with pytest.raises(InvalidParameterError):
            MultilayerNetwork(_random_layers(rng, 2, 3), gamma=gamma, omega=omega)


class TestBuildSupra:
    def test_from_dfc(self, rng):
        layers = _random_layers(rng, 5, 4)
        ml = build_supra(_dfc(layers), gamma=1.1, omega=0.3)
        assert ml.n_layers == 5 and ml.n_nodes == 4
        np.testing.assert_array_equal(ml.coupling, np.full(4, 0.3))

    def test_rejects_raw_correlation(self, rng):
        layers = _random_layers(rng, 2, 3)
        dfc = DynamicConnectivity(
            layers=[ConnectivityMatrix(l, ConnectivityKind.RAW_R) for l in layers],
            window_width=10, step=1, region_labels=["a", "b", "c"], subject_id="s",
        )
        with pytest.raises(InvalidParameterError):
            build_supra(dfc)

    def test_group_concatenation(self, rng):
        dfcs = [_dfc(_random_layers(rng, t, 4), f"s{i}") for i, t in enumerate((3, 2, 4))]
        ml, counts = concatenate_group(dfcs, gamma=1.0, omega=0.5)
        assert counts == [3, 2, 4]
        assert ml.n_layers == 9
        expected = np.full(8, 0.5)
        expected[[2, 4]] = 0.0
        np.testing.assert_array_equal(ml.coupling, expected)

    def test_split_assignment(self):
        labels = np.array([[3, 3], [5, 3], [5, 5], [7, 7], [7, 2]])
        parts = split_assignment(CommunityAssignment(labels), [2, 3])
        np.testing.assert_array_equal(parts[0].labels, [[0, 0], [1, 0]])
        np.testing.assert_array_equal(parts[1].labels, [[0, 0], [1, 1], [1, 2]])
        with pytest.raises(ShapeMismatchError):
            split_assignment(CommunityAssignment(labels), [2, 2])


class TestLouvain:
    def test_reported_q_matches_reevaluation(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 4, 6), gamma=1.0, omega=0.5)
        ca, q = louvain_multilayer(ml, seed=3)
        assert q == pytest.approx(multilayer_modularity(ml, ca), abs=1e-12)

    def test_trace_is_monotone(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 6, 10), gamma=1.0, omega=0.3)
        trace = LouvainTrace()
        ca, q = louvain_multilayer(ml, seed=1, trace=trace)
        assert trace.q_values
        assert np.all(np.diff(trace.q_values) >= -1e-12)
        assert trace.q_values[-1] == pytest.approx(q, abs=1e-9)

    @pytest.mark.parametrize("t,n", [(1, 4), (2, 3), (2, 4)])
    def test_never_exceeds_exhaustive(self, rng, t, n):
        ml = MultilayerNetwork(_random_layers(rng, t, n), gamma=1.0, omega=0.5)
        best = max(louvain_multilayer(ml, seed=s)[1] for s in range(5))
        assert best <= exhaustive_multilayer_max(ml) + 1e-12

    def test_matches_exhaustive_on_planted(self):
        ml = MultilayerNetwork(_two_block_layers(2, n=4), gamma=1.0, omega=0.5)
        best = max(louvain_multilayer(ml, seed=s)[1] for s in range(10))
        assert best == pytest.approx(exhaustive_multilayer_max(ml), abs=1e-9)

    @pytest.mark.parametrize("case", range(12))
    def test_random_instances_reach_exhaustive_optimum(self, case):
        rng = np.random.default_rng(200 + case)
        t, n = [(1, 6), (2, 3), (2, 4), (4, 2), (3, 2), (1, 8)][case % 6]
        gamma = (0.8, 1.0, 1.2)[case % 3]
        omega = (0.0, 0.3, 1.0, 2.0)[case % 4]
        ml = MultilayerNetwork(_random_layers(rng, t, n), gamma=gamma, omega=omega)
        best = max(louvain_multilayer(ml, seed=s)[1] for s in range(3))
        assert best == pytest.approx(exhaustive_multilayer_max(ml), abs=1e-12)

    def test_heuristic_result_is_move_stable(self, rng):
        t, n = 3, 6
        ml = MultilayerNetwork(_random_layers(rng, t, n), gamma=1.0, omega=0.4)
        ca, q = louvain_multilayer(ml, seed=5)
        labels = ca.labels
        for l in range(t):
            for i in range(n):
                for target in range(labels.max() + 2):
                    moved = labels.copy()
                    moved[l, i] = target
                    assert multilayer_modularity(ml, CommunityAssignment(moved)) <= q + 1e-10

    def test_uncoupled_layers_optimize_independently(self, rng):
        layers = _random_layers(rng, 2, 4)
        ml = MultilayerNetwork(layers, gamma=1.0, omega=0.0)
        ca, q = louvain_multilayer(ml, seed=0)
        weights = layers.sum(axis=(1, 2)) / layers.sum()
        per_layer = [exhaustive_static_max(layers[l]) for l in range(2)]
        assert q == pytest.approx(float(np.dot(weights, per_layer)), abs=1e-12)
        for l in range(2):
            assert newman_modularity(layers[l], ca.labels[l]) == pytest.approx(per_layer[l], abs=1e-12)

    def test_uncoupled_heuristic_matches_single_layer_runs(self):
        layers = _two_block_layers(3, n=12, switch_at=2)
        ml = MultilayerNetwork(layers, gamma=1.0, omega=0.0)
        ca, q = louvain_multilayer(ml, seed=1)
        weights = layers.sum(axis=(1, 2)) / layers.sum()
        per_layer = [best_static_partition(layers[l], 1.0, 0, 5)[1] for l in range(3)]
        assert q == pytest.approx(float(np.dot(weights, per_layer)), abs=1e-9)

    def test_recovers_blocks_and_switch(self):
        ml = MultilayerNetwork(_two_block_layers(6, n=8, switch_at=3), gamma=1.0, omega=0.1)
        ca, _ = louvain_multilayer(ml, seed=0)
        g = ca.labels
        for l in range(6):
            assert len(set(g[l, 1:4])) == 1
            assert len(set(g[l, 4:7])) == 1
            assert g[l, 1] != g[l, 4]
        assert g[0, 0] == g[0, 1] and g[0, 7] == g[0, 4]
        assert g[5, 0] == g[5, 4] and g[5, 7] == g[5, 1]

    def test_canonical_output(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 3, 5), omega=1.0)
        ca, _ = louvain_multilayer(ml, seed=2)
        flat = ca.labels.ravel()
        seen = []
        for x in flat:
            if x not in seen:
                seen.append(x)
        assert seen == list(range(len(seen)))

    def test_deterministic_per_seed(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 5, 8), omega=0.5)
        a, qa = louvain_multilayer(ml, seed=42)
        b, qb = louvain_multilayer(ml, seed=42)
        assert qa == qb
        assert np.array_equal(a.labels, b.labels)


class TestAggregation:
    def test_preserves_quality(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 3, 5), gamma=1.1, omega=0.6)
        B = supra_modularity_matrix(ml)
        two_mu = normalization(ml)
        fine = canonical_labels(rng.integers(0, 4, size=15))
        level = aggregate(B, fine)
        q = multilayer_modularity(ml, CommunityAssignment(fine.reshape(3, 5)))
        assert float(level.diagonal().sum()) / two_mu == pytest.approx(q, abs=1e-12)
        assert quality(B, fine, two_mu) == pytest.approx(q, abs=1e-12)
        coarse = rng.integers(0, 2, size=level.shape[0])
        assert quality(level, coarse, two_mu) == pytest.approx(quality(B, coarse[fine], two_mu), abs=1e-12)

    def test_exact_labels_match_enumeration(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 2, 3), gamma=1.0, omega=0.5)
        labels, q = exact_labels(supra_modularity_matrix(ml), normalization(ml))
        assert q == pytest.approx(exhaustive_multilayer_max(ml), abs=1e-12)
        assert q == pytest.approx(multilayer_modularity(ml, CommunityAssignment(labels.reshape(2, 3))), abs=1e-12)


class TestCoupling:
    def test_persistent_assignment_increases_with_omega(self, rng):
        layers = _random_layers(rng, 4, 5)
        ca = CommunityAssignment(np.tile([0, 0, 1, 1, 2], (4, 1)))
        qs = [multilayer_modularity(MultilayerNetwork(layers, omega=w), ca) for w in np.linspace(0, 5, 11)]
        assert np.all(np.diff(qs) > 0)

    def test_fixed_assignment_is_monotone_in_omega(self, rng):
        layers = _random_layers(rng, 4, 5)
        for _ in range(5):
            ca = CommunityAssignment(rng.integers(0, 3, size=(4, 5)))
            qs = np.array([multilayer_modularity(MultilayerNetwork(layers, omega=w), ca)
                           for w in np.linspace(0, 5, 11)])
            steps = np.diff(qs)
            assert np.all(steps >= -1e-12) or np.all(steps <= 1e-12)


class TestEnsemble:
    def test_run_ensemble_length_and_reproducible(self, rng):
        ml = MultilayerNetwork(_random_layers(rng, 3, 6), omega=0.5)
        params = ModularityParams(gamma=1.0, omega=0.5, restarts=4, seed=9)
        first = run_ensemble(ml, params)
        second = run_ensemble(ml, params)
        assert len(first) == 4
        for a, b in zip(first, second):
            assert np.array_equal(a.labels, b.labels)

    def test_similarity(self):
        a = CommunityAssignment(np.array([[0, 0, 1, 1], [0, 0, 1, 1]]))
        relabeled = CommunityAssignment(np.array([[5, 5, 2, 2], [5, 5, 2, 2]]))
        other = CommunityAssignment(np.array([[0, 1, 0, 1], [0, 1, 0, 1]]))
        assert partition_similarity(a, relabeled) == pytest.approx(1.0)
        assert partition_similarity(a, other) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ShapeMismatchError):
            partition_similarity(a, CommunityAssignment(np.zeros((1, 4), dtype=int)))

    def test_stability(self):
        a = CommunityAssignment(np.array([[0, 0, 1, 1]]))
        assert ensemble_stability([a]) == 1.0
        assert ensemble_stability([a, a, a]) == pytest.approx(1.0)

    def test_single_point_grid(self, rng):
        dfc = _dfc(_random_layers(rng, 3, 5))
        params = grid_search(dfc, [1.0], [1.0], restarts=2, seed=0)
        assert (params.gamma, params.omega) == (1.0, 1.0)
        assert params.restarts == 2

    def test_grid_table_order(self, rng):
        dfc = _dfc(_random_layers(rng, 3, 5))
        table = grid_stability(dfc, [1.2, 0.8], [1.0, 0.5], restarts=2, seed=0)
        assert [(r["gamma"], r["omega"]) for r in table] == [(0.8, 0.5), (0.8, 1.0), (1.2, 0.5), (1.2, 1.0)]
        assert all(0.0 <= r["stability"] <= 1.0 + 1e-12 for r in table)

    def test_select_tie_prefers_smaller(self):
        table = [
            {"gamma": 0.8, "omega": 0.5, "stability": 0.7},
            {"gamma": 0.8, "omega": 1.0, "stability": 0.9},
            {"gamma": 1.0, "omega": 0.5, "stability": 0.9},
            {"gamma": 1.2, "omega": 0.5, "stability": 0.6},
        ]
        assert select_from_grid(table) == table[1]
        with pytest.raises(InvalidParameterError):
            select_from_grid([])
