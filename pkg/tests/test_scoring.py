import numpy as np
import pytest

from series2graph import (
    InputTooShortError,
    NodePath,
    NormalityProfile,
    PatternGraph,
    PatternNode,
    QueryTooShortError,
    SrwSpec,
    build_graph,
    generate_srw,
    moving_average,
    normality_profile,
    path_normality,
    rank_anomalies,
    theta_subgraphs,
    time2path,
)
from series2graph.scoring import profile_to_csv, ranking_to_csv


def _graph_from_edges(edges, num_nodes=None):
    top = num_nodes - 1 if num_nodes else max(n for e in edges for n in e)
    nodes = [PatternNode(id=i, psi_index=i, radius=1.0) for i in range(top + 1)]
    return PatternGraph(
        nodes=nodes,
        edges=dict(edges),
        node_sequence=np.arange(top + 1, dtype=np.int64),
        embedding=None,
        num_angles=max(3, len(nodes)),
        seed=0,
    )


class TestPathNormality:
    def test_two_node_round_trip_hand_value(self):
        graph = _graph_from_edges({(0, 1): 5, (1, 0): 5})
        path = NodePath(node_ids=[0, 1, 0])
        assert path_normality(graph, path, 2) == pytest.approx(5.0)

    def test_degree_one_source_contributes_zero(self):
        graph = _graph_from_edges({(0, 1): 7})
        # node 0 has a single incident edge, so (deg - 1) kills its step
        assert path_normality(graph, NodePath(node_ids=[0, 1]), 4) == 0.0

    def test_unseen_edge_contributes_zero(self):
        graph = _graph_from_edges({(0, 1): 5, (1, 0): 5})
        with_unseen = path_normality(graph, NodePath(node_ids=[0, 1, 0, 1, 1, 0]), 3)
        # the (1, 1) step is absent from the graph and contributes nothing
        assert with_unseen == pytest.approx((5 + 5 + 5 + 0 + 5) / 3)

    def test_query_length_validation(self):
        graph = _graph_from_edges({(0, 1): 1})
        with pytest.raises(ValueError):
            path_normality(graph, NodePath(node_ids=[0]), 0)


class TestLemmaProperties:
    def _random_graph_and_path(self, rng):
        n_nodes = int(rng.integers(2, 13))
        edges = {}
        for _ in range(int(rng.integers(1, 25))):
            src, dst = (int(x) for x in rng.integers(0, n_nodes, size=2))
            if src != dst:
                edges[(src, dst)] = int(rng.integers(1, 11))
        if not edges:
            edges[(0, min(1, n_nodes - 1))] = 1
        graph = _graph_from_edges(edges, num_nodes=n_nodes)
        length = int(rng.integers(2, 10))
        path = NodePath(node_ids=rng.integers(0, n_nodes, size=length))
        return graph, path

    @staticmethod
    def _theta_membership(graph, path, theta):
        """Brute-force membership: every step must clear the theta bar."""
        normal_edges, _ = theta_subgraphs(graph, theta)
        ids = path.node_ids
        return all(
            (int(s), int(d)) in normal_edges.edges for s, d in zip(ids[:-1], ids[1:])
        )

    def test_low_normality_implies_weak_step_and_non_membership(self):
        rng = np.random.default_rng(0)
        checked = 0
        for _ in range(1200):
            graph, path = self._random_graph_and_path(rng)
            steps = len(path) - 1
            deg = graph.degrees()
            for theta in (1, 2, 5, 9):
                score = path_normality(graph, path, steps)
                step_values = [
                    graph.edges.get((int(s), int(d)), 0) * (deg[int(s)] - 1)
                    for s, d in zip(path.node_ids[:-1], path.node_ids[1:])
                ]
                if score < theta:
                    checked += 1
                    assert min(step_values) < theta
                    assert not self._theta_membership(graph, path, theta)
        assert checked > 1000

    def test_all_strong_steps_imply_high_normality(self):
        rng = np.random.default_rng(1)
        confirmed = 0
        for _ in range(1200):
            graph, path = self._random_graph_and_path(rng)
            steps = len(path) - 1
            deg = graph.degrees()
            for theta in (1, 2, 5):
                step_values = [
                    graph.edges.get((int(s), int(d)), 0) * (deg[int(s)] - 1)
                    for s, d in zip(path.node_ids[:-1], path.node_ids[1:])
                ]
                if min(step_values) >= theta:
                    confirmed += 1
                    assert path_normality(graph, path, steps) >= theta
                    assert self._theta_membership(graph, path, theta)
        assert confirmed > 100

    def test_weight_scaling_linearity(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            graph, path = self._random_graph_and_path(rng)
            base = path_normality(graph, path, 4)
            for scale in (2, 3, 7):
                scaled = PatternGraph(
                    nodes=graph.nodes,
                    edges={e: w * scale for e, w in graph.edges.items()},
                    node_sequence=graph.node_sequence,
                    embedding=None,
                    num_angles=graph.num_angles,
                    seed=0,
                )
                assert path_normality(scaled, path, 4) == pytest.approx(scale * base)


class TestMovingAverage:
    def test_constant_vector_unchanged(self):
        out = moving_average(np.full(40, 3.25), 9)
        np.testing.assert_array_equal(out, np.full(40, 3.25))

    def test_centered_no_phase_shift(self):
        # an impulse smears into a plateau centered on itself
        x = np.zeros(101)
        x[50] = 1.0
        out = moving_average(x, 11)
        for offset in range(1, 40):
            assert out[50 - offset] == pytest.approx(out[50 + offset])
        assert out[50] == pytest.approx(1 / 11)

    def test_boundary_windows_shrink_symmetrically(self):
        x = np.arange(10.0)
        out = moving_average(x, 5)
        assert out[0] == x[0]  # reach 0 at the very edge
        assert out[1] == pytest.approx(np.mean(x[0:3]))
        assert out[5] == pytest.approx(np.mean(x[3:8]))

    def test_window_one_is_identity(self):
        x = np.arange(6.0)
        np.testing.assert_array_equal(moving_average(x, 1), x)


@pytest.fixture(scope="module")
def srw_graph(small_srw):
    _, series, annotations = small_srw
    graph = build_graph(series, pattern_length=50, seed=7)
    return series, annotations, graph


class TestTimeToPath:
    def test_training_window_matches_stored_crossings(self, srw_graph):
        series, _, graph = srw_graph
        start, lq = 1000, 300
        path = time2path(graph, series.values[start : start + lq])
        seg = graph.crossing_segments
        members = graph.crossing_nodes
        take = (seg >= start) & (seg <= start + lq - 50 - 1)
        expected = members[take]
        keep = np.concatenate(([True], expected[1:] != expected[:-1]))
        np.testing.assert_array_equal(path.node_ids, expected[keep])
        assert not path.low_confidence

    def test_too_short_query_raises(self, srw_graph):
        _, _, graph = srw_graph
        with pytest.raises(InputTooShortError):
            time2path(graph, np.arange(30.0))

    def test_exact_length_query_falls_back_low_confidence(self, srw_graph):
        series, _, graph = srw_graph
        path = time2path(graph, series.values[0:50])
        assert path.low_confidence
        assert len(path) == 1

    def test_far_out_of_distribution_query_still_returns(self, srw_graph):
        _, _, graph = srw_graph
        rng = np.random.default_rng(3)
        query = rng.normal(size=120) * 1e-9 + 1e6  # tiny far-away wiggle
        path = time2path(graph, query)
        assert len(path) >= 1
        assert all(0 <= i < len(graph.nodes) for i in path.node_ids)


class TestNormalityProfile:
    def test_profile_length_and_finiteness(self, srw_graph):
        series, _, graph = srw_graph
        profile = normality_profile(graph, series, 200)
        assert len(profile) == len(series) - 200 + 1
        assert np.all(np.isfinite(profile.scores))
        assert np.all(profile.scores >= 0.0)

    def test_matches_per_window_scoring(self, srw_graph):
        series, _, graph = srw_graph
        profile = normality_profile(graph, series, 200, smooth=False)
        rng = np.random.default_rng(4)
        for start in rng.integers(0, len(profile), size=25):
            window = series.values[start : start + 200]
            want = path_normality(graph, time2path(graph, window), 200)
            assert profile.scores[start] == pytest.approx(want, abs=1e-9)

    def test_query_length_equal_to_pattern_length(self, srw_graph):
        # single-point windows have no transitions: both code paths give zero
        series, _, graph = srw_graph
        profile = normality_profile(graph, series, 50, smooth=False)
        assert len(profile) == len(series) - 50 + 1
        np.testing.assert_array_equal(profile.scores, 0.0)
        window_score = path_normality(graph, time2path(graph, series.values[:50]), 50)
        assert window_score == profile.scores[0]

    def test_periodic_series_scores_are_flat(self):
        # pattern length spanning half a period keeps the smoothing window
        # wide enough to cancel in-cycle crossing-density modulation
        t = np.arange(12_000)
        values = np.sin(2 * np.pi * t / 200) + 1e-4 * t
        graph = build_graph(values, pattern_length=100, seed=3)
        profile = normality_profile(graph, values, 200)
        interior = profile.scores[400:-400]
        cov = np.std(interior) / np.mean(interior)
        assert cov <= 0.1

    def test_single_anomaly_attains_minimum(self):
        spec = SrwSpec(length=20_000, num_anomalies=1, noise_pct=0.0, anomaly_len=200, seed=2)
        series, annotations = generate_srw(spec)
        graph = build_graph(series, pattern_length=50, seed=2)
        profile = normality_profile(graph, series, 200)
        pos = int(np.argmin(profile.scores))
        (start, length), = annotations
        assert start - 200 < pos < start + length

    def test_query_shorter_than_pattern_length(self, srw_graph):
        series, _, graph = srw_graph
        with pytest.raises(QueryTooShortError):
            normality_profile(graph, series, 49)

    def test_series_shorter_than_query(self, srw_graph):
        _, _, graph = srw_graph
        with pytest.raises(InputTooShortError):
            normality_profile(graph, np.arange(100.0), 200)

    def test_smoothing_preserves_length(self, srw_graph):
        series, _, graph = srw_graph
        rough = normality_profile(graph, series, 200, smooth=False)
        smooth = normality_profile(graph, series, 200, smooth=True)
        assert len(rough) == len(smooth)
        assert not np.array_equal(rough.scores, smooth.scores)

    def test_scaled_weights_keep_ranking_positions(self, srw_graph):
        series, _, graph = srw_graph
        profile = normality_profile(graph, series, 200)
        base = rank_anomalies(profile, 4)
        scaled_graph = PatternGraph(
            nodes=graph.nodes,
            edges={e: w * 3 for e, w in graph.edges.items()},
            node_sequence=graph.node_sequence,
            embedding=graph.embedding,
            num_angles=graph.num_angles,
            seed=graph.seed,
        )
        scaled = rank_anomalies(normality_profile(scaled_graph, series, 200), 4)
        assert scaled.positions() == base.positions()
        for (_, a), (_, b) in zip(scaled.items, base.items):
            assert a == pytest.approx(3 * b, rel=1e-12)


class TestRankAnomalies:
    def test_single_global_minimum(self):
        scores = np.full(500, 10.0)
        scores[237] = 1.0
        profile = NormalityProfile(scores=scores, query_length=100, smoothed=True)
        ranking = rank_anomalies(profile, 1)
        assert ranking.positions() == [237]
        assert not ranking.truncated

    def test_nearby_minima_are_masked(self):
        scores = np.full(1000, 10.0)
        scores[400] = 1.0
        scores[410] = 1.5  # within lq/2 of the first pick
        scores[800] = 2.0
        profile = NormalityProfile(scores=scores, query_length=200, smoothed=True)
        ranking = rank_anomalies(profile, 2)
        assert ranking.positions() == [400, 800]

    def test_masking_radius_is_half_query_length(self):
        scores = np.full(1000, 10.0)
        scores[400] = 1.0
        scores[499] = 2.0  # |499 - 400| = 99 < 100: masked
        scores[500] = 3.0  # exactly lq/2 away: eligible
        profile = NormalityProfile(scores=scores, query_length=200, smoothed=True)
        ranking = rank_anomalies(profile, 2)
        assert ranking.positions() == [400, 500]

    def test_truncation_flag(self):
        profile = NormalityProfile(scores=np.arange(50.0), query_length=200, smoothed=True)
        ranking = rank_anomalies(profile, 3)
        assert ranking.truncated
        assert ranking.positions() == [0]

    def test_k_validation(self):
        profile = NormalityProfile(scores=np.arange(5.0), query_length=2, smoothed=True)
        with pytest.raises(ValueError):
            rank_anomalies(profile, 0)


class TestCsvExports:
    def test_profile_csv_shape(self):
        profile = NormalityProfile(scores=np.array([1.5, 0.25]), query_length=2, smoothed=True)
        text = profile_to_csv(profile)
        lines = text.strip().split("\n")
        assert lines[0] == "position,normality,anomaly_score"
        assert lines[1] == "0,1.5,-1.5"
        assert lines[2] == "1,0.25,-0.25"

    def test_ranking_csv_scores_are_anomaly_oriented(self):
        ranking = rank_anomalies(
            NormalityProfile(scores=np.array([5.0, 9.0, 1.0, 9.0, 9.0]), query_length=2, smoothed=True),
            2,
        )
        text = ranking_to_csv(ranking)
        lines = text.strip().split("\n")
        assert lines[0] == "rank,position,score"
        assert lines[1] == "1,2,-1.0"

    def test_round_trip_determinism(self):
        profile = NormalityProfile(
            scores=np.array([0.1, 0.2, 0.30000000000000004]), query_length=2, smoothed=False
        )
        assert profile_to_csv(profile) == profile_to_csv(profile)
        assert "0.30000000000000004" in profile_to_csv(profile)
