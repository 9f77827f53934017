import numpy as np
import pytest

from series2graph import InputTooShortError, nn_profile, top_discords
from series2graph.discord import discord_ranking_to_csv, nn_profile_to_csv

from conftest import duplicated_anomaly_series, naive_nn_profile, naive_znorm_distance


class TestNnProfile:
    def test_exact_repetition_gives_zero_distances(self):
        pattern = np.sin(2 * np.pi * np.arange(25) / 25)
        values = np.tile(pattern, 12)
        profile = nn_profile(values, 25, 1)
        assert np.max(profile.distances) <= 1e-9

    def test_single_anomaly_is_argmax(self):
        rng = np.random.default_rng(3)
        t = np.arange(2000)
        values = np.sin(2 * np.pi * t / 40) + rng.normal(0, 0.02, 2000)
        values[1200:1240] = np.sin(2 * np.pi * 2 * np.arange(40) / 40 + 1.2)
        profile = nn_profile(values, 40, 1)
        pos = int(np.argmax(profile.distances))
        assert 1200 - 40 < pos < 1240

    def test_duplicated_anomaly_needs_second_order(self):
        values, starts = duplicated_anomaly_series()
        length = 50

        def hits_anomaly(pos):
            return any(s - length < pos < s + length for s in starts)

        first = top_discords(nn_profile(values, length, 1), 1)
        assert not hits_anomaly(first.positions()[0])

        second = top_discords(nn_profile(values, length, 2), 2)
        assert all(hits_anomaly(p) for p in second.positions())
        assert len(second.positions()) == 2

    def test_matches_naive_double_loop_bitwise(self):
        # a handful of cases here; the acceptance suite runs the full batch
        rng = np.random.default_rng(4)
        for _ in range(5):
            n = int(rng.integers(80, 160))
            length = int(rng.integers(8, 24))
            order = int(rng.integers(1, 4))
            values = rng.normal(size=n)
            got = nn_profile(values, length, order)
            want = naive_nn_profile(values, length, order)
            assert np.array_equal(got.distances, want)

    def test_symmetric_consistency(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=220)
        profile = nn_profile(values, 16, 1)
        n = len(profile)
        for i in range(0, n, 23):
            # find i's actual nearest neighbor and check the reverse bound
            best_j, best_d = None, np.inf
            for j in range(n):
                if abs(i - j) < 8:
                    continue
                d = naive_znorm_distance(values[i : i + 16], values[j : j + 16])
                if d < best_d:
                    best_j, best_d = j, d
            assert profile.distances[best_j] <= best_d + 1e-12

    def test_order_monotonicity(self):
        rng = np.random.default_rng(6)
        values = rng.normal(size=400)
        d1 = nn_profile(values, 20, 1).distances
        d2 = nn_profile(values, 20, 2).distances
        d4 = nn_profile(values, 20, 4).distances
        assert np.all(d1 <= d2 + 1e-15)
        assert np.all(d2 <= d4 + 1e-15)

    def test_constant_windows_flagged_and_excluded(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=400)
        values[100:160] = 2.0  # a flat stretch
        profile = nn_profile(values, 20, 1)
        flat_idx = 120  # interior of the flat run
        assert profile.flagged[flat_idx]
        ranking = top_discords(profile, 3)
        assert flat_idx not in ranking.positions()

    def test_series_shorter_than_two_windows(self):
        with pytest.raises(InputTooShortError):
            nn_profile(np.arange(30.0), 16, 1)

    def test_subsampled_regime_still_finds_the_anomaly(self):
        # enough windows to cross the exact-search limit
        from series2graph.discord import EXACT_WINDOW_LIMIT

        rng = np.random.default_rng(13)
        n = EXACT_WINDOW_LIMIT + 2000
        t = np.arange(n)
        values = np.sin(2 * np.pi * t / 60) + rng.normal(0, 0.02, n)
        values[4000:4060] = np.sin(2 * np.pi * 2 * np.arange(60) / 60 + 0.7)
        profile = nn_profile(values, 60, 1)
        assert len(profile) == n - 60 + 1
        pos = int(np.argmax(profile.distances))
        assert 4000 - 60 < pos < 4060


class TestTopDiscords:
    def test_flat_profile_with_spike(self):
        rng = np.random.default_rng(8)
        values = np.tile(np.sin(np.arange(30) / 30 * 2 * np.pi), 20)
        values = values + rng.normal(0, 0.01, values.size)
        values[310:340] = rng.normal(0, 1.0, 30)
        profile = nn_profile(values, 30, 1)
        top = top_discords(profile, 1)
        assert 280 < top.positions()[0] < 340

    def test_truncation_when_slots_run_out(self):
        rng = np.random.default_rng(9)
        values = rng.normal(size=64)
        profile = nn_profile(values, 16, 1)
        ranking = top_discords(profile, 40)
        assert ranking.truncated
        assert len(ranking.positions()) < 40

    def test_masking_respects_half_length(self):
        rng = np.random.default_rng(10)
        values = rng.normal(size=300)
        profile = nn_profile(values, 20, 1)
        ranking = top_discords(profile, 5)
        positions = ranking.positions()
        for a in positions:
            for b in positions:
                if a != b:
                    assert abs(a - b) >= 10


class TestCsv:
    def test_profile_csv(self):
        rng = np.random.default_rng(11)
        profile = nn_profile(rng.normal(size=80), 16, 1)
        text = nn_profile_to_csv(profile)
        lines = text.strip().split("\n")
        assert lines[0] == "position,nn_distance"
        assert len(lines) == len(profile) + 1

    def test_ranking_csv_keeps_distances(self):
        rng = np.random.default_rng(12)
        profile = nn_profile(rng.normal(size=80), 16, 1)
        ranking = top_discords(profile, 2)
        text = discord_ranking_to_csv(ranking)
        lines = text.strip().split("\n")
        assert lines[0] == "rank,position,score"
        first_score = float(lines[1].split(",")[2])
        assert first_score == pytest.approx(ranking.items[0][1])
