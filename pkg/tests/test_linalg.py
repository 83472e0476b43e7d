import math

import numpy as np
import pytest

from shiftprune.linalg import (
    AttentionWeights,
    cosine_similarity,
    farthest_point_select,
    scaled_dot_attention,
    shannon_entropy,
    softmax,
    top_k,
)


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        w = softmax([0.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(w.weights, [0.25, 0.25, 0.25, 0.25], atol=1e-15)

    def test_single_element(self):
        for x in (-50.0, 0.0, 3.7, 1e8):
            assert softmax([x]).weights[0] == 1.0

    def test_two_element_value(self):
        # e^0 / (e^0 + e^ln2) = 1/3
        w = softmax([0.0, math.log(2.0)])
        np.testing.assert_allclose(w.weights, [1.0 / 3.0, 2.0 / 3.0], atol=1e-12)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            softmax([])
        with pytest.raises(ValueError):
            softmax([0.0, np.nan])
        with pytest.raises(ValueError):
            softmax([0.0, np.inf])

    def test_normalization_and_shift_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x = rng.normal(scale=10.0, size=rng.integers(1, 40))
            w = softmax(x)
            assert abs(w.weights.sum() - 1.0) < 1e-9
            assert np.all(w.weights > 0)
            for c in (-100.0, -1.0, 0.5, 100.0):
                np.testing.assert_allclose(
                    softmax(x + c).weights, w.weights, atol=1e-12
                )


class TestScaledDotAttention:
    def test_orthogonal_keys_give_uniform(self):
        q = np.array([0.0, 0.0, 1.0])
        keys = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        w = scaled_dot_attention(q, keys)
        np.testing.assert_allclose(w.weights, [0.5, 0.5], atol=1e-15)

    def test_one_dim_matches_hand_softmax(self):
        # d=1: logits are 0 and ln2 after /sqrt(1)
        w = scaled_dot_attention([1.0], [[0.0], [math.log(2.0)]])
        np.testing.assert_allclose(w.weights, [1.0 / 3.0, 2.0 / 3.0], atol=1e-12)

    def test_matching_key_wins_at_large_norm(self):
        q = np.array([30.0, 0.0, 0.0])
        keys = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        w = scaled_dot_attention(q, keys)
        assert int(np.argmax(w.weights)) == 0
        assert w.weights[0] > 0.99

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            scaled_dot_attention([1.0, 2.0], [[1.0, 2.0, 3.0]])

    def test_index_map_in_key_order(self):
        w = scaled_dot_attention([1.0], [[0.1], [0.2]], index_map=[7, 3])
        assert list(w.index_map) == [7, 3]


class TestCosineSimilarity:
    def test_identity(self):
        v = np.array([0.2, 0.5, 0.3])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_support(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_value(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            0.7071067812, abs=1e-9
        )

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_symmetry_scale_invariance_and_range(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = rng.integers(2, 30)
            a = rng.random(n) + 1e-9
            b = rng.random(n) + 1e-9
            s = cosine_similarity(a, b)
            assert cosine_similarity(b, a) == s
            assert -1e-12 <= s <= 1.0 + 1e-12
            for alpha in (1e-3, 0.5, 7.0, 1e4):
                assert cosine_similarity(alpha * a, b) == pytest.approx(s, abs=1e-12)


class TestTopK:
    def test_unique_max(self):
        assert list(top_k([0.1, 0.5, 0.4], 1)) == [1]

    def test_tie_break_lowest_index(self):
        assert list(top_k([0.3, 0.3, 0.3], 2)) == [0, 1]

    def test_full_budget(self):
        assert list(top_k([5.0, 1.0, 3.0], 3)) == [0, 1, 2]

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            top_k([1.0, 2.0], 0)
        with pytest.raises(ValueError):
            top_k([1.0, 2.0], 3)

    def test_matches_stable_sort_oracle(self):
        # duplicates are frequent with few distinct values
        rng = np.random.default_rng(5)
        for _ in range(10_000):
            n = int(rng.integers(1, 20))
            v = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=n)
            k = int(rng.integers(1, n + 1))
            oracle = sorted(
                sorted(range(n), key=lambda i: (-v[i], i))[:k]
            )
            assert list(top_k(v, k)) == oracle


class TestShannonEntropy:
    def test_uniform_maximum(self):
        for n in (2, 4, 16, 256):
            w = softmax(np.zeros(n))
            assert shannon_entropy(w) == pytest.approx(math.log(n), abs=1e-9)

    def test_near_degenerate_limit(self):
        eps = 1e-12
        w = AttentionWeights(
            np.array([1.0 - eps, eps / 3, eps / 3, eps / 3]), np.arange(4)
        )
        assert shannon_entropy(w) == pytest.approx(0.0, abs=1e-9)

    def test_hand_value(self):
        w = AttentionWeights(np.array([0.5, 0.25, 0.25]), np.arange(3))
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(4.0)
        assert shannon_entropy(w) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(1.0397, abs=1e-4)


class TestFarthestPointSelect:
    def test_orthogonal_complete_selection(self):
        e = np.eye(3)
        assert list(farthest_point_select(e, 3)) == [0, 1, 2]

    def test_duplicate_pair_keeps_lower_index(self):
        e = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert list(farthest_point_select(e, 2)) == [0, 2]

    def test_k1_convention(self):
        e = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert list(farthest_point_select(e, 1)) == [0]

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            farthest_point_select(np.array([[0.0, 0.0], [1.0, 0.0]]), 1)

    def test_outlier_always_included(self):
        # two near-identical keys plus one orthogonal outlier
        e = np.array([[1.0, 0.01], [1.0, -0.01], [0.0, 1.0]])
        brute_best = None
        for i in range(3):
            for j in range(i + 1, 3):
                d = 1.0 - np.dot(e[i], e[j]) / (
                    np.linalg.norm(e[i]) * np.linalg.norm(e[j])
                )
                if brute_best is None or d > brute_best[0]:
                    brute_best = (d, {i, j})
        assert set(farthest_point_select(e, 2)) == brute_best[1]
        assert 2 in set(farthest_point_select(e, 2))

    def test_greedy_dominates_random_subsets(self):
        # spot-check, not global optimality. The greedy is a 2-approximation,
        # so dominance over sampled subsets is only structural on redundant
        # banks (near-duplicate clusters, k = cluster count): nearly every
        # random draw then contains a near-zero-distance duplicate pair.
        rng = np.random.default_rng(0)
        for n_clusters, per_cluster, k in [(10, 10, 10), (12, 10, 12), (10, 10, 2)]:
            d = 48
            centers = rng.normal(size=(n_clusters, d))
            centers /= np.linalg.norm(centers, axis=1, keepdims=True)
            pts = np.repeat(centers, per_cluster, axis=0)
            pts = pts + 0.01 * rng.normal(size=pts.shape)
            unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
            dist = 1.0 - unit @ unit.T

            def min_pairwise(idx):
                idx = list(idx)
                return min(
                    dist[idx[i], idx[j]]
                    for i in range(len(idx))
                    for j in range(i + 1, len(idx))
                )

            ours = min_pairwise(farthest_point_select(pts, k))
            for _ in range(1000):
                sample = rng.choice(len(pts), size=k, replace=False)
                assert ours >= min_pairwise(sample) - 1e-12


class TestAttentionWeights:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            AttentionWeights(np.array([1.0, 0.0]), np.arange(2))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            AttentionWeights(np.array([0.5, 0.6]), np.arange(2))

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValueError):
            AttentionWeights(np.array([0.5, 0.5]), np.array([1, 1]))

    def test_group_structure(self):
        w = AttentionWeights(
            np.array([0.4, 0.6, 1.0]), np.array([0, 1, 2]), group_sizes=(2, 1)
        )
        assert w.group_sizes == (2, 1)
        with pytest.raises(ValueError):
            AttentionWeights(
                np.array([0.4, 0.6, 0.5]), np.array([0, 1, 2]), group_sizes=(2, 1)
            )
