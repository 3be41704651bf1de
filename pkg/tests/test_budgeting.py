"""Cluster-count selection and geometry-seeded plane initialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planemix.budgeting import (
    SILHOUETTE_THRESHOLD,
    InitSpec,
    auto_budget,
    auto_plane_budget,
    fixed_budget,
    init_auto,
    init_kmeans,
    init_logreg,
    init_random,
    initial_planes,
    kmeans,
    silhouette_score,
)


def blob(rng, center, n=50, spread=0.2):
    return center + spread * rng.standard_normal((n, 2))


def reference_silhouette(points, labels):
    """Brute-force silhouette straight from the definition."""
    n = len(points)
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    vals = np.zeros(n)
    for i in range(n):
        mine = labels == labels[i]
        if mine.sum() == 1:
            vals[i] = 0.0
            continue
        a = d[i, mine & (np.arange(n) != i)].mean()
        b = min(d[i, labels == c].mean()
                for c in np.unique(labels) if c != labels[i])
        vals[i] = (b - a) / max(a, b)
    return float(vals.mean())


class TestKMeans:
    def test_single_center_is_the_mean(self, rng):
        pts = rng.standard_normal((80, 3))
        res = kmeans(pts, 1, seed=0)
        assert np.allclose(res.centers[0], pts.mean(axis=0), atol=1e-9)

    def test_recovers_well_separated_clusters(self, rng):
        pts = np.vstack([blob(rng, (0, 0)), blob(rng, (8, 0)),
                         blob(rng, (4, 7))])
        res = kmeans(pts, 3, seed=1)
        # each true group lands in exactly one recovered cluster
        for lo in (0, 50, 100):
            assert len(set(res.assignments[lo:lo + 50])) == 1
        assert res.reseeds == 0

    def test_assignments_cover_every_point(self, rng):
        pts = rng.standard_normal((60, 2))
        res = kmeans(pts, 4, seed=2)
        assert res.assignments.shape == (60,)
        assert set(res.assignments) <= set(range(4))

    def test_deterministic_in_seed(self, rng):
        pts = rng.standard_normal((100, 2))
        a = kmeans(pts, 3, seed=5)
        b = kmeans(pts, 3, seed=5)
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.assignments, b.assignments)

    def test_inertia_never_worse_than_single_cluster(self, rng):
        pts = rng.standard_normal((90, 2))
        one = kmeans(pts, 1, seed=0).inertia
        four = kmeans(pts, 4, seed=0).inertia
        assert four <= one + 1e-9

    def test_rejects_more_clusters_than_points(self, rng):
        with pytest.raises(ValueError):
            kmeans(rng.standard_normal((3, 2)), 5, seed=0)


class TestSilhouette:
    def test_matches_brute_force_reference(self, rng):
        pts = rng.standard_normal((40, 2))
        labels = rng.integers(0, 3, size=40)
        if len(set(labels)) < 2:
            labels[0] = (labels[0] + 1) % 3
        assert silhouette_score(pts, labels) == pytest.approx(
            reference_silhouette(pts, labels), abs=1e-10)

    def test_hand_worked_four_point_example(self):
        # two pairs on a line: {0, 1} and {10, 11}, one-dimensional
        pts = np.array([[0.0], [1.0], [10.0], [11.0]])
        labels = np.array([0, 0, 1, 1])
        # every point: a = 1, b = mean distance to the far pair
        # point 0: b = (10 + 11) / 2 = 10.5 -> s = 9.5 / 10.5
        # point 1: b = (9 + 10) / 2 = 9.5  -> s = 8.5 / 9.5
        expected = np.mean([9.5 / 10.5, 8.5 / 9.5, 8.5 / 9.5, 9.5 / 10.5])
        assert silhouette_score(pts, labels) == pytest.approx(expected,
                                                              abs=1e-12)

    def test_tight_separated_clusters_score_near_one(self, rng):
        pts = np.vstack([blob(rng, (0, 0), spread=0.05),
                         blob(rng, (50, 0), spread=0.05)])
        labels = np.repeat([0, 1], 50)
        assert silhouette_score(pts, labels) > 0.95

    def test_swapped_labels_score_negative(self, rng):
        pts = np.vstack([blob(rng, (0, 0), spread=0.05),
                         blob(rng, (50, 0), spread=0.05)])
        labels = np.repeat([1, 0], 50)
        wrong = np.concatenate([labels[25:], labels[:25]])
        assert silhouette_score(pts, wrong) < 0

    def test_requires_two_clusters(self, rng):
        with pytest.raises(ValueError):
            silhouette_score(rng.standard_normal((10, 2)), np.zeros(10, int))

    @given(st.integers(min_value=0, max_value=500))
    @settings(max_examples=25, deadline=None)
    def test_always_within_minus_one_and_one(self, seed):
        gen = np.random.default_rng(seed)
        pts = gen.standard_normal((30, 2))
        labels = gen.integers(0, 2, size=30)
        labels[:2] = [0, 1]
        s = silhouette_score(pts, labels)
        assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12


class TestBudget:
    def test_counts_clear_cluster_structure(self, rng):
        two = np.vstack([blob(rng, (0, 0)), blob(rng, (8, 0))])
        three = np.vstack([blob(rng, (0, 0)), blob(rng, (8, 0)),
                           blob(rng, (4, 7))])
        assert auto_plane_budget(two, seed=0) == 2
        assert auto_plane_budget(three, seed=0) == 3

    def test_cap_limits_the_answer(self, rng):
        five = np.vstack([blob(rng, (i * 6, (i % 2) * 6), n=40)
                          for i in range(5)])
        assert auto_plane_budget(five, cap=4, seed=0) == 4
        assert auto_plane_budget(five, cap=2, seed=0) == 2

    def test_too_few_points_fall_back_to_one_plane(self, rng):
        assert auto_plane_budget(rng.standard_normal((7, 2)), cap=4,
                                 seed=0) == 1

    def test_identical_points_fall_back_to_one_plane(self):
        assert auto_plane_budget(np.ones((40, 2)), seed=0) == 1

    def test_threshold_constant_is_the_documented_gate(self):
        assert SILHOUETTE_THRESHOLD == 0.20

    def test_auto_budget_is_per_class(self, rng):
        # class 0 spreads over three lobes, class 1 over two
        x0 = np.vstack([blob(rng, (0, 0)), blob(rng, (8, 0)),
                        blob(rng, (4, 7))])
        x1 = np.vstack([blob(rng, (20, 0)), blob(rng, (28, 0))])
        lifted = np.vstack([x0, x1])
        labels = np.repeat([0, 1], [150, 100])
        budget = auto_budget(lifted, labels, 2, seed=0)
        assert budget.per_class[0] == 3
        assert budget.per_class[1] == 2

    def test_fixed_budget_repeats_the_request(self):
        assert fixed_budget(3, 2).per_class == (2, 2, 2)
        # an explicit request may exceed the auto cap
        assert fixed_budget(2, 9, cap=4).per_class == (9, 9)

    def test_budget_total_matches_offsets_contract(self, rng):
        budget = fixed_budget(3, 2)
        assert sum(budget.per_class) == 6


class TestInit:
    def two_lobe_problem(self, rng):
        x0 = np.vstack([blob(rng, (-4, 0)), blob(rng, (4, 0))])
        x1 = blob(rng, (0, 6), n=100)
        lifted = np.vstack([x0, x1])
        labels = np.repeat([0, 1], 100)
        return lifted, labels

    def test_kmeans_init_shapes_and_unit_norms(self, rng):
        lifted, labels = self.two_lobe_problem(rng)
        budget = auto_budget(lifted, labels, 2, seed=0)
        init = init_kmeans(lifted, labels, budget, seed=0)
        m_total = sum(budget.per_class)
        assert init.weights.shape == (m_total, 2)
        assert init.biases.shape == (m_total,)
        assert init.offsets.tolist() == [0, *np.cumsum(budget.per_class)]
        norms = np.linalg.norm(init.weights, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-9)

    def test_kmeans_init_planes_point_at_their_lobes(self, rng):
        lifted, labels = self.two_lobe_problem(rng)
        budget = auto_budget(lifted, labels, 2, seed=0)
        init = init_kmeans(lifted, labels, budget, seed=0)
        mu = lifted.mean(axis=0)
        # class 0 owns two planes, one per lobe; each scores its own lobe
        # center above the global mean
        z_own = init.weights[:2] @ (np.array([[-4.0, 0.0], [4.0, 0.0]]) - mu).T
        assert z_own.max(axis=1).min() > 0.5

    def test_logreg_init_separates_clean_blobs(self, rng):
        x0 = blob(rng, (-3, 0), n=80)
        x1 = blob(rng, (3, 0), n=80)
        lifted = np.vstack([x0, x1])
        labels = np.repeat([0, 1], 80)
        init = init_logreg(lifted, labels, fixed_budget(2, 1), seed=0)
        z = lifted @ init.weights.T + init.biases
        assert ((z[:, 0] > z[:, 1]) == (labels == 0)).mean() > 0.95

    def test_random_init_is_small_and_seeded(self, rng):
        lifted, labels = self.two_lobe_problem(rng)
        a = init_random(lifted, labels, fixed_budget(2, 2), seed=3)
        b = init_random(lifted, labels, fixed_budget(2, 2), seed=3)
        assert np.array_equal(a.weights, b.weights)
        assert np.abs(a.weights).max() < 0.1
        assert a.strategy == "random"

    def test_auto_init_prefers_geometry_on_clean_data(self, rng):
        lifted, labels = self.two_lobe_problem(rng)
        budget = auto_budget(lifted, labels, 2, seed=0)
        init = init_auto(lifted, labels, budget, seed=0)
        assert init.strategy == "kmeans"

    def test_dispatcher_honors_the_requested_strategy(self, rng):
        lifted, labels = self.two_lobe_problem(rng)
        budget = fixed_budget(2, 2)
        for strategy in ("kmeans", "logreg", "random"):
            init = initial_planes(lifted, labels, budget,
                                  InitSpec(strategy=strategy, seed=0))
            assert init.strategy == strategy

    def test_dispatcher_rejects_unknown_strategy(self, rng):
        lifted, labels = self.two_lobe_problem(rng)
        with pytest.raises(ValueError):
            initial_planes(lifted, labels, fixed_budget(2, 1),
                           InitSpec(strategy="destiny", seed=0))
