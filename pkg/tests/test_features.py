"""Standardizer, PCA, random feature lift, and pipeline composition."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planemix.datasets import Dataset, SplitSpec, make_circles, stratified_split
from planemix.features import (
    AUTO_GAMMA_GRID,
    FeaturePipeline,
    PipelineConfig,
    build_pipeline,
    default_lift_candidates,
    fit_pca,
    fit_standardizer,
    identity_pipeline,
    rff_transform,
    sample_rff,
    select_lift,
)
from planemix.training import probe_train_config


class TestStandardizer:
    def test_transform_centers_and_scales(self, rng):
        x = rng.normal(3.0, 5.0, size=(500, 4))
        std = fit_standardizer(x)
        z = std.transform(x)
        assert np.allclose(z.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(z.std(axis=0), 1.0, atol=1e-12)

    def test_matches_population_moments(self, rng):
        x = rng.standard_normal((40, 3))
        std = fit_standardizer(x)
        assert np.allclose(std.mean, x.mean(axis=0))
        assert np.allclose(std.scale, x.std(axis=0))

    def test_constant_column_does_not_blow_up(self):
        x = np.column_stack([np.full(50, 2.5), np.arange(50.0)])
        std = fit_standardizer(x)
        z = std.transform(x)
        assert std.scale[0] == 1.0
        assert np.allclose(z[:, 0], 0.0)
        assert np.isfinite(z).all()


class TestPca:
    def test_components_are_orthonormal(self, rng):
        x = rng.standard_normal((200, 6)) @ rng.standard_normal((6, 6))
        std = fit_standardizer(x)
        pca = fit_pca(std.transform(x), 0.9)
        r = pca.components.shape[1]
        assert np.allclose(pca.components.T @ pca.components, np.eye(r),
                           atol=1e-10)

    def test_full_variance_keeps_every_direction(self, rng):
        x = rng.standard_normal((100, 5))
        pca = fit_pca(x, 1.0)
        assert pca.components.shape == (5, 5)

    def test_retained_rank_matches_eigenvalue_tally(self, rng):
        # one dominant direction, the rest tiny: 0.5 retained keeps rank 1
        base = rng.standard_normal((300, 1)) * 10.0
        rest = rng.standard_normal((300, 3)) * 0.1
        x = np.hstack([base, rest])
        pca = fit_pca(x, 0.5)
        assert pca.components.shape[1] == 1

    def test_projection_agrees_with_eigendecomposition(self, rng):
        x = rng.standard_normal((150, 4))
        pca = fit_pca(x, 1.0)
        centered = x - pca.center
        cov = centered.T @ centered / len(x)
        evals = np.linalg.eigvalsh(cov)[::-1]
        assert np.allclose(np.sort(pca.eigenvalues)[::-1], evals, atol=1e-10)
        proj = pca.transform(x)
        assert np.allclose(proj.var(axis=0, ddof=0),
                           pca.eigenvalues[:proj.shape[1]], atol=1e-10)


class TestRandomFeatures:
    def test_output_dim_is_twice_the_frequency_count(self, rng):
        rff = sample_rff(3, 64, 1.0, seed=0)
        out = rff_transform(rff, rng.standard_normal((10, 3)))
        assert out.shape == (10, 128)

    def test_frequency_variance_tracks_bandwidth(self):
        for gamma in (0.25, 1.0, 4.0):
            rff = sample_rff(2, 20000, gamma, seed=1)
            assert np.isclose(rff.omega.var(), 2.0 * gamma, rtol=0.05)

    def test_phases_cover_the_circle(self):
        rff = sample_rff(2, 5000, 1.0, seed=2)
        assert rff.phases.min() >= 0.0
        assert rff.phases.max() < 2.0 * np.pi
        assert rff.phases.mean() == pytest.approx(np.pi, rel=0.05)

    @given(st.integers(min_value=0, max_value=1000))
    @settings(max_examples=30, deadline=None)
    def test_every_lifted_vector_has_squared_norm_two(self, seed):
        gen = np.random.default_rng(seed)
        rff = sample_rff(2, 128, float(gen.uniform(0.1, 4.0)), seed=seed)
        x = gen.standard_normal((5, 2)) * 3.0
        norms = (rff_transform(rff, x) ** 2).sum(axis=1)
        assert np.allclose(norms, 2.0, atol=1e-12)

    def test_inner_products_approximate_the_scaled_gaussian_kernel(self, rng):
        gamma = 1.0
        rff = sample_rff(2, 2048, gamma, seed=3)
        x = rng.standard_normal((50, 2))
        y = rng.standard_normal((50, 2))
        approx = (rff_transform(rff, x) * rff_transform(rff, y)).sum(axis=1)
        exact = 2.0 * np.exp(-gamma * ((x - y) ** 2).sum(axis=1))
        assert np.abs(approx - exact).mean() < 0.1

    def test_same_seed_same_features(self, rng):
        x = rng.standard_normal((4, 2))
        a = rff_transform(sample_rff(2, 32, 0.5, seed=9), x)
        b = rff_transform(sample_rff(2, 32, 0.5, seed=9), x)
        assert np.array_equal(a, b)


class TestPipeline:
    def test_identity_passthrough(self, rng):
        pipe = identity_pipeline(3)
        x = rng.standard_normal((6, 3))
        assert np.array_equal(pipe.apply(x), x)
        assert pipe.is_linear
        assert pipe.output_dim == 3

    def test_single_vector_matches_batch_row(self, rng):
        data = rng.standard_normal((30, 2))
        pipe = build_pipeline(data, PipelineConfig("rff", 16, 1.0, None, 0))
        batch = pipe.apply(data)
        single = pipe.apply(data[4])
        assert np.allclose(single, batch[4], atol=1e-15)

    def test_rff_pipeline_is_not_linear(self, rng):
        data = rng.standard_normal((30, 2))
        pipe = build_pipeline(data, PipelineConfig("rff", 16, 1.0, None, 0))
        assert not pipe.is_linear
        assert pipe.output_dim == 32

    def test_linear_pipeline_standardizes(self, rng):
        data = rng.normal(5.0, 2.0, size=(100, 3))
        pipe = build_pipeline(data, PipelineConfig("linear", 0, 1.0, None, 0))
        z = pipe.apply(data)
        assert np.allclose(z.mean(axis=0), 0.0, atol=1e-10)

    def test_pca_stage_reduces_width(self, rng):
        # six observed columns, only two independent sources behind them
        source = rng.standard_normal((200, 2))
        mixing = rng.standard_normal((2, 6))
        data = source @ mixing + 1e-6 * rng.standard_normal((200, 6))
        pipe = build_pipeline(data, PipelineConfig("linear", 0, 1.0, 0.95, 0))
        assert pipe.output_dim == 2


class TestLiftSelection:
    def test_candidate_grid_covers_linear_and_all_bandwidths(self):
        cands = default_lift_candidates()
        lifts = [c.lift for c in cands]
        assert lifts.count("linear") == 1
        gammas = sorted(c.rff_gamma for c in cands if c.lift == "rff")
        assert gammas == sorted(AUTO_GAMMA_GRID)

    def test_probing_prefers_the_lift_that_separates_circles(self):
        data = make_circles(600, noise=0.08, seed=0)
        tr, va, _ = stratified_split(data, SplitSpec(seed=0))
        pipe, probes = select_lift(
            tr, va, default_lift_candidates(),
            probe_config=probe_train_config(), final_rff_dim=128)
        assert not pipe.is_linear
        assert len(probes) == len(default_lift_candidates())
        assert all(np.isfinite(p.val_loglik) or p.error for p in probes)

    def test_failed_candidates_are_recorded_not_raised(self):
        data = make_circles(200, noise=0.08, seed=1)
        tr, va, _ = stratified_split(data, SplitSpec(seed=1))
        # a zero-frequency lift is degenerate but must not abort selection
        cands = [PipelineConfig("linear", 0, 1.0, None, 0),
                 PipelineConfig("rff", 0, 1.0, None, 0)]
        pipe, probes = select_lift(tr, va, cands,
                                   probe_config=probe_train_config(),
                                   final_rff_dim=None)
        assert len(probes) == 2
        assert pipe is not None


def test_pipeline_dataclass_shape():
    pipe = identity_pipeline(2)
    assert isinstance(pipe, FeaturePipeline)
    assert pipe.pca is None and pipe.rff is None
