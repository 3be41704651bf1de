"""Loss, gradients, optimizer schedules, and the training loop."""

import numpy as np
import pytest

from planemix.budgeting import InitSpec, auto_budget, fixed_budget, init_random
from planemix.datasets import Dataset
from planemix.features import identity_pipeline
from planemix.model import PlaneMixture
from planemix.training import (
    Grads,
    TrainConfig,
    TrainLog,
    TrainState,
    UsageTracker,
    adam_step,
    alpha_at,
    clip_global_norm,
    cross_entropy,
    fit,
    fit_binary_plane,
    gradients,
    log_softmax,
    lr_at,
    optimize_planes,
    probe_train_config,
    smooth_targets,
    total_loss,
    usage_coefficients,
)

ADAM_B1, ADAM_B2, ADAM_EPS = 0.9, 0.999, 1e-8


def toy_setup(rng, class_planes=(2, 2), n=24, dim=3, **config_kw):
    m_total = sum(class_planes)
    offsets = np.concatenate([[0], np.cumsum(class_planes)])
    mdl = PlaneMixture(0.3 * rng.standard_normal((m_total, dim)),
                       0.1 * rng.standard_normal(m_total),
                       offsets, 4.0, identity_pipeline(dim))
    lifted = rng.standard_normal((n, dim))
    labels = rng.integers(0, len(class_planes), size=n)
    tracker = UsageTracker(offsets)
    config = TrainConfig(seed=0, **config_kw)
    return mdl, lifted, labels, tracker, config


def numeric_grad(f, arr, h=1e-6):
    out = np.zeros_like(arr)
    flat = arr.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f()
        flat[i] = keep - h
        down = f()
        flat[i] = keep
        out.ravel()[i] = (up - down) / (2 * h)
    return out


class TestTargetsAndLoss:
    def test_smoothed_rows_are_distributions(self):
        t = smooth_targets(np.array([0, 2, 1]), 3, 0.1)
        assert np.allclose(t.sum(axis=1), 1.0, atol=1e-15)
        assert t[0, 0] == pytest.approx(0.9 + 0.1 / 3)
        assert t[0, 1] == pytest.approx(0.1 / 3)

    def test_zero_smoothing_is_one_hot(self):
        t = smooth_targets(np.array([1, 0]), 2, 0.0)
        assert np.array_equal(t, np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_log_softmax_rows_normalize(self, rng):
        s = rng.standard_normal((10, 4)) * 30
        lp = log_softmax(s)
        assert np.allclose(np.exp(lp).sum(axis=1), 1.0, atol=1e-12)

    def test_cross_entropy_matches_manual_formula(self, rng):
        s = rng.standard_normal((6, 3))
        t = smooth_targets(rng.integers(0, 3, 6), 3, 0.05)
        manual = -(t * log_softmax(s)).sum(axis=1).mean()
        assert cross_entropy(s, t) == pytest.approx(manual, abs=1e-12)

    def test_confident_correct_scores_give_near_zero_loss(self):
        s = np.array([[60.0, 0.0], [0.0, 60.0]])
        t = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert cross_entropy(s, t) == pytest.approx(0.0, abs=1e-12)

    def test_sample_weights_scale_each_term_of_the_mean(self, rng):
        # weighted samples scale their terms; the divisor stays the batch
        # size, matching the gradient convention
        s = rng.standard_normal((4, 2))
        t = smooth_targets(np.array([0, 0, 1, 1]), 2, 0.0)
        w = np.array([2.0, 2.0, 1.0, 1.0])
        per = -(t * log_softmax(s)).sum(axis=1)
        assert cross_entropy(s, t, w) == pytest.approx((w * per).mean(),
                                                       abs=1e-12)

    def test_nonfinite_scores_are_rejected(self):
        s = np.array([[np.inf, 0.0]])
        with np.errstate(invalid="ignore"):
            with pytest.raises(ValueError):
                cross_entropy(s, np.array([[1.0, 0.0]]))


class TestUsagePenalty:
    def test_coefficient_formula(self):
        usage = np.array([0.5, 0.1])
        got = usage_coefficients(usage, l2=1e-2, usage_boost=0.5,
                                 usage_floor=1e-3)
        want = 1e-2 * (1.0 + 0.5 / (usage + 1e-3))
        assert np.allclose(got, want, atol=1e-15)

    def test_zero_boost_is_flat_ridge(self):
        got = usage_coefficients(np.array([0.9, 0.01]), 1e-3, 0.0, 1e-3)
        assert np.allclose(got, 1e-3, atol=1e-18)

    def test_idle_planes_pay_more(self):
        coeffs = usage_coefficients(np.array([0.05, 0.95]), 1e-3, 0.5, 1e-3)
        assert coeffs[0] > coeffs[1]

    def test_tracker_starts_uniform_within_each_class(self):
        tracker = UsageTracker(np.array([0, 2, 5]))
        assert np.allclose(tracker.usage[:2], 0.5)
        assert np.allclose(tracker.usage[2:], 1.0 / 3.0)

    def test_tracker_blend_uses_momentum(self):
        tracker = UsageTracker(np.array([0, 2]), momentum=0.9)
        before = tracker.usage.copy()
        batch = np.array([0.8, 0.2])
        tracker.update(batch)
        assert np.allclose(tracker.usage, 0.9 * before + 0.1 * batch,
                           atol=1e-15)


class TestGradients:
    def test_matches_central_differences(self, rng):
        mdl, lifted, labels, tracker, config = toy_setup(
            rng, l2=1e-3, usage_boost=0.5, label_smoothing=0.02)
        g = gradients(lifted, labels, mdl, tracker, config)

        def loss_now():
            return total_loss(lifted, labels, mdl, tracker, config)

        num_w = numeric_grad(loss_now, mdl.weights)
        num_b = numeric_grad(loss_now, mdl.biases)
        assert np.allclose(g.weights, num_w, atol=1e-6)
        assert np.allclose(g.biases, num_b, atol=1e-6)

    def test_matches_central_differences_with_class_weights(self, rng):
        mdl, lifted, labels, tracker, config = toy_setup(
            rng, class_weights=(0.3, 1.7), l2=1e-3)
        g = gradients(lifted, labels, mdl, tracker, config)

        def loss_now():
            return total_loss(lifted, labels, mdl, tracker, config)

        assert np.allclose(g.weights, numeric_grad(loss_now, mdl.weights),
                           atol=1e-6)

    def test_single_plane_classes_give_softmax_regression_gradient(self, rng):
        mdl, lifted, labels, tracker, config = toy_setup(
            rng, class_planes=(1, 1, 1), l2=0.0, usage_boost=0.0,
            label_smoothing=0.0)
        g = gradients(lifted, labels, mdl, tracker, config)
        scores = lifted @ mdl.weights.T + mdl.biases
        probs = np.exp(log_softmax(scores))
        onehot = np.eye(3)[labels]
        closed_w = (probs - onehot).T @ lifted / len(labels)
        closed_b = (probs - onehot).mean(axis=0)
        assert np.allclose(g.weights, closed_w, atol=1e-12)
        assert np.allclose(g.biases, closed_b, atol=1e-12)

    def test_biases_are_never_penalized(self, rng):
        # crank the ridge: bias gradient must not move with it
        mdl, lifted, labels, tracker, config = toy_setup(rng, l2=0.0)
        g0 = gradients(lifted, labels, mdl, UsageTracker(mdl.offsets), config)
        heavy = TrainConfig(seed=0, l2=10.0)
        g1 = gradients(lifted, labels, mdl, UsageTracker(mdl.offsets), heavy)
        assert np.allclose(g0.biases, g1.biases, atol=1e-12)
        assert not np.allclose(g0.weights, g1.weights)


class TestClipAndSchedules:
    def test_norm_above_threshold_rescales_everything(self, rng):
        w = rng.standard_normal((3, 4))
        b = rng.standard_normal(3)
        joint = np.sqrt((w ** 2).sum() + (b ** 2).sum())
        clipped = clip_global_norm(Grads(w.copy(), b.copy()), joint / 2)
        ratio = clipped.weights / w
        assert np.allclose(ratio, 0.5, atol=1e-12)
        assert np.allclose(clipped.biases / b, 0.5, atol=1e-12)

    def test_norm_below_threshold_is_untouched(self, rng):
        w = 0.01 * rng.standard_normal((2, 2))
        b = 0.01 * rng.standard_normal(2)
        clipped = clip_global_norm(Grads(w.copy(), b.copy()), 5.0)
        assert np.array_equal(clipped.weights, w)
        assert np.array_equal(clipped.biases, b)

    def test_cosine_schedule_endpoints(self):
        assert lr_at("cosine", 0.01, 0, 100) == pytest.approx(0.01)
        assert lr_at("cosine", 0.01, 100, 100) == pytest.approx(0.0, abs=1e-12)
        assert lr_at("cosine", 0.01, 50, 100) == pytest.approx(0.005)

    def test_exponential_schedule_decays_by_097(self):
        assert lr_at("exponential", 0.01, 0, 100) == pytest.approx(0.01)
        assert lr_at("exponential", 0.01, 10, 100) == pytest.approx(
            0.01 * 0.97 ** 10)

    def test_constant_schedule(self):
        assert lr_at("constant", 0.01, 73, 100) == 0.01

    def test_unknown_schedule_rejected(self):
        with pytest.raises(ValueError):
            lr_at("polynomial", 0.01, 0, 100)

    def test_sharpness_ramps_over_the_first_half(self):
        config = TrainConfig(alpha_start=3.0, alpha_end=6.0)
        assert alpha_at(config, 0, 100) == pytest.approx(3.0)
        assert alpha_at(config, 25, 100) == pytest.approx(4.5)
        assert alpha_at(config, 50, 100) == pytest.approx(6.0)
        assert alpha_at(config, 99, 100) == pytest.approx(6.0)

    def test_flat_sharpness_when_start_equals_end(self):
        config = TrainConfig(alpha_start=6.0, alpha_end=6.0)
        for epoch in (0, 10, 99):
            assert alpha_at(config, epoch, 100) == 6.0


class TestAdam:
    def test_matches_reference_implementation(self, rng):
        w = rng.standard_normal((2, 3))
        b = rng.standard_normal(2)
        state = TrainState.fresh(w.copy(), b.copy())
        ref_w, ref_b = w.copy(), b.copy()
        m_w = np.zeros_like(w); v_w = np.zeros_like(w)
        m_b = np.zeros_like(b); v_b = np.zeros_like(b)
        for t in range(1, 4):
            gw = rng.standard_normal((2, 3))
            gb = rng.standard_normal(2)
            state = adam_step(state, Grads(gw, gb), lr=0.05)
            m_w = ADAM_B1 * m_w + (1 - ADAM_B1) * gw
            v_w = ADAM_B2 * v_w + (1 - ADAM_B2) * gw ** 2
            m_b = ADAM_B1 * m_b + (1 - ADAM_B1) * gb
            v_b = ADAM_B2 * v_b + (1 - ADAM_B2) * gb ** 2
            mhat_w = m_w / (1 - ADAM_B1 ** t)
            vhat_w = v_w / (1 - ADAM_B2 ** t)
            mhat_b = m_b / (1 - ADAM_B1 ** t)
            vhat_b = v_b / (1 - ADAM_B2 ** t)
            ref_w -= 0.05 * mhat_w / (np.sqrt(vhat_w) + ADAM_EPS)
            ref_b -= 0.05 * mhat_b / (np.sqrt(vhat_b) + ADAM_EPS)
        assert np.allclose(state.weights, ref_w, atol=1e-12)
        assert np.allclose(state.biases, ref_b, atol=1e-12)
        assert state.step == 3


class TestTrainingLoop:
    def separable(self, rng, n=60):
        half = n // 2
        feats = np.vstack([rng.normal((-2, 0), 0.3, (half, 2)),
                           rng.normal((2, 0), 0.3, (half, 2))])
        labels = np.repeat([0, 1], half)
        order = rng.permutation(n)
        return feats[order], labels[order]

    def test_loss_improves_and_best_snapshot_is_kept(self, rng):
        xtr, ytr = self.separable(rng)
        xva, yva = self.separable(rng)
        init = init_random(xtr, ytr, fixed_budget(2, 2), seed=0)
        config = TrainConfig(seed=0, max_epochs=40, batch_size=16)
        weights, biases, log = optimize_planes(
            xtr, ytr, xva, yva, init.weights, init.biases, init.offsets,
            config)
        assert log.epochs[-1].val_loss <= log.epochs[0].val_loss
        # snapshots advance only on improvements beyond the minimum, so the
        # kept loss may trail the true minimum by at most that margin
        floor = min(r.val_loss for r in log.epochs)
        assert floor <= log.best_val_loss <= floor + config.min_improvement
        assert np.isfinite(weights).all() and np.isfinite(biases).all()

    def test_early_stopping_fires_on_a_plateau(self, rng):
        xtr, ytr = self.separable(rng)
        init = init_random(xtr, ytr, fixed_budget(2, 1), seed=0)
        config = TrainConfig(seed=0, max_epochs=300, patience=5,
                             batch_size=32)
        _, _, log = optimize_planes(xtr, ytr, xtr, ytr, init.weights,
                                    init.biases, init.offsets, config)
        assert log.stopped_early
        assert len(log.epochs) < 300

    def test_divergence_is_flagged_and_parameters_stay_finite(self, rng):
        # pooled scores are overflow-proof, so true divergence needs the
        # parameters themselves to leave float range; a colossal step rate
        # sends the ridge term to infinity within a couple of epochs
        xtr, ytr = self.separable(rng)
        init = init_random(xtr, ytr, fixed_budget(2, 1), seed=0)
        config = TrainConfig(seed=0, max_epochs=10, learning_rate=1e155,
                             clip_norm=1e12, batch_size=32)
        with np.errstate(over="ignore"):
            weights, biases, log = optimize_planes(
                xtr, ytr, xtr, ytr, init.weights, init.biases, init.offsets,
                config)
        assert log.diverged
        assert np.isfinite(weights).all() and np.isfinite(biases).all()

    def test_fit_on_blobs_reaches_high_accuracy(self, tiny_blobs, rng):
        from planemix.model import predict

        pipe = identity_pipeline(2)
        budget = fixed_budget(3, 1)
        config = TrainConfig(seed=0, max_epochs=80, batch_size=16)
        mdl, log = fit(tiny_blobs, tiny_blobs, pipe, budget,
                       InitSpec(seed=0), config)
        acc = (predict(mdl, tiny_blobs.features) == tiny_blobs.labels).mean()
        assert acc >= 0.95
        assert mdl.alpha == config.alpha_end
        assert not log.diverged

    def test_binary_plane_fitter_separates_blobs(self, rng):
        x = np.vstack([rng.normal((-2, 0), 0.3, (40, 2)),
                       rng.normal((2, 0), 0.3, (40, 2))])
        y = np.repeat([0, 1], 40)
        w, b = fit_binary_plane(x, y, seed=0)
        pred = (x @ w + b > 0).astype(int)
        assert (pred == y).mean() > 0.95


class TestTrainLogExport:
    def test_csv_header_and_parsable_floats(self, tmp_path, rng):
        xtr, ytr = TestTrainingLoop().separable(rng)
        init = init_random(xtr, ytr, fixed_budget(2, 1), seed=0)
        config = TrainConfig(seed=0, max_epochs=5, batch_size=32)
        _, _, log = optimize_planes(xtr, ytr, xtr, ytr, init.weights,
                                    init.biases, init.offsets, config)
        path = tmp_path / "log.csv"
        log.to_csv(str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,alpha,lr"
        first = lines[1].split(",")
        assert int(first[0]) == 0
        for cell in first[1:]:
            float(cell)


def test_probe_config_is_short_and_flat_sharpness():
    probe = probe_train_config(seed=3)
    assert probe.alpha_start == probe.alpha_end
    assert probe.max_epochs < TrainConfig().max_epochs
    assert probe.seed == 3
