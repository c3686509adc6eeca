import numpy as np
import pytest

from infoflow import nn
from infoflow.classifier_mi import (
    ClassifierMIEstimator,
    MineConfig,
    PairDataset,
    clip_ratio,
    estimate_mi,
    fit_classifier_mi,
    ratio_estimate,
    resample_product,
    split_train_eval,
    train_classifier,
)
from infoflow.exceptions import ConfigurationError
from infoflow.synthetic import gen_gaussian_pair


def constant_classifier(n_inputs, logit=0.0):
    weights = (np.zeros((n_inputs, 1)),)
    biases = (np.array([logit]),)
    return nn.DenseNetParams((n_inputs, 1), weights, biases)


class TestResampleProduct:
    def test_single_pair_maps_to_itself(self):
        joint = PairDataset(np.array([[1.0]]), np.array([[2.0]]), label=1)
        prod = resample_product(joint, rng_seed=0)
        assert prod.u.tolist() == [[1.0]] and prod.v.tolist() == [[2.0]]
        assert prod.label == 0

    def test_reproducible_draw(self):
        joint = PairDataset(np.arange(50.0), np.arange(50.0, 100.0), label=1)
        a = resample_product(joint, rng_seed=3)
        b = resample_product(joint, rng_seed=3)
        assert np.array_equal(a.source_indices, b.source_indices)

    def test_fixed_point_fraction_near_one_over_t(self):
        T = 10_000
        joint = PairDataset(np.zeros(T), np.arange(float(T)), label=1)
        prod = resample_product(joint, rng_seed=9)
        matches = int(np.sum(prod.source_indices == np.arange(T)))
        # expected count is T * (1/T) = 1; a Poisson(1) rarely exceeds 6
        assert matches <= 6

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            resample_product(PairDataset(np.zeros((2, 1)), np.zeros((2, 1)), 1).take([]), 0)


class TestSplit:
    def test_75_25(self):
        ds = PairDataset(np.arange(100.0), np.arange(100.0), label=1)
        train, evl = split_train_eval(ds, 0.75, rng_seed=0)
        assert len(train) == 75 and len(evl) == 25

    def test_degenerate_fraction_rejected(self):
        ds = PairDataset(np.arange(2.0), np.arange(2.0), label=1)
        with pytest.raises(ConfigurationError):
            split_train_eval(ds, 0.99, rng_seed=0)

    def test_same_seed_same_partition(self):
        ds = PairDataset(np.arange(40.0), np.arange(40.0), label=1)
        a_train, _ = split_train_eval(ds, 0.6, rng_seed=7)
        b_train, _ = split_train_eval(ds, 0.6, rng_seed=7)
        assert np.array_equal(a_train.u, b_train.u)

    def test_disjoint_cover(self):
        ds = PairDataset(np.arange(33.0), np.arange(33.0), label=1)
        train, evl = split_train_eval(ds, 0.5, rng_seed=1)
        merged = sorted(np.concatenate([train.u[:, 0], evl.u[:, 0]]).tolist())
        assert merged == list(range(33))


class TestClipRatio:
    def test_zero_tau_collapses_to_one(self):
        assert clip_ratio(5.0, 0.0) == pytest.approx(1.0)

    def test_upper_clip(self):
        assert clip_ratio(10.0, 0.9) == pytest.approx(np.exp(0.9))
        assert np.exp(0.9) == pytest.approx(2.4596, abs=1e-4)

    def test_inside_band_untouched(self):
        assert clip_ratio(1.0, 0.9) == pytest.approx(1.0)

    def test_vectorized_bounds_and_monotonicity(self):
        r = np.exp(np.random.default_rng(0).uniform(-4, 4, size=200))
        clipped = clip_ratio(r, 0.7)
        assert np.all(clipped >= np.exp(-0.7) - 1e-15)
        assert np.all(clipped <= np.exp(0.7) + 1e-15)
        order = np.argsort(r)
        assert np.all(np.diff(clipped[order]) >= -1e-15)

    def test_negative_tau_rejected(self):
        with pytest.raises(ConfigurationError):
            clip_ratio(1.0, -0.1)


class TestRatioEstimate:
    def test_neutral_probability_gives_unit_ratio(self):
        clf = constant_classifier(2, logit=0.0)
        assert ratio_estimate(clf, np.array([3.0]), np.array([4.0])) == pytest.approx(1.0)

    def test_probability_point_eight_gives_four(self):
        clf = constant_classifier(2, logit=np.log(4.0))
        assert ratio_estimate(clf, np.array([0.0]), np.array([0.0])) == pytest.approx(4.0)

    def test_strictly_positive_under_extreme_logits(self):
        clf = constant_classifier(2, logit=-1e4)
        r = ratio_estimate(clf, np.array([0.0]), np.array([0.0]))
        assert r > 0 and np.isfinite(r)


class TestEstimateMi:
    def test_constant_classifier_gives_exact_zero(self):
        rng = np.random.default_rng(0)
        joint = PairDataset(rng.normal(size=50), rng.normal(size=50), label=1)
        prod = resample_product(joint, rng_seed=1)
        est = estimate_mi(joint, prod, constant_classifier(2), tau=0.9)
        assert est.value_nats == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        joint = PairDataset(rng.normal(size=64), rng.normal(size=64), label=1)
        prod = resample_product(joint, rng_seed=2)
        clf = nn.init_network([2, 8, 1], rng_seed=3)
        base = estimate_mi(joint, prod, clf, tau=0.9).value_nats
        perm = rng.permutation(64)
        shuffled = estimate_mi(joint.take(perm), prod.take(perm), clf, tau=0.9).value_nats
        assert shuffled == pytest.approx(base, abs=1e-12)

    def test_empty_eval_rejected(self):
        joint = PairDataset(np.zeros((3, 1)), np.zeros((3, 1)), label=1)
        with pytest.raises(ValueError):
            estimate_mi(joint.take([]), joint, constant_classifier(2), 0.9)


class TestTrainClassifier:
    def test_indistinguishable_classes_predict_half(self):
        # joint set is itself product-distributed, so held-out p ~ 0.5
        rng = np.random.default_rng(4)
        T = 10_000
        u, v = rng.normal(size=(T, 1)), rng.normal(size=(T, 1))
        cfg = MineConfig(epochs=30)
        fit = fit_classifier_mi(u, v, cfg, rng_seed=5)
        joint_eval = np.hstack([u[fit.eval_indices], v[fit.eval_indices]])
        p = nn.sigmoid(nn.forward(fit.classifier, joint_eval)[:, 0])
        assert abs(p.mean() - 0.5) < 0.05

    def test_separable_classes_high_accuracy(self):
        rng = np.random.default_rng(6)
        n = 2000
        joint = PairDataset(rng.normal(1.0, 0.25, n), rng.normal(1.0, 0.25, n), label=1)
        prod = PairDataset(rng.normal(-1.0, 0.25, n), rng.normal(-1.0, 0.25, n), label=0)
        cfg = MineConfig(hidden_widths=(16,), epochs=40)
        clf, losses = train_classifier(joint, prod, cfg, rng_seed=7)
        fresh_j = np.hstack([rng.normal(1.0, 0.25, (500, 1)), rng.normal(1.0, 0.25, (500, 1))])
        fresh_p = np.hstack([rng.normal(-1.0, 0.25, (500, 1)), rng.normal(-1.0, 0.25, (500, 1))])
        pj = nn.sigmoid(nn.forward(clf, fresh_j)[:, 0])
        pp = nn.sigmoid(nn.forward(clf, fresh_p)[:, 0])
        accuracy = 0.5 * (np.mean(pj > 0.5) + np.mean(pp < 0.5))
        assert accuracy > 0.95
        assert losses[-1] <= losses[0]

    def test_deterministic_training(self):
        rng = np.random.default_rng(8)
        u, v = rng.normal(size=(400, 1)), rng.normal(size=(400, 1))
        cfg = MineConfig(hidden_widths=(8,), epochs=5)
        a = fit_classifier_mi(u, v, cfg, rng_seed=11)
        b = fit_classifier_mi(u, v, cfg, rng_seed=11)
        for wa, wb in zip(a.classifier.weights, b.classifier.weights):
            assert np.array_equal(wa, wb)
        assert a.estimate.value_nats == b.estimate.value_nats

    def test_empty_side_rejected(self):
        ds = PairDataset(np.zeros((3, 1)), np.zeros((3, 1)), label=1)
        with pytest.raises(ValueError):
            train_classifier(ds.take([]), ds, MineConfig(), 0)


class TestMiAccuracy:
    def test_independent_pairs_near_zero(self):
        rng = np.random.default_rng(12)
        T = 10_000
        fit = fit_classifier_mi(
            rng.normal(size=(T, 1)), rng.normal(size=(T, 1)), MineConfig(epochs=40), rng_seed=13
        )
        assert abs(fit.estimate.value_nats) < 0.05

    def test_correlated_gaussian_tracks_closed_form(self):
        pairs = gen_gaussian_pair(0.9, 20_000, seed=14)
        fit = fit_classifier_mi(pairs.u, pairs.v, MineConfig(epochs=60), rng_seed=15)
        true_mi = -0.5 * np.log(1 - 0.81)
        assert fit.estimate.value_nats == pytest.approx(true_mi, abs=0.1)

    def test_ratio_tracks_analytic_ratio_on_grid(self):
        rho = 0.8
        pairs = gen_gaussian_pair(rho, 20_000, seed=42)
        fit = fit_classifier_mi(pairs.u, pairs.v, MineConfig(epochs=80), rng_seed=42)
        g = np.linspace(-1.0, 1.0, 9)
        uu, vv = np.meshgrid(g, g)
        u, v = uu.ravel()[:, None], vv.ravel()[:, None]
        s2 = 1 - rho * rho
        log_r_true = (
            -0.5 * np.log(s2)
            - (rho * rho * (u**2 + v**2) - 2 * rho * u * v).ravel() / (2 * s2)
        )
        log_r_hat = np.log(ratio_estimate(fit.classifier, u, v))
        assert np.mean(np.abs(log_r_hat - log_r_true)) < 0.2
        assert np.corrcoef(log_r_hat, log_r_true)[0, 1] > 0.98


class TestSklearnApi:
    def test_fit_exposes_estimate(self):
        pairs = gen_gaussian_pair(0.6, 3000, seed=16)
        est = ClassifierMIEstimator(hidden_widths=(16,), epochs=20, random_state=17)
        assert est.fit(pairs.u, pairs.v) is est
        assert np.isfinite(est.mi_)
        assert est.n_train_ == 2250 and est.n_eval_ == 750
        r = est.ratio(pairs.u[:5], pairs.v[:5])
        assert r.shape == (5,) and np.all(r > 0)

    def test_get_params_round_trip(self):
        est = ClassifierMIEstimator(clip_tau=1.2, epochs=3)
        params = est.get_params()
        assert params["clip_tau"] == 1.2
        clone = ClassifierMIEstimator(**params)
        assert clone.get_params() == params

    def test_ratio_before_fit_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            ClassifierMIEstimator().ratio(np.zeros((2, 1)), np.zeros((2, 1)))

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigurationError):
            MineConfig(train_fraction=1.0)
        with pytest.raises(ConfigurationError):
            MineConfig(clip_tau=-1.0)
