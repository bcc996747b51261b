# -*- coding: utf-8 -*-
import itertools
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, tag

from deepgauge.copulas import (
    CopulaKind, CopulaSpec, nested_correlation, probability_targets, region_probability, sample, theoretical_gauge,
)
from deepgauge.diagnostics import ise, male, validity_summary
from deepgauge.exceptions import DomainError, TwoStageError
from deepgauge.gauge import (
    GaugeModel, QuantileFit, evaluate, fit, fit_gauge, fit_threshold, initial_gauge_target, pretrain_gauge,
    reference_angles, sup_norm,
)
from deepgauge.geometry import PolarSample, align_scaling_factors, decompose, face_touch_error, sample_sphere
from deepgauge.inference import estimate_adf_many, tail_probability
from deepgauge.neuralnet import MlpParams, TrainConfig, forward, init_params, train_validation_split
from deepgauge.study import StudyGrid

QUICK = TrainConfig(epochs=40, batch_size=256, patience=5, learning_rate=5e-3, refresh_size=2000)


def angle_free_sample(n, seed, d=3):
    rng = np.random.default_rng(seed)
    return PolarSample(rng.exponential(1.0, n) + 1.0, sample_sphere(n, d, seed + 1))


def constant_quantile_fit(value, n, d=3, tau=0.75, seed=0):
    params = init_params(d, (4,), np.random.default_rng(seed), output_bias=np.log(value), output_scale=0.0)
    return QuantileFit(params, tau, train_validation_split(n, 0.2, seed), None, 1.0 - tau)


class TestThresholdStage(SimpleTestCase):

    def test_angle_free_radii(self):
        polar = angle_free_sample(4000, 0)
        quantile_fit = fit_threshold(polar, 0.75, (8, 8), QUICK)
        unconditional = np.quantile(polar.radii, 0.75)
        fitted = quantile_fit.threshold(polar.angles)
        self.assertAlmostEqual(float(np.median(fitted)), unconditional, delta=0.1)
        self.assertAlmostEqual(quantile_fit.exceedance_fraction, 0.25, delta=0.02)

    def test_positive_surface(self):
        polar = angle_free_sample(1000, 1)
        quantile_fit = fit_threshold(polar, 0.5, (4,), QUICK)
        self.assertTrue(np.all(quantile_fit.threshold(sample_sphere(1000, 3, 2)) > 0))

    def test_quantile_levels_are_ordered(self):
        polar = decompose(sample(CopulaSpec(CopulaKind.GAUSSIAN, 2, corr=nested_correlation(2, 0)), 4000, 3))
        low = fit_threshold(polar, 0.5, (8, 8), QUICK)
        high = fit_threshold(polar, 0.9, (8, 8), QUICK)
        W = sample_sphere(2000, 2, 4)
        self.assertGreaterEqual(np.mean(high.threshold(W) >= low.threshold(W)), 0.95)

    def test_bad_arguments(self):
        polar = angle_free_sample(200, 2)
        with self.assertRaises(DomainError):
            fit_threshold(polar, 1.0, (4,), QUICK)
        flat = PolarSample(np.ones(200), polar.angles)
        with self.assertRaises(DomainError):
            fit_threshold(flat, 0.5, (4,), QUICK)


class TestInitialTarget(SimpleTestCase):

    def setUp(self):
        self.W = sample_sphere(20_000, 3, 0)

    def test_constant_surface_gives_unit_ball(self):
        target = initial_gauge_target(constant_quantile_fit(3.0, 100), self.W)
        np.testing.assert_allclose(target(sample_sphere(500, 3, 1)), 1.0, atol=2e-2)

    def test_scale_invariant(self):
        rng = np.random.default_rng(0)
        params = init_params(3, (6,), rng, output_bias=0.5)
        doubled = MlpParams(params.weights, params.biases[:-1] + (params.biases[-1] + np.log(2.0),))
        split = train_validation_split(100, 0.2, 0)
        one = initial_gauge_target(QuantileFit(params, 0.75, split, None, 0.25), self.W)
        two = initial_gauge_target(QuantileFit(doubled, 0.75, split, None, 0.25), self.W)
        w = sample_sphere(500, 3, 2)
        np.testing.assert_allclose(one(w), two(w), rtol=1e-10)

    def test_lower_bound(self):
        params = init_params(3, (6,), np.random.default_rng(1), output_bias=0.5)
        target = initial_gauge_target(QuantileFit(params, 0.75, train_validation_split(100, 0.2, 0), None, 0.25), self.W)
        w = sample_sphere(5000, 3, 3)
        self.assertTrue(np.all(target(w) >= sup_norm(w) - 1e-12))


class TestPretrain(SimpleTestCase):

    def test_sup_norm_target(self):
        angles = sample_sphere(2000, 3, 0)
        split = train_validation_split(2000, 0.2, 0)
        init = init_params(3, (8, 8), np.random.default_rng(0))
        params, alpha, _ = pretrain_gauge(init, sup_norm, angles, QUICK, split)
        residual = np.maximum(forward(params, angles), 0.0)
        self.assertLess(float(np.mean(np.square(residual))), 1e-2)
        self.assertEqual(alpha, 3.0)

    def test_reduces_loss(self):
        angles = sample_sphere(2000, 3, 1)
        target = 1.0 + 0.3 * angles[:, 0] ** 2
        split = train_validation_split(2000, 0.2, 0)
        init = init_params(3, (8, 8), np.random.default_rng(1))
        before = np.mean(np.square(np.maximum(forward(init, angles), 0.0) + sup_norm(angles) - target))
        params, _, _ = pretrain_gauge(init, target, angles, QUICK, split)
        after = np.mean(np.square(np.maximum(forward(params, angles), 0.0) + sup_norm(angles) - target))
        self.assertLess(after, before)


class TestGaugeStage(SimpleTestCase):

    def test_needs_quantile_stage(self):
        with self.assertRaises(TwoStageError):
            fit_gauge(angle_free_sample(100, 0), None, (4,), QUICK, 1000, 0)

    def test_split_must_match_sample(self):
        quantile_fit = constant_quantile_fit(1.5, 1000)
        with self.assertRaises(TwoStageError):
            fit_gauge(angle_free_sample(100, 0), quantile_fit, (4,), QUICK, 1000, 0)

    def test_counts_exceedances(self):
        polar = angle_free_sample(2000, 3)
        quantile_fit = constant_quantile_fit(1.5, polar.n)
        model, logs, exceedances = fit_gauge(polar, quantile_fit, (4,), QUICK, 20_000, 0)
        self.assertEqual(exceedances, int(np.sum(polar.radii > 1.5)))
        self.assertEqual([training_log.stage for training_log in logs], ["pretrain", "gauge"])
        np.testing.assert_allclose(model.threshold(polar.angles[:10]), 1.5)


class TestGaugeModel(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        polar = decompose(sample(CopulaSpec(CopulaKind.GAUSSIAN, 3, corr=nested_correlation(3, 0)), 5000, 0))
        cls.result = fit(polar, 0.75, (8, 8), (8, 8), QUICK, reference_size=20_000, reference_seed=0)
        cls.model = cls.result.model

    def test_result(self):
        self.assertEqual(self.model.d, 3)
        self.assertEqual([training_log.stage for training_log in self.result.logs], ["threshold", "pretrain", "gauge"])
        self.assertGreater(self.result.exceedances, 0)
        low, high = 0.1, 30.0
        self.assertTrue(low <= self.model.alpha <= high)

    def test_lower_bound(self):
        w = sample_sphere(100_000, 3, 11)
        self.assertTrue(np.all(self.model.gauge(w) >= sup_norm(w) - 1e-9))

    def test_inside_cube(self):
        w = sample_sphere(10_000, 3, 12)
        points = w / self.model.gauge(w)[:, None]
        self.assertTrue(np.all(np.abs(points) <= 1.0 + 1e-12))

    def test_boundary_touches_faces(self):
        points = self.model.boundary_points()
        np.testing.assert_allclose(points.max(axis=0), 1.0, atol=1e-3)
        np.testing.assert_allclose(points.min(axis=0), -1.0, atol=1e-3)

    def test_continuity(self):
        w = sample_sphere(200, 3, 13)
        nearby = w + 1e-7 * np.random.default_rng(0).standard_normal(w.shape)
        nearby /= np.linalg.norm(nearby, axis=1, keepdims=True)
        self.assertLess(np.max(np.abs(self.model.gauge(w) - self.model.gauge(nearby))), 1e-3)

    def test_evaluate(self):
        w = np.array([0.0, 0.6, 0.8])
        first, second = evaluate(self.model, w), evaluate(self.model, w)
        np.testing.assert_array_equal(first.point, second.point)
        self.assertEqual(first.gauge, second.gauge)
        self.assertGreater(first.threshold, 0)
        np.testing.assert_allclose(first.point, w / first.gauge)

    def test_serialisation(self):
        again = GaugeModel.from_dict(self.model.to_dict())
        w = sample_sphere(1000, 3, 14)
        np.testing.assert_array_equal(again.gauge(w), self.model.gauge(w))
        np.testing.assert_array_equal(again.threshold(w), self.model.threshold(w))

    def test_reference_angles_are_shared(self):
        self.assertIs(self.model.reference_angles, reference_angles(20_000, 3, 0))
        self.assertFalse(self.model.reference_angles.flags.writeable)

    def test_scaling_is_aligned_to_reference_set(self):
        W = self.model.reference_angles
        b = align_scaling_factors(self.model.radial, W)
        np.testing.assert_allclose(b.b_upper, self.model.scaling.b_upper)
        self.assertLess(face_touch_error(self.model.radial, self.model.scaling, W)[0], 1e-3)

    def test_validity_summary(self):
        report = validity_summary(self.model, check_size=20_000, seed=16)
        self.assertTrue(report["touches"])
        self.assertTrue(report["contained"])
        V = sample_sphere(20_000, 3, 16)
        gap = self.model.unclamped_gauge(V) - sup_norm(V)
        self.assertEqual(report["bound_violations"], int(np.sum(gap < -1e-9)))
        self.assertAlmostEqual(report["min_bound_gap"], float(gap.min()))

    def test_simulated_radii(self):
        angles = sample_sphere(20_000, 3, 15)
        radii = self.model.sample_radii(angles, np.random.default_rng(0))
        below = np.mean(radii <= self.model.threshold(angles))
        self.assertAlmostEqual(below, self.model.tau, delta=0.02)

    def test_reproducible(self):
        polar = decompose(sample(CopulaSpec(CopulaKind.GAUSSIAN, 3, corr=nested_correlation(3, 0)), 5000, 0))
        again = fit(polar, 0.75, (8, 8), (8, 8), QUICK, reference_size=20_000, reference_seed=0).model
        self.assertEqual(again.to_dict(), self.model.to_dict())


@tag("slow")
class TestDeskScaleFit(SimpleTestCase):
    """Gaussian d=3 fits with the default architectures, five seeds per sample size."""
    SEEDS = (1, 2, 3, 4, 5)
    SIZES = (10_000, 100_000)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.spec = CopulaSpec(CopulaKind.GAUSSIAN, 3, corr=nested_correlation(8, 0, 3))
        cls.fits = {}
        for n in cls.SIZES:
            for seed in cls.SEEDS:
                data = sample(cls.spec, n, seed)
                model = fit(decompose(data), 0.75, (32, 32, 32), (64, 64, 64), TrainConfig(seed=seed),
                            reference_size=1_000_000).model
                cls.fits[n, seed] = data, model

    def median_ise(self, n):
        values = [ise(lambda V: theoretical_gauge(self.spec, V), model, model.reference_angles)
                  for _, model in (self.fits[n, seed] for seed in self.SEEDS)]
        return float(np.median(values))

    def test_median_ise(self):
        self.assertLess(self.median_ise(100_000), 0.5)

    def test_ise_falls_with_sample_size(self):
        self.assertGreater(self.median_ise(10_000), self.median_ise(100_000))

    def test_joint_tail_probabilities(self):
        targets = [corner for _, corner in probability_targets(CopulaKind.GAUSSIAN, 3)[:4]]
        truths = [region_probability(self.spec, corner) for corner in targets]
        scores = []
        for seed in self.SEEDS:
            data, model = self.fits[100_000, seed]
            estimates = [tail_probability(corner, data, model, fallback="empirical").probability for corner in targets]
            scores.append(male(truths, estimates))
        self.assertLess(float(np.median(scores)), 2.0)


@tag("slow")
class TestValidityAcrossFits(SimpleTestCase):
    """Twenty small fits cycling through the three copulas in d = 2, 3 and 5."""
    CASES = list(itertools.islice(
        itertools.cycle(itertools.product(("gaussian", "student_t", "logistic"), (2, 3, 5))), 20))

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        grid = StudyGrid()
        cls.models = []
        for index, (kind, d) in enumerate(cls.CASES):
            polar = decompose(sample(grid.spec(kind, d), 5000, index))
            config = replace(QUICK, seed=index)
            cls.models.append(fit(polar, 0.75, (16, 16), (16, 16), config, reference_size=200_000).model)

    def test_lower_bound(self):
        for index, model in enumerate(self.models):
            W = sample_sphere(100_000, model.d, 100 + index)
            with self.subTest(case=self.CASES[index]):
                self.assertTrue(np.all(model.gauge(W) >= sup_norm(W) - 1e-9))

    def test_boundary_touches_every_face(self):
        for index, model in enumerate(self.models):
            report = validity_summary(model, check_size=10_000, seed=index)
            with self.subTest(case=self.CASES[index]):
                self.assertTrue(report["contained"])
                self.assertTrue(report["touches"], report["upper"])
                self.assertLessEqual(np.max(np.abs(report["upper"] - 1.0)), 1e-3)
                self.assertLessEqual(np.max(np.abs(report["lower"] + 1.0)), 1e-3)

    def test_adf_sandwich(self):
        for index, model in enumerate(self.models):
            W = sample_sphere(10_000, model.d, 200 + index)
            estimates = estimate_adf_many(model, model.reference_angles[:10_000], W)
            lambda_hat = np.array([estimate.lambda_hat for estimate in estimates])
            with self.subTest(case=self.CASES[index]):
                self.assertTrue(np.all(lambda_hat >= sup_norm(W) - 1e-12))
                self.assertTrue(np.all(lambda_hat <= model.gauge(W) + 1e-9))
