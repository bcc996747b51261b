# -*- coding: utf-8 -*-
import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from deepgauge.exceptions import DomainError
from deepgauge.geometry import (
    ScalingFactors, align_scaling_factors, bivariate_slice, decompose, face_touch_error, kappa, kappa_inverse,
    rescaled_gauge, sample_sphere, scaling_factors, validity_report,
)
from deepgauge.margins import DataMatrix


def ball(W):
    return np.ones(W.shape[0])


def cube(W):
    return 1.0 / np.abs(W).max(axis=1)


def with_axes(W):
    d = W.shape[1]
    return np.vstack([np.eye(d), -np.eye(d), W])


class TestDecompose(SimpleTestCase):

    def test_three_four_five(self):
        polar = decompose(np.array([[3.0, 4.0], [-1.0, 0.0]]))
        np.testing.assert_allclose(polar.radii, [5.0, 1.0])
        np.testing.assert_allclose(polar.angles, [[0.6, 0.8], [-1.0, 0.0]])

    def test_recompose(self):
        values = np.random.default_rng(0).laplace(size=(100, 4))
        polar = decompose(DataMatrix(values))
        np.testing.assert_allclose(polar.radii[:, None] * polar.angles, values, atol=1e-14)

    def test_zero_rows_are_dropped(self):
        with self.assertLogs("deepgauge.geometry", level="WARNING"):
            polar = decompose(np.array([[0.0, 0.0], [1.0, 1.0]]))
        self.assertEqual(polar.n, 1)
        self.assertEqual(polar.dropped, 1)


class TestSampleSphere(SimpleTestCase):

    def test_unit_norm(self):
        W = sample_sphere(10_000, 5, 0)
        self.assertEqual(W.shape, (10_000, 5))
        np.testing.assert_allclose(np.linalg.norm(W, axis=1), 1.0, atol=1e-12)

    def test_component_means(self):
        m = 20_000
        W = sample_sphere(m, 3, 1)
        self.assertTrue(np.all(np.abs(W.mean(axis=0)) < 3.0 / np.sqrt(m)))

    def test_uniform_circle(self):
        W = sample_sphere(50_000, 2, 2)
        angles = np.mod(np.arctan2(W[:, 1], W[:, 0]), 2 * np.pi)
        counts, _ = np.histogram(angles, bins=36, range=(0, 2 * np.pi))
        self.assertGreater(stats.chisquare(counts).pvalue, 0.01)

    def test_seeded(self):
        np.testing.assert_array_equal(sample_sphere(100, 3, 4), sample_sphere(100, 3, 4))

    def test_arguments(self):
        with self.assertRaises(DomainError):
            sample_sphere(0, 3, 0)
        with self.assertRaises(DomainError):
            sample_sphere(10, 1, 0)


class TestScalingFactors(SimpleTestCase):

    def setUp(self):
        self.W = sample_sphere(100_000, 3, 0)

    def test_ball(self):
        b = scaling_factors(ball, self.W)
        np.testing.assert_allclose(b.b_upper, 1.0, atol=1e-2)
        np.testing.assert_allclose(b.b_lower, -1.0, atol=1e-2)

    def test_cube_at_axes(self):
        b = scaling_factors(cube, with_axes(self.W))
        np.testing.assert_array_equal(b.b_upper, np.ones(3))
        np.testing.assert_array_equal(b.b_lower, -np.ones(3))

    def test_linear_in_h(self):
        b = scaling_factors(cube, self.W)
        tripled = scaling_factors(lambda W: 3.0 * cube(W), self.W)
        np.testing.assert_allclose(tripled.b_upper, 3.0 * b.b_upper)
        np.testing.assert_allclose(tripled.b_lower, 3.0 * b.b_lower)

    def test_non_positive_radius(self):
        with self.assertRaises(DomainError):
            scaling_factors(lambda W: -ball(W), self.W)

    def test_invalid_factors(self):
        with self.assertRaises(DomainError):
            ScalingFactors(np.array([1.0, 0.0]), np.array([-1.0, -1.0]))


class TestKappa(SimpleTestCase):

    def test_identity(self):
        b = ScalingFactors(np.ones(3), -np.ones(3))
        W = sample_sphere(100, 3, 0)
        np.testing.assert_allclose(kappa(W, b), W, atol=1e-15)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for d in range(2, 9):
            W = sample_sphere(10_000 // 7, d, d)
            b = ScalingFactors(rng.uniform(0.1, 5.0, d), -rng.uniform(0.1, 5.0, d))
            self.assertLess(np.max(np.abs(kappa_inverse(kappa(W, b), b) - W)), 1e-10)
            np.testing.assert_array_equal(np.sign(kappa(W, b)), np.sign(W))

    def test_zero_component_uses_upper_factor(self):
        b = ScalingFactors(np.array([2.0, 2.0]), np.array([-0.5, -0.5]))
        np.testing.assert_allclose(kappa(np.array([1.0, 0.0]), b), [1.0, 0.0])


class TestRescaledGauge(SimpleTestCase):

    def setUp(self):
        self.W = with_axes(sample_sphere(100_000, 3, 0))

    def test_cube_is_fixed(self):
        b = scaling_factors(cube, self.W)
        w = sample_sphere(1000, 3, 5)
        np.testing.assert_allclose(rescaled_gauge(cube, b, w), np.abs(w).max(axis=1), rtol=1e-12)

    def test_ball(self):
        b = scaling_factors(ball, self.W)
        np.testing.assert_allclose(rescaled_gauge(ball, b, sample_sphere(1000, 3, 6)), 1.0, atol=1e-2)

    def test_lower_bound_for_arbitrary_h(self):
        def wobbly(W):
            return 1.0 + 0.5 * np.sin(3 * W[:, 0]) * np.cos(2 * W[:, 1]) + 0.3 * W[:, 2] ** 2
        b = scaling_factors(wobbly, self.W)
        w = sample_sphere(100_000, 3, 7)
        self.assertTrue(np.all(rescaled_gauge(wobbly, b, w) >= np.abs(w).max(axis=1) - 1e-9))
        self.assertTrue(np.all(rescaled_gauge(wobbly, b, w, clamp=False) >= np.abs(w).max(axis=1) - 1e-9))

    def test_scalar_input(self):
        b = scaling_factors(ball, self.W)
        self.assertEqual(np.ndim(rescaled_gauge(ball, b, np.array([1.0, 0.0, 0.0]))), 0)

    def test_aligned_boundary_touches_every_face(self):
        def skewed(W):
            return np.exp(0.4 * W[:, 0] - 0.2 * W[:, 1])
        b = align_scaling_factors(skewed, self.W)
        report = validity_report(self.W / rescaled_gauge(skewed, b, self.W)[:, None])
        self.assertTrue(report["valid"])
        np.testing.assert_allclose(report["upper"], 1.0, atol=1e-6)
        np.testing.assert_allclose(report["lower"], -1.0, atol=1e-6)
        self.assertLess(face_touch_error(skewed, b, self.W)[0], 1e-6)

    def test_aligned_factors_keep_the_cube(self):
        b = align_scaling_factors(cube, self.W)
        np.testing.assert_array_equal(b.b_upper, np.ones(3))
        np.testing.assert_array_equal(b.b_lower, -np.ones(3))

    def test_stretched_factors_miss_the_faces(self):
        b = scaling_factors(cube, self.W).scaled(1.01)
        error, _ = face_touch_error(cube, b, self.W)
        self.assertAlmostEqual(error, 1.0 - 1.0 / 1.01, places=9)
        report = validity_report(self.W / rescaled_gauge(cube, b, self.W)[:, None])
        self.assertFalse(report["touches"])

    def test_report_flags_escape(self):
        report = validity_report(np.array([[1.2, 0.0], [-1.0, 1.0], [0.0, -1.0]]))
        self.assertFalse(report["contained"])
        self.assertFalse(report["valid"])


class TestBivariateSlice(SimpleTestCase):

    def test_cube_gives_square(self):
        points = bivariate_slice(lambda W: np.abs(W).max(axis=1), 0, 2, 360, 3)
        np.testing.assert_allclose(np.abs(points).max(axis=1), 1.0, atol=1e-12)

    def test_ball_gives_circle(self):
        points = bivariate_slice(ball, 0, 1, 100, 2)
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-12)

    def test_inside_square(self):
        points = bivariate_slice(lambda W: np.abs(W).sum(axis=1), 1, 2, 90, 4)
        self.assertTrue(np.all(np.abs(points) <= 1.0 + 1e-12))

    def test_arguments(self):
        with self.assertRaises(DomainError):
            bivariate_slice(ball, 1, 1, 10, 3)
        with self.assertRaises(DomainError):
            bivariate_slice(ball, 0, 3, 10, 3)
