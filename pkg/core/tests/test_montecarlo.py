import math

import numpy as np
from django.test import SimpleTestCase

from services.bodies import Ball, Box, Embedded, Point, Product, Scaled, Translated
from services.bounds import h_moments_from_sequence
from services.exact import box_sequence, kappa, sequence_of
from services.montecarlo import (
    EstimatorCapabilityError,
    EstimatorInputError,
    MCEstimate,
    RngStream,
    beta_integral_check,
    chunk_plan,
    compare,
    gf_estimate,
    gf_reference,
    h_moment_estimates,
    haar_rotation,
    haar_rotations,
    kubota_estimate,
    mu_sample_statistics,
    mu_sampler_product,
    steiner_check,
    wills_estimate,
)

SAMPLES = 100_000
MAX_SE = 4.0


class MonteCarloTestCase(SimpleTestCase):
    def assertWithinSE(self, estimate, exact, k=MAX_SE):
        self.assertLessEqual(
            estimate.se_distance(exact), k,
            f"{estimate.estimator_id}: {estimate.value} ± {estimate.std_error} vs {exact}",
        )


class PlumbingTests(MonteCarloTestCase):
    def test_streams_are_deterministic_and_distinct(self):
        a = RngStream(11, 0).generator(3).random(5)
        b = RngStream(11, 0).generator(3).random(5)
        c = RngStream(11, 1).generator(3).random(5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_invalid_seed(self):
        with self.assertRaises(EstimatorInputError):
            RngStream(-1)

    def test_chunk_plan(self):
        self.assertEqual(chunk_plan(25, 10), [10, 10, 5])
        self.assertEqual(chunk_plan(20, 10), [10, 10])
        with self.assertRaises(EstimatorInputError):
            chunk_plan(0, 10)

    def test_result_is_independent_of_thread_count(self):
        body = Box((1.0, 2.0, 3.0))
        single = wills_estimate(body, 20_000, RngStream(5), chunk_size=3_000, threads=1)
        pooled = wills_estimate(body, 20_000, RngStream(5), chunk_size=3_000, threads=4)
        self.assertEqual(single, pooled)
        kubota_single = kubota_estimate(body, 2, 20_000, RngStream(5), chunk_size=3_000, threads=1)
        kubota_pooled = kubota_estimate(body, 2, 20_000, RngStream(5), chunk_size=3_000, threads=3)
        self.assertEqual(kubota_single.value, kubota_pooled.value)

    def test_compare_thresholds(self):
        estimate = MCEstimate(10.0, 1.0, 100, 0, "demo")
        self.assertTrue(compare(estimate, 12.0).passed)
        self.assertTrue(compare(estimate, 13.5).passed)
        self.assertFalse(compare(estimate, 14.5).passed)
        exact = MCEstimate(1.0, 0.0, 100, 0, "exact")
        self.assertEqual(exact.se_distance(1.0 + 1e-12), 0.0)
        self.assertEqual(exact.se_distance(1.1), math.inf)


class HaarTests(MonteCarloTestCase):
    def test_one_dimensional_rotation(self):
        np.testing.assert_array_equal(haar_rotation(1, RngStream(0)), np.ones((1, 1)))

    def test_orthogonal_with_unit_determinant(self):
        rotations = haar_rotations(4, 200, RngStream(1).generator())
        identity = np.broadcast_to(np.eye(4), rotations.shape)
        np.testing.assert_allclose(np.transpose(rotations, (0, 2, 1)) @ rotations, identity, atol=1e-10)
        np.testing.assert_allclose(np.linalg.det(rotations), 1.0, atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(rotations, axis=1), 1.0, atol=1e-10)

    def test_rotated_vector_is_uniform_on_sphere(self):
        columns = haar_rotations(3, SAMPLES, RngStream(2).generator())[:, :, 0]
        means = columns.mean(axis=0)
        errors = columns.std(axis=0, ddof=1) / math.sqrt(SAMPLES)
        self.assertTrue(np.all(np.abs(means) <= MAX_SE * errors))
        # E[x_i^2] = 1/3 sur la sphère S^2.
        np.testing.assert_allclose((columns ** 2).mean(axis=0), 1.0 / 3.0, atol=0.01)


class KubotaTests(MonteCarloTestCase):
    def test_ball_is_exact(self):
        estimate = kubota_estimate(Ball(3, 1.0), 2, SAMPLES, RngStream(0))
        self.assertAlmostEqual(estimate.value, 2 * math.pi, places=12)
        self.assertEqual(estimate.std_error, 0.0)

    def test_unit_cube(self):
        self.assertWithinSE(kubota_estimate(Box((1, 1, 1)), 1, SAMPLES, RngStream(3)), 3.0)

    def test_box(self):
        box = Box((1, 2, 3))
        self.assertWithinSE(kubota_estimate(box, 1, SAMPLES, RngStream(4)), 6.0)
        self.assertWithinSE(kubota_estimate(box, 2, SAMPLES, RngStream(4, 1)), 11.0)

    def test_top_index_is_volume(self):
        estimate = kubota_estimate(Box((1, 2, 3)), 3, 1_000, RngStream(0))
        self.assertAlmostEqual(estimate.value, 6.0, places=9)

    def test_scaled_and_translated_boxes(self):
        body = Translated((1.0, -1.0), Scaled(2.0, Box((1, 1))))
        self.assertWithinSE(kubota_estimate(body, 1, SAMPLES, RngStream(6)), 4.0)
        self.assertEqual(kubota_estimate(body, 0, 10, RngStream(6)).value, 1.0)

    def test_pre_rotation_leaves_estimate_unchanged(self):
        rotation = haar_rotation(3, RngStream(99))
        estimate = kubota_estimate(Box((1, 2, 3)), 1, SAMPLES, RngStream(7), pre_rotation=rotation)
        self.assertWithinSE(estimate, 6.0)

    def test_errors(self):
        with self.assertRaises(EstimatorCapabilityError):
            kubota_estimate(Product(Box((1,)), Ball(2, 1)), 1, 10, RngStream(0))
        with self.assertRaises(EstimatorInputError):
            kubota_estimate(Box((1, 1)), 3, 10, RngStream(0))
        with self.assertRaises(EstimatorCapabilityError):
            kubota_estimate(Box([1.0] * 5), 2, 10, RngStream(0), max_dim=4)

    def test_sample_count_is_validated_before_exact_shortcuts(self):
        for body, j in ((Ball(3, 1.0), 2), (Box((1, 2)), 0)):
            with self.assertRaises(EstimatorInputError):
                kubota_estimate(body, j, 0, RngStream(0))
            with self.assertRaises(EstimatorInputError):
                kubota_estimate(body, j, 10, RngStream(0), chunk_size=0)


class DistanceIntegralTests(MonteCarloTestCase):
    def test_point_wills_has_zero_variance(self):
        estimate = wills_estimate(Point(3), SAMPLES, RngStream(0))
        self.assertAlmostEqual(estimate.value, 1.0, places=12)
        self.assertLess(estimate.std_error, 1e-12)

    def test_wills(self):
        self.assertWithinSE(wills_estimate(Box((1, 1)), SAMPLES, RngStream(7)), 4.0)
        self.assertWithinSE(wills_estimate(Box((1, 2, 3)), SAMPLES, RngStream(8)), 24.0)
        self.assertWithinSE(wills_estimate(Ball(2, 1.0), SAMPLES, RngStream(9)), 1 + 2 * math.pi)

    def test_generating_function(self):
        estimate = gf_estimate(Box((1, 1)), 2.0, SAMPLES, RngStream(10))
        self.assertAlmostEqual(gf_reference(Box((1, 1)), 2.0), 9.0 / 4.0)
        self.assertWithinSE(estimate, 9.0 / 4.0)
        point = gf_estimate(Point(2), 2.0, SAMPLES, RngStream(10))
        self.assertAlmostEqual(point.value, 0.25, places=12)

    def test_generating_function_at_one_is_wills(self):
        body = Box((1, 2))
        gf = gf_estimate(body, 1.0, 5_000, RngStream(12))
        wills = wills_estimate(body, 5_000, RngStream(12))
        self.assertEqual(gf.value, wills.value)

    def test_information_moments(self):
        eh, _ = h_moment_estimates(Point(2), SAMPLES, RngStream(13))
        self.assertWithinSE(eh, 1.0)
        for body, stream in ((Box((1, 2, 3)), 14), (Box((1, 1)), 15), (Ball(3, 0.5), 16)):
            eh, eh2 = h_moment_estimates(body, SAMPLES, RngStream(stream))
            stats = h_moments_from_sequence(sequence_of(body))
            self.assertWithinSE(eh, stats.eh)
            self.assertWithinSE(eh2, stats.eh2)
        self.assertAlmostEqual(h_moments_from_sequence(box_sequence([1, 2, 3])).eh, 13.0 / 24.0)

    def test_beta_integral(self):
        estimate, exact = beta_integral_check(Point(2), 1.0, SAMPLES, RngStream(17))
        self.assertAlmostEqual(exact, kappa(2))
        self.assertWithinSE(estimate, exact)
        estimate, exact = beta_integral_check(Box((1, 1)), 1.0, SAMPLES, RngStream(18))
        self.assertAlmostEqual(exact, math.pi + 3.0)
        self.assertWithinSE(estimate, exact)
        estimate, exact = beta_integral_check(Ball(2, 1.0), 2.0, SAMPLES, RngStream(19))
        self.assertWithinSE(estimate, exact)

    def test_invalid_lambda(self):
        with self.assertRaises(EstimatorInputError):
            gf_estimate(Box((1,)), 0.0, 10, RngStream(0))
        with self.assertRaises(EstimatorInputError):
            steiner_check(Box((1,)), -1.0, 10, RngStream(0))


class SteinerTests(MonteCarloTestCase):
    def test_point(self):
        estimate, polynomial = steiner_check(Point(2), 1.0, SAMPLES, RngStream(20))
        self.assertAlmostEqual(polynomial, math.pi)
        self.assertWithinSE(estimate, math.pi)

    def test_square(self):
        for lam, stream in ((0.5, 21), (1.0, 22)):
            estimate, polynomial = steiner_check(Box((1, 1)), lam, SAMPLES, RngStream(stream))
            self.assertAlmostEqual(polynomial, 1 + 4 * lam + math.pi * lam ** 2)
            self.assertWithinSE(estimate, polynomial)

    def test_disk(self):
        estimate, polynomial = steiner_check(Ball(2, 1.0), 1.0, SAMPLES, RngStream(23))
        self.assertAlmostEqual(polynomial, 4 * math.pi)
        self.assertWithinSE(estimate, polynomial)


class MuSamplerTests(MonteCarloTestCase):
    def test_degenerate_axis_is_centered_normal(self):
        points = mu_sampler_product(Point(1), RngStream(30), size=SAMPLES)[:, 0]
        target = 1.0 / (2.0 * math.pi)
        self.assertAlmostEqual(points.mean(), 0.0, delta=MAX_SE * math.sqrt(target / SAMPLES))
        self.assertAlmostEqual(points.var(), target, delta=MAX_SE * target * math.sqrt(2.0 / SAMPLES))

    def test_single_draw_shape(self):
        self.assertEqual(mu_sampler_product(Box((1, 2)), RngStream(31)).shape, (2,))

    def test_box_statistics(self):
        stats = mu_sample_statistics(Box((1, 2, 3)), SAMPLES, RngStream(32))
        for estimate, expected in zip(stats.inside, stats.inside_expected):
            self.assertWithinSE(estimate, expected)
        self.assertEqual(stats.inside_expected, (0.5, 2.0 / 3.0, 0.75))
        self.assertWithinSE(stats.information, 13.0 / 24.0)

    def test_composite_product_bodies(self):
        body = Embedded(Product(Translated((2.0,), Box((1,))), Scaled(2.0, Ball(1, 0.5))), 1)
        stats = mu_sample_statistics(body, SAMPLES, RngStream(33))
        eh = h_moments_from_sequence(sequence_of(body)).eh
        self.assertWithinSE(stats.information, eh)

    def test_unsupported_body(self):
        with self.assertRaises(EstimatorCapabilityError):
            mu_sampler_product(Ball(2, 1.0), RngStream(0))
