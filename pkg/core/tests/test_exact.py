import math

import numpy as np
from django.test import SimpleTestCase
from scipy.special import comb

from services.bodies import Ball, BodyError, Box, Point, Product, Scaled, Translated
from services.exact import (
    IVSequence,
    ball_sequence,
    beta_integral,
    box_sequence,
    box_valuation_check,
    distance_integral,
    embed_sequence,
    kappa,
    monotonicity_check,
    omega,
    point_sequence,
    product_sequence,
    scale_sequence,
    sequence_of,
    steiner_polynomial,
)


class ClosedFormTests(SimpleTestCase):
    def test_unit_constants(self):
        self.assertAlmostEqual(kappa(0), 1.0)
        self.assertAlmostEqual(kappa(1), 2.0)
        self.assertAlmostEqual(kappa(2), math.pi)
        self.assertAlmostEqual(kappa(3), 4.0 * math.pi / 3.0)
        self.assertAlmostEqual(omega(2), 2.0 * math.pi)
        self.assertAlmostEqual(omega(3), 4.0 * math.pi)

    def test_ball_sequences(self):
        np.testing.assert_allclose(ball_sequence(1, 1.0).values, (1, 2), rtol=1e-12)
        np.testing.assert_allclose(ball_sequence(2, 1.0).values, (1, math.pi, math.pi), rtol=1e-12)
        np.testing.assert_allclose(ball_sequence(2, 2.0).values, (1, 2 * math.pi, 4 * math.pi), rtol=1e-12)

    def test_large_ball_stays_finite(self):
        a = ball_sequence(60, 3.0)
        self.assertTrue(np.all(np.isfinite(a.array)))
        self.assertAlmostEqual(a[60] / (kappa(60) * 3.0 ** 60), 1.0, places=9)

    def test_box_sequences(self):
        self.assertEqual(box_sequence([1, 2, 3]).values, (1.0, 6.0, 11.0, 6.0))
        self.assertEqual(box_sequence([2.5]).values, (1.0, 2.5))
        np.testing.assert_allclose(box_sequence([1.0] * 6).values, comb(6, np.arange(7)))

    def test_degenerate_axis_zeroes_top_volumes(self):
        a = box_sequence([1, 0, 3])
        self.assertEqual(a[3], 0.0)
        self.assertEqual(a.values[:3], (1.0, 4.0, 3.0))

    def test_negative_length_rejected(self):
        with self.assertRaises(BodyError):
            box_sequence([1, -1])


class CombinatorTests(SimpleTestCase):
    def test_product_is_convolution(self):
        s, t = 0.5, 4.0
        np.testing.assert_allclose(product_sequence(IVSequence((1, s)), IVSequence((1, t))).values, (1, s + t, s * t))

    def test_cylinder(self):
        cylinder = product_sequence(IVSequence((1, 2)), ball_sequence(2, 1.0))
        np.testing.assert_allclose(cylinder.values, (1, 2 + math.pi, 3 * math.pi, 2 * math.pi), rtol=1e-12)

    def test_point_sequence_is_identity(self):
        a = box_sequence([1, 2])
        self.assertEqual(product_sequence(a, IVSequence((1.0,))).values, a.values)

    def test_scaling(self):
        np.testing.assert_allclose(
            scale_sequence(box_sequence([1.0] * 4), 3.0).values,
            [comb(4, j) * 3.0 ** j for j in range(5)],
        )
        a = box_sequence([1, 2, 3])
        self.assertEqual(scale_sequence(a, 1.0).values, a.values)
        self.assertEqual(scale_sequence(a, 0.0).values, (1.0, 0.0, 0.0, 0.0))

    def test_embedding(self):
        self.assertEqual(embed_sequence(IVSequence((1, 2)), 1).values, (1.0, 2.0, 0.0))
        self.assertEqual(embed_sequence(IVSequence((1, 2)), 0).values, (1.0, 2.0))
        self.assertEqual(point_sequence(3).values, (1.0, 0.0, 0.0, 0.0))

    def test_sequence_of_composite_bodies(self):
        self.assertEqual(sequence_of(Product(Box((1, 2, 3)), Point(2))).values, (1, 6, 11, 6, 0, 0))
        np.testing.assert_allclose(sequence_of(Scaled(2, Ball(2, 1))).values, (1, 2 * math.pi, 4 * math.pi))
        self.assertEqual(sequence_of(Translated((5, 5), Box((1, 1)))).values, (1.0, 2.0, 1.0))

    def test_v0_is_one(self):
        for body in (Point(4), Ball(5, 0.3), Box((0, 0)), Product(Ball(2, 2), Box((7,)))):
            self.assertAlmostEqual(sequence_of(body)[0], 1.0, places=12)


class AlgebraTests(SimpleTestCase):
    SEQUENCES = (
        box_sequence([1, 2, 3]),
        ball_sequence(2, 1.5),
        point_sequence(1),
        box_sequence([0.25, 4.0]),
    )

    def test_product_is_commutative(self):
        for a in self.SEQUENCES:
            for b in self.SEQUENCES:
                np.testing.assert_allclose(
                    product_sequence(a, b).values, product_sequence(b, a).values, rtol=1e-12, atol=0
                )

    def test_product_is_associative(self):
        a, b, c = self.SEQUENCES[:3]
        left = product_sequence(product_sequence(a, b), c)
        right = product_sequence(a, product_sequence(b, c))
        np.testing.assert_allclose(left.values, right.values, rtol=1e-12, atol=0)
        np.testing.assert_allclose(left.log_values(), right.log_values(), rtol=1e-12, atol=1e-12)

    def test_scaling_composes(self):
        for a in self.SEQUENCES:
            for lam, mu in ((2.0, 0.5), (3.0, 7.0), (0.1, 0.2)):
                np.testing.assert_allclose(
                    scale_sequence(a, lam * mu).values,
                    scale_sequence(scale_sequence(a, lam), mu).values,
                    rtol=1e-12,
                    atol=0,
                )

    def test_box_top_volume_is_product_of_lengths(self):
        rng = np.random.default_rng(7)
        for n in range(1, 8):
            lengths = rng.uniform(0.1, 5.0, size=n)
            a = box_sequence(lengths)
            self.assertAlmostEqual(a[n] / np.prod(lengths), 1.0, places=12)
            self.assertAlmostEqual(a[1] / np.sum(lengths), 1.0, places=12)

    def test_logs_agree_with_values(self):
        for a in self.SEQUENCES:
            positive = a.array > 0
            np.testing.assert_allclose(a.log_values()[positive], np.log(a.array[positive]), rtol=1e-12, atol=1e-12)
            self.assertTrue(np.all(a.log_values()[~positive] == -np.inf))

    def test_huge_box_is_recovered_from_logs(self):
        a = box_sequence([1e200] * 3)
        self.assertTrue(a.overflows)
        self.assertEqual(a[3], math.inf)
        self.assertAlmostEqual(a.log_values()[3] / (600 * math.log(10)), 1.0, places=13)
        small = scale_sequence(a, 1e-200)
        np.testing.assert_allclose(small.values, (1, 3, 3, 1), rtol=1e-9)


class IntegralIdentityTests(SimpleTestCase):
    def test_steiner_polynomial(self):
        self.assertAlmostEqual(steiner_polynomial(sequence_of(Point(2)), 1.0), math.pi)
        self.assertAlmostEqual(steiner_polynomial(box_sequence([1, 1]), 1.0), 5.0 + math.pi)
        self.assertAlmostEqual(steiner_polynomial(ball_sequence(2, 1.0), 1.0), 4.0 * math.pi)

    def test_distance_integral_recovers_wills(self):
        a = box_sequence([1, 2, 3])
        value = distance_integral(a, lambda r: math.exp(-math.pi * r * r))
        self.assertAlmostEqual(value, 24.0, places=7)

    def test_distance_integral_matches_beta_integral(self):
        a = ball_sequence(3, 0.7)
        value = distance_integral(a, lambda r: (1.0 + 2.0 * r) ** -4)
        self.assertAlmostEqual(value / beta_integral(a, 2.0), 1.0, places=7)

    def test_beta_integral(self):
        self.assertAlmostEqual(beta_integral(box_sequence([1, 1]), 1.0), math.pi + 3.0)
        self.assertAlmostEqual(beta_integral(point_sequence(4), 1.0), kappa(4))
        with self.assertRaises(BodyError):
            beta_integral(box_sequence([1]), 0.0)


class ValuationTests(SimpleTestCase):
    def test_overlapping_boxes(self):
        checks = box_valuation_check(Box((1, 2, 3)), Translated((0, 1, 0), Box((1, 2, 3))))
        self.assertEqual(len(checks), 4)
        self.assertTrue(all(check.passed for check in checks))

    def test_boxes_differing_on_two_axes_rejected(self):
        with self.assertRaises(BodyError):
            box_valuation_check(Box((2, 2)), Translated((1, 1), Box((2, 2))))

    def test_monotonicity(self):
        self.assertTrue(all(c.passed for c in monotonicity_check(Box((1, 1, 1)), Box((1, 2, 3)))))
        self.assertTrue(all(c.passed for c in monotonicity_check(Box((1, 1, 1)), Ball(3, math.sqrt(3)))))
        self.assertFalse(all(c.passed for c in monotonicity_check(Box((1, 2, 3)), Box((1, 1, 1)))))
