# mmopt/tests/test_quadrature.py

import unittest

import numpy as np

from mmopt.core.errors import ValidationError
from mmopt.core.quadrature import gauss_legendre_01, tensor_rule


class TestGaussLegendre(unittest.TestCase):
    """Composite rules on [0, 1] and tensor products."""

    def test_weights_sum_to_one(self):
        for order, panels in ((1, 1), (8, 3), (64, 16)):
            with self.subTest(order=order, panels=panels):
                nodes, weights = gauss_legendre_01(order, panels)
                self.assertEqual(nodes.shape, (order * panels,))
                self.assertAlmostEqual(float(weights.sum()), 1.0, places=13)
                self.assertTrue(np.all((nodes > 0.0) & (nodes < 1.0)))

    def test_polynomials_are_exact(self):
        nodes, weights = gauss_legendre_01(5, 2)
        for k in range(10):
            with self.subTest(power=k):
                self.assertAlmostEqual(float(weights @ nodes**k), 1.0 / (k + 1), places=13)

    def test_tensor_rule(self):
        pts, wts = tensor_rule(2, 6, 2)
        self.assertEqual(pts.shape, (144, 2))
        self.assertAlmostEqual(float(wts @ (pts[:, 0] ** 2 * pts[:, 1])), 1.0 / 6.0, places=13)

    def test_zero_dimensional_rule_is_one_point(self):
        pts, wts = tensor_rule(0, 64, 16)
        self.assertEqual(pts.shape, (1, 0))
        self.assertEqual(float(wts.sum()), 1.0)

    def test_rules_are_read_only(self):
        nodes, _ = gauss_legendre_01(4, 1)
        with self.assertRaises(ValueError):
            nodes[0] = 0.0

    def test_bad_order(self):
        with self.assertRaises(ValidationError):
            gauss_legendre_01(0, 1)


if __name__ == "__main__":
    unittest.main()
