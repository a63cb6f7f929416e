# mmopt/tests/test_measure.py

import math
import unittest

import numpy as np

from mmopt.core.closed_form import bid_ask_1d, profit_1d, symmetric_2d_menu
from mmopt.core.distributions import ValuationDistribution
from mmopt.core.errors import InfeasibleMenuError, ValidationError
from mmopt.core.feasibility import random_feasible_menu
from mmopt.core.measure import build_measure, integrate_u, linearization_residual
from mmopt.core.mechanism import Menu, MenuItem, UpdateModel


class TestComponentMasses(unittest.TestCase):
    """Masses of the interior, each face and the point mass."""

    def test_uniform_square_centered(self):
        m = build_measure(ValuationDistribution.uniform(2), UpdateModel.centered(2, 1.0))
        masses = m.component_masses()
        self.assertAlmostEqual(masses["interior"], -3.0, places=10)
        for face in ("x1=0", "x1=1", "x2=0", "x2=1"):
            self.assertAlmostEqual(masses[face], 0.5, places=10)
        self.assertEqual(masses["point"], 1.0)
        self.assertAlmostEqual(m.total_mass(), 0.0, places=10)

    def test_uniform_square_off_center(self):
        m = build_measure(ValuationDistribution.uniform(2), UpdateModel(c=(1 / 3, 1 / 3), lam=1.0))
        masses = m.component_masses()
        self.assertAlmostEqual(masses["x1=1"], 2 / 3, places=10)
        self.assertAlmostEqual(masses["x1=0"], 1 / 3, places=10)

    def test_uniform_interval(self):
        m = build_measure(ValuationDistribution.uniform(1), UpdateModel(c=(0.5,), lam=1 / 3))
        masses = m.component_masses()
        self.assertAlmostEqual(masses["interior"], -4 / 3, places=10)
        self.assertAlmostEqual(masses["x1=0"], 1 / 6, places=10)
        self.assertAlmostEqual(masses["x1=1"], 1 / 6, places=10)
        self.assertEqual(masses["point"], 1.0)

    def test_total_mass_is_zero(self):
        rng = np.random.default_rng(21)
        families = [
            ("uniform", 1e-8, lambda d: ValuationDistribution.uniform(d)),
            ("beta 2,2", 1e-5, lambda d: ValuationDistribution.beta(d, 2.0, 2.0)),
            ("beta 2,1", 1e-5, lambda d: ValuationDistribution.beta(d, 2.0, 1.0)),
            ("beta 1,2", 1e-5, lambda d: ValuationDistribution.beta(d, 1.0, 2.0)),
            ("truncnorm", 1e-5, lambda d: ValuationDistribution.truncnorm(d, 0.5, 0.125)),
        ]
        # ten random (c, lambda) configurations per family, 50 in all
        for name, tol, make in families:
            for trial in range(10):
                dim = 1 + trial % 3
                c = tuple(rng.random(dim))
                lam = float(rng.random())
                with self.subTest(dist=name, dim=dim, trial=trial):
                    m = build_measure(make(dim), UpdateModel(c=c, lam=lam))
                    self.assertLess(abs(m.total_mass()), tol)

    def test_face_masses_scale_with_lambda(self):
        dist = ValuationDistribution.uniform(2)
        for lam in (0.1, 0.25, 0.5):
            with self.subTest(lam=lam):
                low = build_measure(dist, UpdateModel.centered(2, lam)).component_masses()
                high = build_measure(dist, UpdateModel.centered(2, 2 * lam)).component_masses()
                self.assertAlmostEqual(high["x1=1"], 2 * low["x1=1"], places=10)

    def test_unbounded_beta_rejected(self):
        with self.assertRaises(ValidationError):
            build_measure(ValuationDistribution.beta(2, 0.5, 2.0), UpdateModel.centered(2, 1.0))

    def test_dimension_mismatch_rejected(self):
        with self.assertRaises(ValidationError):
            build_measure(ValuationDistribution.uniform(2), UpdateModel.centered(3, 1.0))


class TestIntegrateUtility(unittest.TestCase):
    """Integrals of utilities against the signed measure."""

    def test_zero_function(self):
        m = build_measure(ValuationDistribution.uniform(2), UpdateModel.centered(2, 0.7))
        self.assertEqual(integrate_u(m, lambda x: np.zeros(len(x))).value, 0.0)

    def test_kink_at_center_integrates_to_zero(self):
        m = build_measure(ValuationDistribution.uniform(2), UpdateModel.centered(2, 1.0))
        est = integrate_u(m, lambda x: np.abs(x[:, 0] - 0.5))
        self.assertLess(abs(est.value), 1e-10)
        self.assertEqual(est.stderr, 0.0)

    def test_noise_trading_menu_matches_closed_form(self):
        m = build_measure(ValuationDistribution.uniform(2), UpdateModel.centered(2, 1.0))
        est = integrate_u(m, symmetric_2d_menu(1))
        self.assertAlmostEqual(est.value, (6 + math.sqrt(2)) / 27, delta=1e-4)

    def test_bid_ask_matches_closed_form(self):
        for c, lam in ((0.5, 1.0), (0.3, 0.5), (0.8, 0.25)):
            with self.subTest(c=c, lam=lam):
                m = build_measure(ValuationDistribution.uniform(1), UpdateModel(c=(c,), lam=lam))
                est = integrate_u(m, bid_ask_1d(c, lam))
                self.assertAlmostEqual(est.value, profit_1d(c, lam), delta=1e-5)

    def test_three_goods_use_sampling(self):
        upd = UpdateModel.centered(3, 0.8)
        m = build_measure(ValuationDistribution.uniform(3), upd)
        menu = random_feasible_menu(upd, 5, seed=4)
        first = integrate_u(m, menu, n=100_000, seed=2)
        second = integrate_u(m, menu, n=100_000, seed=2)
        self.assertGreater(first.stderr, 0.0)
        self.assertEqual(first, second)

    def test_menu_dimension_checked(self):
        m = build_measure(ValuationDistribution.uniform(2), UpdateModel.centered(2, 1.0))
        with self.assertRaises(ValidationError):
            integrate_u(m, Menu.no_trade_only(1))


class TestLinearizationResidual(unittest.TestCase):
    """Expected profit equals the integral of u for feasible menus."""

    def test_no_trade_menu(self):
        est = linearization_residual(
            Menu.no_trade_only(2), ValuationDistribution.uniform(2), UpdateModel.centered(2, 0.5), 10_000
        )
        self.assertEqual(est.value, 0.0)

    def test_symmetric_menu(self):
        est = linearization_residual(
            symmetric_2d_menu(0.5), ValuationDistribution.uniform(2), UpdateModel.centered(2, 0.5), 200_000
        )
        self.assertLess(est.value, 5 * est.stderr + 1e-4)

    def test_random_menus_across_families(self):
        families = [
            ValuationDistribution.uniform(2),
            ValuationDistribution.beta(2, 2.0, 2.0),
            ValuationDistribution.beta(2, 2.0, 1.0),
            ValuationDistribution.beta(2, 1.0, 2.0),
            ValuationDistribution.truncnorm(2, 0.5, 0.125),
        ]
        upd = UpdateModel(c=(0.4, 0.55), lam=0.7)
        for dist in families:
            for index in range(20):
                menu = random_feasible_menu(upd, 5, seed=11, index=index)
                with self.subTest(dist=str(dist), menu=index):
                    est = linearization_residual(menu, dist, upd, 50_000, seed=index)
                    self.assertLess(est.value, 5 * est.stderr + 1e-4)

    def test_three_goods(self):
        upd = UpdateModel(c=(0.5, 0.3, 0.6), lam=0.6)
        menu = random_feasible_menu(upd, 6, seed=5)
        est = linearization_residual(menu, ValuationDistribution.uniform(3), upd, 100_000, seed=1)
        self.assertLess(est.value, 5 * est.stderr)

    def test_positive_utility_at_belief_rejected(self):
        menu = Menu.from_items([MenuItem((0.0, 0.0), 0.0), MenuItem((1.0, 0.0), 0.3)])
        with self.assertRaises(InfeasibleMenuError):
            linearization_residual(
                menu, ValuationDistribution.uniform(2), UpdateModel.centered(2, 1.0), 1000
            )


if __name__ == "__main__":
    unittest.main()
