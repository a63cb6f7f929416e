# mmopt/tests/test_transport.py

import math
import unittest

import numpy as np
import sympy as sp

from mmopt.core.closed_form import (
    bid_ask_1d,
    offcenter_prices,
    profit_1d,
    separate_menu_2d,
    symmetric_2d_menu,
)
from mmopt.core.distributions import ValuationDistribution
from mmopt.core.errors import InfeasibleMenuError, ValidationError
from mmopt.core.feasibility import random_feasible_menu
from mmopt.core.mechanism import Menu, MenuItem, UpdateModel
from mmopt.core.transport import (
    OFFCENTER_EQUATIONS,
    OFFCENTER_SURDS,
    OFFCENTER_SYMBOLS,
    ROOT2,
    CertificateKind,
    balance_residuals,
    bid_ask_cdfs,
    bid_ask_certificate_1d,
    c_lambda,
    cdf_cost_1d,
    duality_gap,
    offcenter_jacobian,
    offcenter_residuals,
    solve_ab,
    solve_offcenter,
    transport_cost_2d,
)

SQRT2 = math.sqrt(2.0)


class TestOneGoodCertificate(unittest.TestCase):
    """CDF-area cost of the one-good transport plan."""

    def test_identical_cdfs_cost_nothing(self):
        cdf = lambda x: min(max(x, 0.0), 1.0)
        self.assertEqual(cdf_cost_1d(cdf, cdf), 0.0)

    def test_moving_a_unit_mass_across_the_interval(self):
        at_zero = lambda x: 1.0 if x >= 0.0 else 0.0
        at_one = lambda x: 1.0 if x >= 1.0 else 0.0
        self.assertAlmostEqual(cdf_cost_1d(at_zero, at_one), 1.0, places=12)

    def test_unequal_masses_rejected(self):
        with self.assertRaises(ValidationError):
            cdf_cost_1d(lambda x: x, lambda x: 2.0 * x)

    def test_cost_equals_bid_ask_profit(self):
        for c in (0.3, 0.5, 0.7):
            for lam in (0.25, 0.5, 1.0):
                with self.subTest(c=c, lam=lam):
                    gamma1, gamma2, kinks = bid_ask_cdfs(c, lam)
                    cost = cdf_cost_1d(gamma1, gamma2, kinks)
                    self.assertAlmostEqual(cost, profit_1d(c, lam), delta=1e-8)

    def test_certificate_regions(self):
        cert = bid_ask_certificate_1d(0.5, 1.0)
        self.assertIs(cert.kind, CertificateKind.ONE_D)
        regions = dict(cert.regions)
        self.assertAlmostEqual(regions["spread"], 0.0, places=12)
        self.assertAlmostEqual(cert.total, 0.125, places=9)
        self.assertAlmostEqual(cert.params["bid"], 0.25, places=12)
        self.assertAlmostEqual(cert.params["ask"], 0.75, places=12)


class TestSymmetricCertificate(unittest.TestCase):
    """Rectangle and pentagon plan for two goods at the center belief."""

    def test_partition_parameters(self):
        sol = solve_ab(1.0)
        self.assertAlmostEqual(sol.a, (1 + SQRT2) / 6, places=14)
        self.assertAlmostEqual(sol.b, 1 / 6, places=14)
        half = solve_ab(0.5)
        self.assertAlmostEqual(half.a, (1 + SQRT2) / 8, places=14)
        self.assertAlmostEqual(half.b, 1 / 8, places=14)
        self.assertTrue(solve_ab(0.0).degenerate)

    def test_balance_and_geometry(self):
        for lam in np.linspace(0.05, 1.0, 20):
            with self.subTest(lam=lam):
                sol = solve_ab(lam)
                self.assertLess(max(abs(r) for r in balance_residuals(sol.a, sol.b, lam)), 1e-12)
                self.assertGreaterEqual(sol.a, sol.b)
                self.assertGreaterEqual(1 - 2 * sol.a, 0.0)

    def test_cost_values(self):
        self.assertAlmostEqual(transport_cost_2d(1.0).total, (6 + SQRT2) / 27, delta=1e-12)
        self.assertAlmostEqual(transport_cost_2d(1.0).total, 0.274601, delta=1e-6)
        self.assertAlmostEqual(transport_cost_2d(0.5).total, 0.0928564, delta=1e-7)
        self.assertEqual(transport_cost_2d(0.0).total, 0.0)

    def test_cost_matches_closed_form_and_grows(self):
        previous = -1.0
        for lam in np.linspace(0.0, 1.0, 101):
            cert = transport_cost_2d(lam)
            with self.subTest(lam=lam):
                self.assertAlmostEqual(cert.total, c_lambda(lam), delta=1e-12)
                self.assertGreaterEqual(cert.total, previous)
                self.assertEqual(len(cert.regions), 8)
            previous = cert.total

    def test_lambda_range_checked(self):
        with self.assertRaises(ValidationError):
            transport_cost_2d(1.2)


class TestOffCenterSystem(unittest.TestCase):
    """The six-equation geometry for the belief (1/3, 1/3)."""

    def test_newton_root_matches_surds(self):
        sol = solve_offcenter()
        self.assertLess(sol.residual, 1e-12)
        for name, exact in OFFCENTER_SURDS.items():
            with self.subTest(name=name):
                self.assertAlmostEqual(getattr(sol, name), float(exact), delta=1e-10)
        self.assertLess(sol.e, sol.f)
        self.assertGreater(1 - sol.a - sol.f, 0.0)
        self.assertAlmostEqual(sol.p, 0.4373643, delta=1e-6)

    def test_surds_solve_the_system_exactly(self):
        at_root = dict(zip(OFFCENTER_SYMBOLS, (OFFCENTER_SURDS[k] for k in "abdefp")))
        for row, equation in enumerate(OFFCENTER_EQUATIONS):
            with self.subTest(row=row):
                self.assertLess(abs(sp.N(equation.subs(at_root), 60)), 1e-45)

    def test_leading_surds_are_closed_forms(self):
        self.assertEqual(OFFCENTER_SURDS["b"], sp.Rational(1, 9))
        self.assertEqual(sp.simplify(OFFCENTER_SURDS["a"] - (1 + ROOT2) / 9), 0)

    def test_numeric_residuals_and_jacobian(self):
        point = [float(OFFCENTER_SURDS[k]) for k in "abdefp"]
        self.assertLess(float(np.max(np.abs(offcenter_residuals(point)))), 1e-14)
        jac = offcenter_jacobian(point)
        self.assertEqual(jac.shape, (6, 6))
        step = 1e-7
        for col in range(6):
            shifted = list(point)
            shifted[col] += step
            diff = (offcenter_residuals(shifted) - offcenter_residuals(point)) / step
            with self.subTest(col=col):
                np.testing.assert_allclose(jac[:, col], diff, atol=1e-6)

    def test_derived_prices(self):
        prices = offcenter_prices()
        self.assertAlmostEqual(prices[(-1, 0)], -1 / 9, places=12)
        self.assertAlmostEqual(prices[(-1, 0)], -0.111, delta=1e-3)
        self.assertAlmostEqual(prices[(-1, -1)], -(2 + SQRT2) / 9, places=10)
        self.assertAlmostEqual(prices[(-1, -1)], -0.3794, delta=1e-4)
        self.assertEqual(prices[(1, -1)], prices[(-1, 1)])
        self.assertAlmostEqual(prices[(1, 1)], 1.231273, delta=1e-6)


class TestWeakDuality(unittest.TestCase):
    """Monte Carlo profit never exceeds the transport cost."""

    def test_optimal_menu_is_certified(self):
        report = duality_gap(
            symmetric_2d_menu(1), transport_cost_2d(1.0), ValuationDistribution.uniform(2),
            UpdateModel.centered(2, 1.0), 200_000, seed=3,
        )
        self.assertTrue(report.certified)
        self.assertTrue(report.weak_duality_holds)

    def test_one_good_menu_is_certified(self):
        report = duality_gap(
            bid_ask_1d(0.3, 0.5), bid_ask_certificate_1d(0.3, 0.5),
            ValuationDistribution.uniform(1), UpdateModel(c=(0.3,), lam=0.5), 200_000, seed=4,
        )
        self.assertTrue(report.certified)

    def test_no_trade_menu_leaves_the_full_gap(self):
        report = duality_gap(
            Menu.no_trade_only(2), transport_cost_2d(1.0), ValuationDistribution.uniform(2),
            UpdateModel.centered(2, 1.0), 10_000,
        )
        self.assertAlmostEqual(report.gap, (6 + SQRT2) / 27, places=12)
        self.assertTrue(report.weak_duality_holds)
        self.assertFalse(report.certified)

    def test_separate_pricing_gap(self):
        report = duality_gap(
            separate_menu_2d((0.5, 0.5), 1), 0.274601, ValuationDistribution.uniform(2),
            UpdateModel.centered(2, 1.0), 200_000, seed=5,
        )
        self.assertLess(abs(report.gap - 0.024601), 5 * report.stderr + 1e-6)

    def test_random_feasible_menus(self):
        dist = ValuationDistribution.uniform(2)
        for index in range(50):
            lam = (0.3, 0.7, 1.0)[index % 3]
            upd = UpdateModel.centered(2, lam)
            menu = random_feasible_menu(upd, 8, seed=17, index=index)
            with self.subTest(lam=lam, menu=index):
                report = duality_gap(menu, c_lambda(lam), dist, upd, 20_000, seed=index)
                self.assertTrue(report.weak_duality_holds)

    def test_infeasible_menu_rejected(self):
        menu = Menu.from_items([MenuItem((0.0, 0.0), 0.0), MenuItem((1.0, 0.0), 0.3)])
        with self.assertRaises(InfeasibleMenuError):
            duality_gap(menu, 0.3, ValuationDistribution.uniform(2), UpdateModel.centered(2, 1.0), 1000)


if __name__ == "__main__":
    unittest.main()
