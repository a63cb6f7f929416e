# mmopt/core/transport.py
"""
Dual certificates for menu optimality.

Expected profit of any feasible menu is bounded above by the cost of
transporting the positive part of the signed measure onto its negative part
under the l1 ground metric (weak duality).  A menu whose profit equals the
cost of some transport plan is optimal.  This module prices the known plans:

* one good: the point mass at c is spread uniformly over the bid-ask
  spread, and the cost is the area between the two CDFs;
* two goods, centered belief: a partition of the square into four
  rectangles and four pentagons, parametrized by ``(a, b)``;
* two goods, belief (1/3, 1/3): the geometry solves a six-equation system,
  held symbolically so that its exact root can be checked against Newton.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy import integrate

from .errors import InfeasibleMenuError, NumericalError, ValidationError
from .feasibility import check_feasibility
from .mechanism import Menu, UpdateModel, expected_profit_mc
from .newton import damped_newton

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
ROOT2 = sp.sqrt(2)

CDF_TOL = 1e-10
MASS_TOL = 1e-9
BALANCE_TOL = 1e-12
SURD_TOL = 1e-10

Cdf = Callable[[float], float]


class CertificateKind(enum.Enum):
    ONE_D = "one-d"
    SYMMETRIC_2D = "symmetric-2d"


@dataclass(frozen=True)
class TransportCertificate:
    """Solved geometry plus the cost of each region of the transport plan."""

    kind: CertificateKind
    params: Dict[str, float]
    regions: Tuple[Tuple[str, float], ...]

    @property
    def total(self) -> float:
        return float(sum(cost for _, cost in self.regions))


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0):
        raise ValidationError(f"lambda={lam} must lie in [0,1]")
    return lam


# ---------------------------------------------------------------------------
# One good
# ---------------------------------------------------------------------------


def cdf_cost_1d(cdf1: Cdf, cdf2: Cdf, breakpoints: Iterable[float] = ()) -> float:
    """
    ``int_0^1 |C1 - C2| dx`` for two right-continuous CDFs of measures on [0, 1].

    ``breakpoints`` are the kinks and jumps of either CDF; the integral is
    split there.  The two measures must have equal total mass.
    """
    m1, m2 = float(cdf1(1.0)), float(cdf2(1.0))
    if abs(m1 - m2) > MASS_TOL:
        raise ValidationError(f"CDF masses differ: {m1:.12g} vs {m2:.12g}")
    cuts = sorted({0.0, 1.0, *(float(b) for b in breakpoints if 0.0 < b < 1.0)})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        piece, _ = integrate.quad(
            lambda x: abs(cdf1(x) - cdf2(x)), lo, hi, epsabs=CDF_TOL, epsrel=0.0, limit=200
        )
        total += piece
    return total


def spread_interval(c: float, lam: float) -> Tuple[float, float]:
    """Interval the point mass at c is spread over, with density 1 + lam."""
    return c * lam / (1.0 + lam), (1.0 + c * lam) / (1.0 + lam)


def bid_ask_cdfs(c: float, lam: float) -> Tuple[Cdf, Cdf, Tuple[float, float]]:
    """
    CDFs of the spread positive part and of the negative part in one dimension.

    The positive part keeps ``lam*c`` at 0 and ``lam*(1-c)`` at 1; the unit
    point mass at c becomes a uniform density ``1 + lam`` over the spread.
    The negative part is ``1 + lam`` times Lebesgue measure.
    """
    lo, hi = spread_interval(c, lam)
    rate = 1.0 + lam

    def gamma1(x: float) -> float:
        if x < 0.0:
            return 0.0
        if x >= 1.0:
            return rate
        if x < lo:
            return c * lam
        if x < hi:
            return c * lam + rate * (x - lo)
        return c * lam + 1.0

    def gamma2(x: float) -> float:
        return rate * min(max(x, 0.0), 1.0)

    return gamma1, gamma2, (lo, hi)


def bid_ask_certificate_1d(c: float, lam: float) -> TransportCertificate:
    """Certificate for the one-good bid-ask menu, costed per region."""
    lam = _check_lambda(lam)
    c = float(c)
    if not (0.0 <= c <= 1.0):
        raise ValidationError(f"c={c} must lie in [0,1]")
    gamma1, gamma2, (lo, hi) = bid_ask_cdfs(c, lam)
    cdf_cost_1d(gamma1, gamma2, (lo, hi))  # mass check

    def area(a: float, b: float) -> float:
        if b <= a:
            return 0.0
        value, _ = integrate.quad(
            lambda x: abs(gamma1(x) - gamma2(x)), a, b, epsabs=CDF_TOL, epsrel=0.0, limit=200
        )
        return value

    regions = (
        ("below bid", area(0.0, lo)),
        ("spread", area(lo, hi)),
        ("above ask", area(hi, 1.0)),
    )
    return TransportCertificate(
        kind=CertificateKind.ONE_D,
        params={"c": c, "lambda": lam, "bid": lo, "ask": hi},
        regions=regions,
    )


# ---------------------------------------------------------------------------
# Two goods, centered belief
# ---------------------------------------------------------------------------


def c_lambda(lam: float) -> float:
    """Optimal two-good profit at c = (1/2, 1/2): lam^2((9+2sqrt2)lam+3) / (6(2lam+1)^2)."""
    lam = _check_lambda(lam)
    return lam * lam * ((9.0 + 2.0 * SQRT2) * lam + 3.0) / (6.0 * (2.0 * lam + 1.0) ** 2)


@dataclass(frozen=True)
class ABSolution:
    a: float
    b: float
    degenerate: bool
    residuals: Tuple[float, float, float] = (0.0, 0.0, 0.0)


def balance_residuals(a: float, b: float, lam: float) -> Tuple[float, float, float]:
    """Mass balance of the rectangle, the pentagon edge and the pentagon corner."""
    k = 2.0 * lam + 1.0
    return (
        lam * (1.0 - 2.0 * a) / 2.0 - k * (1.0 - 2.0 * a) * b,
        lam * b / 2.0 - k * (a - b) ** 2 / 2.0,
        lam * a / 2.0 - k * a * b,
    )


def solve_ab(lam: float) -> ABSolution:
    """Partition parameters ``a = (1+sqrt2)lam/(4lam+2)``, ``b = lam/(4lam+2)``."""
    lam = _check_lambda(lam)
    if lam == 0.0:
        return ABSolution(a=0.0, b=0.0, degenerate=True)
    a = (1.0 + SQRT2) * lam / (4.0 * lam + 2.0)
    b = lam / (4.0 * lam + 2.0)
    res = balance_residuals(a, b, lam)
    worst = max(abs(r) for r in res)
    if worst > BALANCE_TOL:
        raise NumericalError(f"balance residual {worst:.3e} at lambda={lam}")
    return ABSolution(a=a, b=b, degenerate=False, residuals=res)


def transport_cost_2d(lam: float) -> TransportCertificate:
    """Cost of the rectangle/pentagon plan; the total equals :func:`c_lambda`."""
    sol = solve_ab(lam)
    lam = float(lam)
    a, b = sol.a, sol.b
    rect = lam * (1.0 - 2.0 * a) * b / 4.0
    pent = lam * (5.0 * a + b) * b / 6.0
    regions = tuple((f"rectangle {k}", rect) for k in range(1, 5)) + tuple(
        (f"pentagon {k}", pent) for k in range(1, 5)
    )
    cert = TransportCertificate(
        kind=CertificateKind.SYMMETRIC_2D,
        params={"lambda": lam, "a": a, "b": b},
        regions=regions,
    )
    expected = c_lambda(lam)
    if abs(cert.total - expected) > BALANCE_TOL:
        raise NumericalError(
            f"transport cost {cert.total:.15g} differs from closed form {expected:.15g}"
        )
    return cert


# ---------------------------------------------------------------------------
# Two goods, belief (1/3, 1/3), noise trading
# ---------------------------------------------------------------------------

OFFCENTER_GUESS = (0.26, 0.11, 0.45, 0.15, 0.25, 0.30)

OFFCENTER_SYMBOLS = sp.symbols("a b d e f p")


def _offcenter_equations() -> sp.Matrix:
    a, b, d, e, f, p = OFFCENTER_SYMBOLS
    third = sp.Rational(1, 3)
    return sp.Matrix(
        [
            (1 - a - f) * (third - 3 * b),
            2 * d / 3 + f / 3 - 3 * (d * f - (d - b) * (f - e) / 2),
            2 * a / 3 - 3 * (a * a - (a - b) ** 2 / 2),
            4 * (1 - d) / 3 - 3 * ((1 - d) ** 2 - (1 - d - e) ** 2 / 2),
            1 - e - d - p,
            1 - f - b - p,
        ]
    )


# Four mass balances and two indifference conditions in (a, b, d, e, f, p).
OFFCENTER_EQUATIONS = _offcenter_equations()

_residuals = sp.lambdify([OFFCENTER_SYMBOLS], OFFCENTER_EQUATIONS, modules="numpy")
_jacobian = sp.lambdify(
    [OFFCENTER_SYMBOLS], OFFCENTER_EQUATIONS.jacobian(OFFCENTER_SYMBOLS), modules="numpy"
)


def _offcenter_surds() -> Dict[str, sp.Expr]:
    """
    Exact root of the off-center system.

    ``b`` zeroes the first factor of the leftmost balance and ``a`` is the
    positive root of the quadratic that remains once ``b`` is known.  ``d``,
    ``e`` and ``f`` are nested radicals over Q(sqrt2); ``p`` follows from an
    indifference condition.
    """
    a, b, _, _, _, _ = OFFCENTER_SYMBOLS
    b_exact = sp.solve(sp.Rational(1, 3) - 3 * b, b)[0]
    a_exact = max(sp.solve(OFFCENTER_EQUATIONS[2].subs(b, b_exact), a), key=float)
    d_exact = (25 - 6 * ROOT2 + 2 * sp.sqrt(134 - 82 * ROOT2)) / 63
    e_exact = (26 + 24 * ROOT2 - 2 * sp.sqrt(310 + 214 * ROOT2)) / 63
    f_exact = (44 + 18 * ROOT2 - 4 * sp.sqrt(74 + 22 * ROOT2)) / 63
    return {
        "a": sp.radsimp(a_exact),
        "b": b_exact,
        "d": d_exact,
        "e": e_exact,
        "f": f_exact,
        "p": 1 - f_exact - b_exact,
    }


OFFCENTER_SURDS: Dict[str, sp.Expr] = _offcenter_surds()


@dataclass(frozen=True)
class OffCenterSolution:
    a: float
    b: float
    d: float
    e: float
    f: float
    p: float
    residual: float
    iterations: int

    def as_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in ("a", "b", "d", "e", "f", "p")}


def offcenter_residuals(v: Sequence[float]) -> np.ndarray:
    """Numeric residuals of :data:`OFFCENTER_EQUATIONS` at ``v``."""
    return np.asarray(_residuals(tuple(v)), dtype=float).reshape(6)


def offcenter_jacobian(v: Sequence[float]) -> np.ndarray:
    return np.asarray(_jacobian(tuple(v)), dtype=float).reshape(6, 6)


def solve_offcenter(
    x0: Sequence[float] = OFFCENTER_GUESS,
    tol: float = BALANCE_TOL,
    max_iter: int = 200,
) -> OffCenterSolution:
    """
    Solve the off-center partition system by damped Newton and validate the
    root against the geometric constraints and the closed-form surds.
    """
    result = damped_newton(offcenter_residuals, x0, jac=offcenter_jacobian, tol=tol, max_iter=max_iter)
    a, b, d, e, f, p = (float(v) for v in result.x)
    sol = OffCenterSolution(a, b, d, e, f, p, residual=result.residual, iterations=result.iterations)
    values = sol.as_dict()
    if any(not (0.0 <= v <= 1.0) for v in values.values()):
        raise NumericalError(f"off-center root outside [0,1]: {values}")
    if not (e < f and 1.0 - a - f > 0.0):
        raise NumericalError(f"off-center root violates the partition geometry: {values}")
    for name, exact in OFFCENTER_SURDS.items():
        if abs(values[name] - float(exact)) > SURD_TOL:
            raise NumericalError(f"off-center {name}={values[name]!r} differs from {exact}")
    log.info("off-center system solved in %d iterations (residual %.2e)", sol.iterations, sol.residual)
    return sol


# ---------------------------------------------------------------------------
# Weak duality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualityReport:
    profit: float
    stderr: float
    cost: float
    gap: float
    k_se: float = 5.0

    @property
    def weak_duality_holds(self) -> bool:
        return self.gap >= -self.k_se * self.stderr

    @property
    def certified(self) -> bool:
        return abs(self.gap) <= self.k_se * self.stderr


def duality_gap(
    menu: Menu,
    cost: Union[float, TransportCertificate],
    dist,
    upd: UpdateModel,
    n: int,
    seed: int = 0,
    k_se: float = 5.0,
    n_jobs: Optional[int] = None,
) -> DualityReport:
    """Compare the menu's Monte Carlo profit with a transport cost."""
    report = check_feasibility(menu, upd)
    if not report.ok:
        details = "; ".join(f.detail for f in report.failures())
        raise InfeasibleMenuError(f"menu is not feasible: {details}")
    total = cost.total if isinstance(cost, TransportCertificate) else float(cost)
    est = expected_profit_mc(menu, dist, upd, n, seed=seed, n_jobs=n_jobs)
    stderr = 0.0 if math.isnan(est.stderr) else est.stderr
    gap = total - est.value
    out = DualityReport(profit=est.value, stderr=stderr, cost=total, gap=gap, k_se=k_se)
    if not out.weak_duality_holds:
        log.warning(
            "profit %.6f exceeds transport cost %.6f by %.2f standard errors",
            est.value, total, -gap / stderr if stderr else float("inf"),
        )
    return out
