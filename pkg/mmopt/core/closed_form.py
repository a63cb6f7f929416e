# mmopt/core/closed_form.py
"""
Exact optimal and conjectured menus.

Families
--------
* ``bidask1d``    one good, any belief c and strength lam: bid-ask spread.
* ``symmetric2d`` two goods, c = (1/2, 1/2), any lam: nine-item mixed bundling.
* ``offcenter``   two goods, c = (1/3, 1/3), lam = 1: seven items, no single-good sales.
* ``separate2d``  two goods, the product of two bid-ask menus (the baseline).

Prices of the symmetric family live in Q(sqrt2) and are kept as exact sympy
expressions until they are turned into floats.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from numbers import Rational
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy as sp
from scipy import optimize

from .errors import NumericalError, ValidationError
from .mechanism import Menu, MenuItem, UpdateModel
from .transport import (
    ROOT2,
    SQRT2,
    TransportCertificate,
    bid_ask_certificate_1d,
    c_lambda,
    solve_offcenter,
    transport_cost_2d,
)

log = logging.getLogger(__name__)

GAP_TOL = 1e-12

Number = Union[float, Rational, sp.Rational]


def _exact(value: Number) -> sp.Rational:
    if isinstance(value, sp.Basic):
        if not value.is_Rational:
            raise ValidationError(f"parameter {value} is not rational")
        return value
    if isinstance(value, Rational):
        return sp.Rational(value.numerator, value.denominator)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"non-finite parameter {value}")
    return sp.Rational(value)


def _check_unit(name: str, value: Number) -> sp.Rational:
    q = _exact(value)
    if not (0 <= q <= 1):
        raise ValidationError(f"{name}={float(q)} must lie in [0,1]")
    return q


# ---------------------------------------------------------------------------
# One good
# ---------------------------------------------------------------------------


def bid_ask_prices(c: Number, lam: Number) -> Tuple[sp.Rational, sp.Rational]:
    """``(ask, bid)``: the price of buying one unit and the price of selling one."""
    c, lam = _check_unit("c", c), _check_unit("lambda", lam)
    ask = (1 + lam * c) / (lam + 1)
    bid = lam * c / (lam + 1)
    return ask, bid


def bid_ask_1d(c: Number, lam: Number) -> Menu:
    """No-trade, buy at the ask, sell at the bid."""
    ask, bid = bid_ask_prices(c, lam)
    return Menu.from_items(
        [MenuItem((0.0,), 0.0), MenuItem((1.0,), float(ask)), MenuItem((-1.0,), -float(bid))]
    )


def profit_1d(c: Number, lam: Number) -> float:
    """Expected profit of :func:`bid_ask_1d` under uniform values: (2(c-1)c+1) lam^2 / (2(lam+1))."""
    c, lam = _check_unit("c", c), _check_unit("lambda", lam)
    return float((2 * (c - 1) * c + 1) * lam * lam / (2 * (lam + 1)))


# ---------------------------------------------------------------------------
# Two goods
# ---------------------------------------------------------------------------

NO_TRADE_2D = (0, 0)

SYMMETRIC_ORDER: Tuple[Tuple[int, int], ...] = (
    (0, 0),
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, -1),
    (1, -1),
    (-1, 1),
)


def symmetric_2d_prices(lam: Number) -> Dict[Tuple[int, int], sp.Expr]:
    """Exact prices of the nine-item symmetric menu, keyed by allocation."""
    q = _check_unit("lambda", lam)
    den = 4 * q + 2
    single_buy = (3 * q + 2) / den
    single_sell = -q / den
    grand_buy = (6 * q + 4 - ROOT2 * q) / den
    grand_sell = -(2 + ROOT2) * q / den
    mixed = (2 * q + 2 - ROOT2 * q) / den
    return {
        (0, 0): sp.Integer(0),
        (1, 0): single_buy,
        (0, 1): single_buy,
        (-1, 0): single_sell,
        (0, -1): single_sell,
        (1, 1): sp.expand(grand_buy),
        (-1, -1): sp.expand(grand_sell),
        (1, -1): sp.expand(mixed),
        (-1, 1): sp.expand(mixed),
    }


# Prices of the noise-trading menu (lam = 1).
NOISE_TRADING_PRICES: Dict[Tuple[int, int], sp.Expr] = {
    (0, 0): sp.Integer(0),
    (1, 0): sp.Rational(5, 6),
    (0, 1): sp.Rational(5, 6),
    (-1, 0): sp.Rational(-1, 6),
    (0, -1): sp.Rational(-1, 6),
    (1, 1): sp.Rational(5, 3) - ROOT2 / 6,
    (-1, -1): sp.Rational(-1, 3) - ROOT2 / 6,
    (1, -1): sp.Rational(2, 3) - ROOT2 / 6,
    (-1, 1): sp.Rational(2, 3) - ROOT2 / 6,
}


def _menu_from_prices(prices: Dict[Tuple[int, int], object], order: Sequence[Tuple[int, int]]) -> Menu:
    items = [MenuItem(tuple(float(v) for v in alloc), float(prices[alloc])) for alloc in order]
    return Menu.from_items(items, dim=2)


def symmetric_2d_menu(lam: Number) -> Menu:
    """The nine-item menu for c = (1/2, 1/2), no-trade first."""
    return _menu_from_prices(symmetric_2d_prices(lam), SYMMETRIC_ORDER)


def separate_menu_2d(c: Sequence[Number] = (0.5, 0.5), lam: Number = 1) -> Menu:
    """Product of two bid-ask menus: every (s1, s2) in {-1, 0, 1}^2 at additive prices."""
    if len(c) != 2:
        raise ValidationError(f"separate pricing needs a two-good belief, got {c}")
    legs = [bid_ask_prices(ck, lam) for ck in c]

    def leg_price(k: int, s: int) -> sp.Rational:
        ask, bid = legs[k]
        return ask if s > 0 else (-bid if s < 0 else sp.Integer(0))

    prices = {alloc: leg_price(0, alloc[0]) + leg_price(1, alloc[1]) for alloc in SYMMETRIC_ORDER}
    return _menu_from_prices(prices, SYMMETRIC_ORDER)


def separate_profit_2d(c: Sequence[Number] = (0.5, 0.5), lam: Number = 1) -> float:
    return float(sum(profit_1d(ck, lam) for ck in c))


OFFCENTER_ORDER: Tuple[Tuple[int, int], ...] = (
    (0, 0),
    (-1, 0),
    (0, -1),
    (-1, -1),
    (1, -1),
    (-1, 1),
    (1, 1),
)

OFFCENTER_BELIEF = (1.0 / 3.0, 1.0 / 3.0)


def offcenter_prices() -> Dict[Tuple[int, int], float]:
    """Prices from the solved partition: each follows from a trader indifference."""
    sol = solve_offcenter()
    return {
        (0, 0): 0.0,
        (-1, 0): -sol.b,
        (0, -1): -sol.b,
        (-1, -1): -(sol.a + sol.b),
        (1, -1): sol.p,
        (-1, 1): sol.p,
        (1, 1): sol.p + 2.0 * sol.d,
    }


def offcenter_menu() -> Menu:
    """Seven-item menu for c = (1/3, 1/3), lam = 1."""
    return _menu_from_prices(offcenter_prices(), OFFCENTER_ORDER)


# ---------------------------------------------------------------------------
# Profit gap of bundling over separate pricing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfitGap:
    lam: float
    optimal: float
    separate: float
    gap: float
    relative: float


def gap_closed_form(lam: float) -> float:
    """lam^3((2sqrt2-3)lam + 2sqrt2) / (6(lam+1)(2lam+1)^2)."""
    lam = float(lam)
    return lam**3 * ((2.0 * SQRT2 - 3.0) * lam + 2.0 * SQRT2) / (
        6.0 * (lam + 1.0) * (2.0 * lam + 1.0) ** 2
    )


def profit_gap_2d(lam: float) -> ProfitGap:
    lam = float(lam)
    optimal = transport_cost_2d(lam).total
    separate = 2.0 * profit_1d(0.5, lam)
    gap = optimal - separate
    expected = gap_closed_form(lam)
    if abs(gap - expected) > GAP_TOL:
        raise NumericalError(f"profit gap {gap:.15g} differs from closed form {expected:.15g}")
    relative = gap / separate if separate > 0.0 else 0.0
    return ProfitGap(lam=lam, optimal=optimal, separate=separate, gap=gap, relative=relative)


def profit_gap_table(lams: Sequence[float]) -> List[ProfitGap]:
    return [profit_gap_2d(lam) for lam in lams]


def peak_relative_gap(xatol: float = 1e-10) -> ProfitGap:
    """Strength lam in (0, 1] where bundling gains the most over separate pricing."""
    res = optimize.minimize_scalar(
        lambda lam: -profit_gap_2d(lam).relative,
        bounds=(1e-6, 1.0),
        method="bounded",
        options={"xatol": xatol},
    )
    if not res.success:
        raise NumericalError(f"peak search failed: {res.message}")
    return profit_gap_2d(float(res.x))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


class FamilyKind(enum.Enum):
    BIDASK_1D = "bidask1d"
    SYMMETRIC_2D = "symmetric2d"
    OFFCENTER_2D = "offcenter"
    SEPARATE_2D = "separate2d"


@dataclass(frozen=True)
class ClosedFormFamily:
    """A family together with its parameters; ``c`` is ignored where it is fixed."""

    kind: FamilyKind
    c: Tuple[float, ...]
    lam: float

    @property
    def dim(self) -> int:
        return 1 if self.kind is FamilyKind.BIDASK_1D else 2

    def update_model(self) -> UpdateModel:
        return UpdateModel(c=self.c, lam=self.lam)

    def menu(self) -> Menu:
        if self.kind is FamilyKind.BIDASK_1D:
            return bid_ask_1d(self.c[0], self.lam)
        if self.kind is FamilyKind.SYMMETRIC_2D:
            return symmetric_2d_menu(self.lam)
        if self.kind is FamilyKind.SEPARATE_2D:
            return separate_menu_2d(self.c, self.lam)
        return offcenter_menu()

    def profit(self) -> Optional[float]:
        """Closed-form expected profit under uniform values, when one is known."""
        if self.kind is FamilyKind.BIDASK_1D:
            return profit_1d(self.c[0], self.lam)
        if self.kind is FamilyKind.SYMMETRIC_2D:
            return c_lambda(self.lam)
        if self.kind is FamilyKind.SEPARATE_2D:
            return separate_profit_2d(self.c, self.lam)
        return None

    def baseline(self) -> float:
        """Profit of separate bid-ask pricing at the same belief."""
        return separate_profit_2d(self.c, self.lam) if self.dim == 2 else profit_1d(self.c[0], self.lam)

    def certificate(self) -> Optional[TransportCertificate]:
        if self.kind is FamilyKind.BIDASK_1D:
            return bid_ask_certificate_1d(self.c[0], self.lam)
        if self.kind is FamilyKind.SYMMETRIC_2D:
            return transport_cost_2d(self.lam)
        return None

    def describe(self) -> str:
        c = ",".join(f"{v:g}" for v in self.c)
        return f"{self.kind.value} c=({c}) lambda={self.lam:g}"


FAMILY_NAMES = tuple(kind.value for kind in FamilyKind)


def family_from_name(
    name: str, c: Optional[Sequence[float]] = None, lam: Optional[float] = None
) -> ClosedFormFamily:
    """
    Resolve a family name and fill in its fixed or default parameters.

    ``symmetric2d`` forces c = (1/2, 1/2) and ``offcenter`` forces
    c = (1/3, 1/3), lam = 1; other families default to c = 1/2 and lam = 1.
    """
    try:
        kind = FamilyKind(name.strip().lower())
    except ValueError:
        raise ValidationError(
            f"unknown family {name!r}; choose one of {', '.join(FAMILY_NAMES)}"
        ) from None
    lam_value = 1.0 if lam is None else float(lam)
    if kind is FamilyKind.OFFCENTER_2D:
        if lam is not None and lam_value != 1.0:
            raise ValidationError("the off-center menu is defined for lambda = 1 only")
        return ClosedFormFamily(kind, OFFCENTER_BELIEF, 1.0)
    if kind is FamilyKind.SYMMETRIC_2D:
        if c is not None and any(abs(float(v) - 0.5) > 0 for v in c):
            raise ValidationError("the symmetric menu is defined for c = (1/2, 1/2) only")
        belief: Tuple[float, ...] = (0.5, 0.5)
    else:
        dim = 1 if kind is FamilyKind.BIDASK_1D else 2
        if c is None:
            belief = (0.5,) * dim
        else:
            belief = tuple(float(v) for v in c)
            if len(belief) == 1 and dim == 2:
                belief = belief * 2
            if len(belief) != dim:
                raise ValidationError(f"{kind.value} needs a belief with {dim} coordinate(s), got {c}")
    UpdateModel(c=belief, lam=lam_value)  # range checks
    return ClosedFormFamily(kind, belief, lam_value)
