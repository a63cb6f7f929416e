# mmopt/core/feasibility.py
"""
Feasibility checks for menus.

A menu belongs to the feasible set when:

* Allocation bounds:
    every allocation entry lies in [-1, 1], so the induced utility is
    1-Lipschitz in the l1 norm.

* No-trade item:
    exactly one item has zero allocation and zero price, which makes the
    utility nonnegative (individual rationality).  It sits at index 0 so
    that an indifferent trader does not trade.

* Zero utility at the belief:
    u(c) = 0, i.e. ``alloc_i . c - price_i <= tol`` for every item.

Each check is a small pure function over a :class:`FeasibilityContext`;
:func:`check_feasibility` runs them all and collects a report.  Violations
are report entries, never exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .errors import ValidationError
from .mechanism import Menu, UpdateModel
from .rng import STREAM_RANDOM_MENU, stream_generator

# Absolute tolerance for u(c) = 0.
BELIEF_TOL = 1e-9

ALLOCATION_BOUNDS = "allocation_bounds"
NO_TRADE_PRESENT = "no_trade_present"
ZERO_AT_BELIEF = "zero_at_belief"


@dataclass(frozen=True)
class FeasibilityContext:
    """The menu and update model a check is allowed to inspect."""

    menu: Menu
    upd: UpdateModel
    tol: float = BELIEF_TOL


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    worst: float = 0.0


@dataclass(frozen=True)
class FeasibilityReport:
    checks: Tuple[CheckResult, ...]

    def _get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def allocation_bounds(self) -> bool:
        return self._get(ALLOCATION_BOUNDS).passed

    @property
    def no_trade_present(self) -> bool:
        return self._get(NO_TRADE_PRESENT).passed

    @property
    def zero_at_belief(self) -> bool:
        return self._get(ZERO_AT_BELIEF).passed

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]


def check_allocation_bounds(ctx: FeasibilityContext) -> CheckResult:
    allocs = ctx.menu.allocs
    if allocs.size == 0:
        return CheckResult(ALLOCATION_BOUNDS, True, "no items")
    worst = float(np.max(np.abs(allocs)))
    passed = worst <= 1.0
    detail = f"max |alloc| = {worst:.6g}"
    return CheckResult(ALLOCATION_BOUNDS, passed, detail, worst=max(worst - 1.0, 0.0))


def check_no_trade(ctx: FeasibilityContext) -> CheckResult:
    mask = ctx.menu.no_trade_mask()
    count = int(np.count_nonzero(mask))
    if count == 1:
        k = int(np.argmax(mask))
        if k != 0:
            # argmax tie-breaking only favours no-trade at index 0
            return CheckResult(NO_TRADE_PRESENT, False, f"no-trade item at index {k}, not first")
        return CheckResult(NO_TRADE_PRESENT, True, "one no-trade item, first")
    if count == 0:
        return CheckResult(NO_TRADE_PRESENT, False, "no no-trade item")
    return CheckResult(NO_TRADE_PRESENT, False, f"{count} duplicate no-trade items")


def check_zero_at_belief(ctx: FeasibilityContext) -> CheckResult:
    menu, c = ctx.menu, np.asarray(ctx.upd.c)
    if len(menu) == 0:
        return CheckResult(ZERO_AT_BELIEF, False, "u(c) undefined for an empty menu")
    surplus = menu.allocs @ c - menu.prices
    k = int(np.argmax(surplus))
    worst = float(surplus[k])
    passed = worst <= ctx.tol
    detail = f"max alloc.c - price = {worst:.6g} (item {k})"
    return CheckResult(ZERO_AT_BELIEF, passed, detail, worst=max(worst, 0.0))


FEASIBILITY_CHECKS: Tuple[Callable[[FeasibilityContext], CheckResult], ...] = (
    check_allocation_bounds,
    check_no_trade,
    check_zero_at_belief,
)


def check_feasibility(menu: Menu, upd: UpdateModel, tol: float = BELIEF_TOL) -> FeasibilityReport:
    """Run every feasibility check and return the collected report."""
    if upd.dim != menu.dim:
        raise ValidationError(f"update model has dimension {upd.dim}, menu has {menu.dim}")
    ctx = FeasibilityContext(menu=menu, upd=upd, tol=tol)
    return FeasibilityReport(checks=tuple(check(ctx) for check in FEASIBILITY_CHECKS))


def random_feasible_menu(upd: UpdateModel, size: int, seed: int = 0, index: int = 0) -> Menu:
    """
    A feasible menu of ``size`` random items plus no-trade at index 0.

    Allocations are uniform on [-1, 1]^d and every price sits a random
    nonnegative slack above ``alloc . c``, so u(c) = 0.  Draws come from the
    random-menu stream at ``index``.
    """
    size = int(size)
    if size < 0:
        raise ValidationError(f"menu size must be >= 0, got {size}")
    rng = stream_generator(seed, STREAM_RANDOM_MENU, index)
    allocs = rng.uniform(-1.0, 1.0, (size, upd.dim))
    slack = rng.exponential(0.25, size)
    prices = allocs @ np.asarray(upd.c) + slack
    return Menu(
        dim=upd.dim,
        allocs=np.vstack([np.zeros((1, upd.dim)), allocs]),
        prices=np.concatenate([[0.0], prices]),
    )
