# mmopt/core/grid.py
"""
Lattice evaluation of a menu, for heatmaps of allocation and payment rules.

The lattice has ``r`` equally spaced points per free axis over [0, 1],
endpoints included.  Menus over three or more goods are sliced: the caller
fixes all but at most two coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from .errors import ValidationError
from .mechanism import Menu, choose_many


@dataclass(frozen=True)
class GridCellView:
    """
    Read-only view of one lattice cell.

    Attributes
    ----------
    point:
        Full value vector (fixed coordinates included).
    item:
        Index of the chosen menu item.
    alloc, payment:
        Allocation and price of that item.
    utility:
        Trader utility at ``point``.
    """

    point: Tuple[float, ...]
    item: int
    alloc: Tuple[float, ...]
    payment: float
    utility: float


@dataclass(frozen=True, eq=False)
class UtilityGrid:
    """Arrays of lattice evaluations, row-major with the first free axis outermost."""

    resolution: int
    free_axes: Tuple[int, ...]
    fixed: Tuple[Tuple[int, float], ...]
    points: np.ndarray
    items: np.ndarray
    allocs: np.ndarray
    payments: np.ndarray
    utilities: np.ndarray
    no_trade: np.ndarray

    def __len__(self) -> int:
        return int(self.items.shape[0])


def lattice(dim: int, r: int, fixed: Optional[Mapping[int, float]] = None):
    """Points of the r-per-axis lattice over the free axes, shape (r^k, dim)."""
    fixed = dict(fixed or {})
    for axis, value in fixed.items():
        if not (0 <= axis < dim):
            raise ValidationError(f"slice axis {axis + 1} outside 1..{dim}")
        if not (0.0 <= value <= 1.0):
            raise ValidationError(f"slice value {value} outside [0,1]")
    free = tuple(k for k in range(dim) if k not in fixed)
    if len(free) > 2:
        raise ValidationError(
            f"grids support at most two free axes; fix {len(free) - 2} more coordinate(s)"
        )
    ticks = np.linspace(0.0, 1.0, r)
    mesh = np.meshgrid(*([ticks] * len(free)), indexing="ij")
    n = r ** len(free)
    pts = np.empty((n, dim), dtype=float)
    for k, axis in enumerate(free):
        pts[:, axis] = mesh[k].ravel()
    for axis, value in fixed.items():
        pts[:, axis] = value
    return pts, free, tuple(sorted(fixed.items()))


def utility_grid(menu: Menu, r: int, fixed: Optional[Mapping[int, float]] = None) -> UtilityGrid:
    """Evaluate :func:`choose_many` on the lattice."""
    r = int(r)
    if r < 2:
        raise ValidationError(f"grid resolution must be >= 2, got {r}")
    pts, free, fixed_items = lattice(menu.dim, r, fixed)
    idx, util = choose_many(menu, pts)
    no_trade = menu.no_trade_mask()[idx]
    return UtilityGrid(
        resolution=r,
        free_axes=free,
        fixed=fixed_items,
        points=pts,
        items=idx,
        allocs=menu.allocs[idx],
        payments=menu.prices[idx],
        utilities=util,
        no_trade=no_trade,
    )


def iter_grid_cells(grid: UtilityGrid) -> Iterator[GridCellView]:
    """Yield a :class:`GridCellView` per lattice cell, in row-major order."""
    for k in range(len(grid)):
        yield GridCellView(
            point=tuple(float(v) for v in grid.points[k]),
            item=int(grid.items[k]),
            alloc=tuple(float(v) for v in grid.allocs[k]),
            payment=float(grid.payments[k]),
            utility=float(grid.utilities[k]),
        )


def collect_grid(grid: UtilityGrid) -> List[GridCellView]:
    """Return every cell view in a list."""
    return list(iter_grid_cells(grid))


def no_trade_count(grid: UtilityGrid) -> int:
    """Number of cells whose chosen item is a no-trade item."""
    return int(np.count_nonzero(grid.no_trade))


def item_counts(grid: UtilityGrid) -> Dict[int, int]:
    """How many cells choose each item index."""
    values, counts = np.unique(grid.items, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}
