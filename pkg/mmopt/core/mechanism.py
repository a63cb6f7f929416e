# mmopt/core/mechanism.py
"""
Menus, trader choice and market-maker profit.

A menu is a finite list of (allocation, price) offers.  A trader with value
vector x picks the offer maximizing ``alloc . x - price``; the induced
utility ``u(x) = max_i alloc_i . x - price_i`` is convex, and with a
no-trade item present it is nonnegative.  The market maker, who updates its
belief from c to ``pi(c, x) = lam * c + (1 - lam) * x`` after seeing the
trade, earns ``price - alloc . pi(c, x)``.

The type space is the unit cube [0, 1]^d throughout.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from .errors import ValidationError
from .rng import CHUNK_SIZE, chunk_bounds, worker_count

log = logging.getLogger(__name__)

# Rows evaluated at once by the vectorized choice routines.
EVAL_BLOCK = 8192


class Estimate(NamedTuple):
    """A Monte Carlo (or quadrature) value with its standard error."""

    value: float
    stderr: float


@dataclass(frozen=True)
class MenuItem:
    """A single offer: the trader receives ``alloc`` and pays ``price``."""

    alloc: Tuple[float, ...]
    price: float

    def is_no_trade(self, tol: float = 1e-12) -> bool:
        return abs(self.price) <= tol and all(abs(a) <= tol for a in self.alloc)


@dataclass(frozen=True)
class UpdateModel:
    """
    Linear belief update ``pi(c, x) = lam * c + (1 - lam) * x``.

    ``lam = 1`` is noise trading (the belief stays at c); ``lam = 0`` is full
    adverse selection (the belief jumps to the trader's value).
    """

    c: Tuple[float, ...]
    lam: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(np.asarray(self.c, dtype=float)))
        if not c:
            raise ValidationError("belief vector c must be non-empty")
        if any(not (0.0 <= v <= 1.0) for v in c):
            raise ValidationError(f"belief c={c} must lie in [0,1]^d")
        lam = float(self.lam)
        if not (0.0 <= lam <= 1.0):
            raise ValidationError(f"lambda={lam} must lie in [0,1]")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def centered(cls, dim: int, lam: float) -> "UpdateModel":
        return cls(c=(0.5,) * dim, lam=lam)

    @property
    def dim(self) -> int:
        return len(self.c)

    def belief(self, x: np.ndarray) -> np.ndarray:
        """Posterior belief for trader values ``x`` of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        return self.lam * np.asarray(self.c) + (1.0 - self.lam) * x


@dataclass(frozen=True, eq=False)
class Menu:
    """
    Immutable menu of ``K`` items over ``dim`` goods.

    ``allocs`` has shape (K, dim) and ``prices`` shape (K,).  Both are stored
    as read-only float arrays.  Item order matters: ties in trader choice go
    to the lowest index, so menus built by this package keep the no-trade
    item at index 0.
    """

    dim: int
    allocs: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise ValidationError(f"menu dimension must be positive, got {dim}")
        allocs = np.array(self.allocs, dtype=float).reshape(-1, dim)
        prices = np.array(self.prices, dtype=float).reshape(-1)
        if allocs.shape[0] != prices.shape[0]:
            raise ValidationError(
                f"menu has {allocs.shape[0]} allocations but {prices.shape[0]} prices"
            )
        if not (np.all(np.isfinite(allocs)) and np.all(np.isfinite(prices))):
            raise ValidationError("menu entries must be finite")
        allocs.setflags(write=False)
        prices.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "allocs", allocs)
        object.__setattr__(self, "prices", prices)

    @classmethod
    def from_items(cls, items: Iterable[MenuItem], dim: Optional[int] = None) -> "Menu":
        items = list(items)
        if dim is None:
            if not items:
                raise ValidationError("cannot infer the dimension of an empty menu")
            dim = len(items[0].alloc)
        for item in items:
            if len(item.alloc) != dim:
                raise ValidationError(
                    f"item {item} has {len(item.alloc)} goods, expected {dim}"
                )
        allocs = np.array([item.alloc for item in items], dtype=float).reshape(-1, dim)
        prices = np.array([item.price for item in items], dtype=float)
        return cls(dim=dim, allocs=allocs, prices=prices)

    @classmethod
    def no_trade_only(cls, dim: int) -> "Menu":
        return cls(dim=dim, allocs=np.zeros((1, dim)), prices=np.zeros(1))

    def __len__(self) -> int:
        return int(self.prices.shape[0])

    @property
    def items(self) -> Tuple[MenuItem, ...]:
        return tuple(
            MenuItem(alloc=tuple(float(v) for v in a), price=float(p))
            for a, p in zip(self.allocs, self.prices)
        )

    def no_trade_mask(self, tol: float = 1e-12) -> np.ndarray:
        """Boolean mask of items with zero allocation and zero price."""
        return (np.abs(self.prices) <= tol) & np.all(np.abs(self.allocs) <= tol, axis=1)

    def with_no_trade_first(self) -> "Menu":
        """The same items with the first no-trade row moved to index 0."""
        hits = np.flatnonzero(self.no_trade_mask())
        if hits.size == 0 or hits[0] == 0:
            return self
        k = int(hits[0])
        order = np.concatenate([[k], np.arange(k), np.arange(k + 1, len(self))])
        return Menu(dim=self.dim, allocs=self.allocs[order], prices=self.prices[order])

    def __repr__(self) -> str:
        return f"Menu(dim={self.dim}, items={len(self)})"


# ---------------------------------------------------------------------------
# Trader choice
# ---------------------------------------------------------------------------


def _as_points(menu: Menu, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != menu.dim:
        raise ValidationError(
            f"value vectors of dimension {pts.shape[-1]} do not match menu dimension {menu.dim}"
        )
    return pts


def choose_many(menu: Menu, points) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized trader choice for an (N, d) array of value vectors.

    Returns ``(indices, utilities)``.  ``np.argmax`` returns the first
    maximizer, which is the lowest-index tie-break.
    """
    pts = _as_points(menu, points)
    if len(menu) == 0:
        raise ValidationError("menu has no items")
    n = pts.shape[0]
    idx = np.empty(n, dtype=np.int64)
    util = np.empty(n, dtype=float)
    for start in range(0, n, EVAL_BLOCK):
        stop = min(start + EVAL_BLOCK, n)
        values = pts[start:stop] @ menu.allocs.T - menu.prices
        best = np.argmax(values, axis=1)
        idx[start:stop] = best
        util[start:stop] = values[np.arange(stop - start), best]
    return idx, util


def choose(menu: Menu, x) -> Tuple[int, float]:
    """Return the chosen item index and the trader's utility at ``x``."""
    pts = _as_points(menu, x)
    if pts.shape[0] != 1:
        raise ValidationError("choose() takes a single value vector; use choose_many()")
    idx, util = choose_many(menu, pts)
    return int(idx[0]), float(util[0])


def utility(menu: Menu, points) -> np.ndarray:
    """Induced trader utility ``u`` at each row of ``points``."""
    return choose_many(menu, points)[1]


def profits(menu: Menu, points, upd: UpdateModel) -> np.ndarray:
    """Market-maker profit ``p_i - a_i . pi(c, x)`` for each row of ``points``."""
    pts = _as_points(menu, points)
    if upd.dim != menu.dim:
        raise ValidationError(f"update model has dimension {upd.dim}, menu has {menu.dim}")
    idx, _ = choose_many(menu, pts)
    belief = upd.belief(pts)
    return menu.prices[idx] - np.einsum("ij,ij->i", menu.allocs[idx], belief)


def profit_at(menu: Menu, x, upd: UpdateModel) -> float:
    """Market-maker profit for a single trader with values ``x``."""
    pts = _as_points(menu, x)
    if pts.shape[0] != 1:
        raise ValidationError("profit_at() takes a single value vector; use profits()")
    return float(profits(menu, pts, upd)[0])


# ---------------------------------------------------------------------------
# Monte Carlo expected profit
# ---------------------------------------------------------------------------


def _chunk_profit_stats(menu, dist, upd, seed, chunk_index, size):
    # Imported here to keep distributions free of mechanism imports.
    from .distributions import sample_chunk

    x = sample_chunk(dist, seed, chunk_index, size)
    values = profits(menu, x, upd)
    mean = float(values.mean())
    m2 = float(((values - mean) ** 2).sum())
    return size, mean, m2


def combine_stats(parts: Sequence[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    """
    Merge per-chunk ``(count, mean, M2)`` triples in the given order
    (Chan et al. pairwise update).
    """
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        total = n + nb
        delta = mb - mean
        mean = mean + delta * nb / total
        m2 = m2 + m2b + delta * delta * n * nb / total
        n = total
    return n, mean, m2


def expected_profit_mc(
    menu: Menu,
    dist,
    upd: UpdateModel,
    n: int,
    seed: int = 0,
    chunk_size: int = CHUNK_SIZE,
    n_jobs: Optional[int] = None,
) -> Estimate:
    """
    Monte Carlo estimate of the expected profit, with standard error.

    ``n`` samples are split into fixed chunks; chunk ``k`` draws from its own
    counter-based stream, and chunk results are merged in chunk order, so
    the estimate depends only on (seed, chunk_size) and not on the worker count.
    """
    n = int(n)
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    if dist.dim != menu.dim or upd.dim != menu.dim:
        raise ValidationError(
            f"dimension mismatch: menu {menu.dim}, distribution {dist.dim}, update {upd.dim}"
        )
    chunks = list(chunk_bounds(n, chunk_size))
    jobs = min(worker_count(n_jobs), len(chunks))
    log.debug("expected_profit_mc: n=%d chunks=%d workers=%d", n, len(chunks), jobs)
    if jobs <= 1:
        parts = [
            _chunk_profit_stats(menu, dist, upd, seed, k, stop - start)
            for k, start, stop in chunks
        ]
    else:
        parts = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(_chunk_profit_stats)(menu, dist, upd, seed, k, stop - start)
            for k, start, stop in chunks
        )
    count, mean, m2 = combine_stats(parts)
    if count < 2:
        return Estimate(mean, float("nan"))
    variance = max(m2 / (count - 1), 0.0)
    return Estimate(mean, math.sqrt(variance / count))


# ---------------------------------------------------------------------------
# Symmetry helpers
# ---------------------------------------------------------------------------


def swap_goods(menu: Menu, i: int = 0, j: int = 1) -> Menu:
    """Return the menu with goods ``i`` and ``j`` exchanged in every allocation."""
    order = list(range(menu.dim))
    order[i], order[j] = order[j], order[i]
    return Menu(dim=menu.dim, allocs=menu.allocs[:, order], prices=menu.prices)


def same_items(first: Menu, second: Menu, tol: float = 1e-12) -> bool:
    """True when both menus offer the same (alloc, price) set, in any order."""
    if first.dim != second.dim or len(first) != len(second):
        return False
    used = np.zeros(len(second), dtype=bool)
    for a, p in zip(first.allocs, first.prices):
        diff = np.maximum(
            np.max(np.abs(second.allocs - a), axis=1), np.abs(second.prices - p)
        )
        diff[used] = np.inf
        k = int(np.argmin(diff))
        if diff[k] > tol:
            return False
        used[k] = True
    return True


# ---------------------------------------------------------------------------
# Plain-text menu format: one item per line, "a_1 ... a_d price", '#' comments
# ---------------------------------------------------------------------------


def parse_rows(text: str, what: str) -> List[List[float]]:
    rows: List[List[float]] = []
    width: Optional[int] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ValidationError(f"{what} line {lineno}: {exc}") from None
        if len(row) < 2:
            raise ValidationError(f"{what} line {lineno}: need at least one allocation and a price")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValidationError(
                f"{what} line {lineno}: expected {width} columns, found {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ValidationError(f"{what} contains no rows")
    return rows


def parse_menu(text: str) -> Menu:
    """
    Parse the plain-text menu format.  A no-trade row is mandatory and is
    moved to index 0 so that it wins ties.
    """
    rows = parse_rows(text, "menu")
    arr = np.array(rows, dtype=float)
    menu = Menu(dim=arr.shape[1] - 1, allocs=arr[:, :-1], prices=arr[:, -1])
    if not menu.no_trade_mask().any():
        raise ValidationError("menu file has no no-trade row (all zeros)")
    first = menu.with_no_trade_first()
    if first is not menu:
        log.info("menu file lists no-trade after other items; moved it to index 0")
    return first


def format_rows(rows: np.ndarray, columns: Sequence[str], header: Optional[str] = None) -> str:
    """Serialize rows with full float precision under a ``# col ...`` line."""
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append("# " + " ".join(columns))
    for row in np.asarray(rows, dtype=float):
        lines.append(" ".join(format_exact(v) for v in row))
    return "\n".join(lines) + "\n"


def format_exact(value: float) -> str:
    value = float(value)
    if value == 0.0:
        return "0"
    return repr(value)


def format_menu(menu: Menu, header: Optional[str] = None) -> str:
    """Serialize a menu so that re-reading it evaluates identically."""
    cols = [f"a_{k + 1}" for k in range(menu.dim)] + ["price"]
    table = np.column_stack([menu.allocs, menu.prices])
    return format_rows(table, cols, header)


def read_menu(path: Union[str, os.PathLike]) -> Menu:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read menu file {path}: {exc}") from None
    return parse_menu(text)


def write_menu(path, menu: Menu, header: Optional[str] = None) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(format_menu(menu, header))
    except OSError as exc:
        raise ValidationError(f"cannot write menu file {path}: {exc}") from None
    log.info("wrote menu with %d items to %s", len(menu), path)
