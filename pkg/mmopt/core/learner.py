# mmopt/core/learner.py
"""
Gradient-trained menus.

The learner holds ``K`` trainable items plus a fixed no-trade item.  Item
``i`` has allocation ``2*sigmoid(alpha_i) - 1`` (always inside [-1, 1]^d)
and a free price ``p_i``.  The hard max over items is replaced by a softmax
with temperature ``tau``:

    w(x)  = softmax_i( tau * (a_i . x - p_i) )        (no-trade logit 0)
    J     = mean_x  sum_i w_i(x) * (p_i - a_i . pi(c, x))

and ``J`` is maximized with Adam.  Gradients are derived by hand; they are
accumulated over fixed row chunks in chunk order so a run is reproducible.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit

from .distributions import ValuationDistribution, draw
from .errors import NumericalError, ValidationError
from .grid import lattice
from .mechanism import (
    Menu,
    UpdateModel,
    choose_many,
    expected_profit_mc,
    format_rows,
    parse_rows,
    read_menu,
    write_menu,
)
from .optim import Adam
from .rng import STREAM_INIT, STREAM_PRUNE, STREAM_TRAIN_BATCH, stream_generator, worker_count

log = logging.getLogger(__name__)

GRAD_CHUNK = 8192
PARAMS_SUFFIX = ".params"


@dataclass(frozen=True)
class LearnerConfig:
    dist: ValuationDistribution
    upd: UpdateModel
    menu_size: int = 1024
    temperature: float = 100.0
    learning_rate: float = 1e-3
    batch_size: int = 32768
    steps: int = 20000
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    log_every: int = 500
    eval_samples: int = 1_000_000
    chunk_size: int = GRAD_CHUNK
    n_jobs: Optional[int] = None

    def __post_init__(self):
        if self.dist.dim != self.upd.dim:
            raise ValidationError(
                f"distribution has dimension {self.dist.dim}, update model has {self.upd.dim}"
            )
        if int(self.menu_size) < 1:
            raise ValidationError(f"menu_size must be >= 1, got {self.menu_size}")
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValidationError(f"temperature must be positive, got {self.temperature}")
        if int(self.batch_size) < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if int(self.steps) < 0:
            raise ValidationError(f"steps must be >= 0, got {self.steps}")
        if int(self.log_every) < 1 or int(self.eval_samples) < 1 or int(self.chunk_size) < 1:
            raise ValidationError("log_every, eval_samples and chunk_size must be positive")

    @property
    def dim(self) -> int:
        return self.dist.dim


@dataclass
class LearnerParams:
    """Trainable item parameters; the no-trade item is implicit."""

    alpha: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        self.alpha = np.array(self.alpha, dtype=float, ndmin=2)
        self.prices = np.array(self.prices, dtype=float).reshape(-1)
        if self.alpha.shape[0] != self.prices.shape[0]:
            raise ValidationError(
                f"{self.alpha.shape[0]} allocation rows but {self.prices.shape[0]} prices"
            )

    @property
    def size(self) -> int:
        return int(self.prices.shape[0])

    @property
    def dim(self) -> int:
        return int(self.alpha.shape[1])

    def allocations(self) -> np.ndarray:
        return 2.0 * expit(self.alpha) - 1.0

    def copy(self) -> "LearnerParams":
        return LearnerParams(self.alpha.copy(), self.prices.copy())

    def hard_menu(self) -> Menu:
        """No-trade at index 0 followed by every trainable item."""
        allocs = np.vstack([np.zeros((1, self.dim)), self.allocations()])
        prices = np.concatenate([[0.0], self.prices])
        return Menu(dim=self.dim, allocs=allocs, prices=prices)


def init_params(config: LearnerConfig) -> LearnerParams:
    """alpha ~ N(0, 1), prices ~ U(-1/2, 1/2), from the initialization stream."""
    rng = stream_generator(config.seed, STREAM_INIT)
    alpha = rng.standard_normal((int(config.menu_size), config.dim))
    prices = rng.uniform(-0.5, 0.5, int(config.menu_size))
    return LearnerParams(alpha, prices)


# ---------------------------------------------------------------------------
# Objective and gradients
# ---------------------------------------------------------------------------


def _soft_weights(allocs, prices, x, tau):
    """Softmax weights of the trainable items (B, K); the no-trade logit is 0."""
    z = tau * (x @ allocs.T - prices)
    shift = np.maximum(z.max(axis=1, keepdims=True), 0.0)
    e = np.exp(z - shift)
    total = e.sum(axis=1, keepdims=True) + np.exp(-shift)
    return e / total


def _chunk_terms(allocs, prices, x, upd, tau, with_grad):
    w = _soft_weights(allocs, prices, x, tau)
    belief = upd.belief(x)
    profit = prices - belief @ allocs.T
    per_row = np.einsum("bk,bk->b", w, profit)
    obj_sum = float(per_row.sum())
    if not with_grad:
        return obj_sum, None, None
    g = w * (profit - per_row[:, None])
    d_prices = (w - tau * g).sum(axis=0)
    d_allocs = -w.T @ belief + tau * (g.T @ x)
    return obj_sum, d_allocs, d_prices


def _accumulate(params, x, upd, tau, with_grad, chunk_size, n_jobs):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError("batch must be a non-empty (B, d) array")
    if x.shape[1] != params.dim or upd.dim != params.dim:
        raise ValidationError(
            f"batch dimension {x.shape[1]}, update {upd.dim}, parameters {params.dim}"
        )
    allocs = params.allocations()
    bounds = [(s, min(s + chunk_size, x.shape[0])) for s in range(0, x.shape[0], chunk_size)]
    jobs = min(worker_count(n_jobs), len(bounds))
    if jobs <= 1:
        parts = [_chunk_terms(allocs, params.prices, x[s:e], upd, tau, with_grad) for s, e in bounds]
    else:
        parts = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(_chunk_terms)(allocs, params.prices, x[s:e], upd, tau, with_grad)
            for s, e in bounds
        )
    n = x.shape[0]
    obj = 0.0
    d_allocs = np.zeros_like(allocs) if with_grad else None
    d_prices = np.zeros_like(params.prices) if with_grad else None
    for obj_sum, da, dp in parts:
        obj += obj_sum
        if with_grad:
            d_allocs += da
            d_prices += dp
    if not with_grad:
        return obj / n, None, None
    s = expit(params.alpha)
    d_alpha = (d_allocs / n) * 2.0 * s * (1.0 - s)
    return obj / n, d_alpha, d_prices / n


def soft_objective(
    params: LearnerParams,
    x,
    upd: UpdateModel,
    tau: float,
    chunk_size: int = GRAD_CHUNK,
    n_jobs: Optional[int] = None,
) -> float:
    """Softmax-weighted mean profit over the batch ``x``."""
    return _accumulate(params, x, upd, tau, False, chunk_size, n_jobs)[0]


def gradients(
    params: LearnerParams,
    x,
    upd: UpdateModel,
    tau: float,
    chunk_size: int = GRAD_CHUNK,
    n_jobs: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact ``(dJ/d alpha, dJ/d prices)`` of :func:`soft_objective`."""
    _, d_alpha, d_prices = _accumulate(params, x, upd, tau, True, chunk_size, n_jobs)
    return d_alpha, d_prices


def objective_and_gradients(params, x, upd, tau, chunk_size=GRAD_CHUNK, n_jobs=None):
    return _accumulate(params, x, upd, tau, True, chunk_size, n_jobs)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogEntry:
    step: int
    soft_objective: float
    hard_profit: float
    hard_stderr: float


@dataclass
class TrainingLog:
    entries: List[LogEntry] = field(default_factory=list)

    def append(self, entry: LogEntry) -> None:
        self.entries.append(entry)

    @property
    def final(self) -> Optional[LogEntry]:
        return self.entries[-1] if self.entries else None

    def __len__(self) -> int:
        return len(self.entries)


def train(
    config: LearnerConfig,
    callback: Optional[Callable[[int, LearnerParams, LogEntry], None]] = None,
    params: Optional[LearnerParams] = None,
) -> Tuple[LearnerParams, TrainingLog]:
    """
    Adam ascent on the soft objective for ``config.steps`` steps.

    Step ``t`` draws a fresh batch from the training stream at index ``t``.
    Every ``log_every`` steps, and after the last one, the hard menu's profit
    is estimated with ``eval_samples`` Monte Carlo draws.
    """
    params = init_params(config) if params is None else params.copy()
    if params.dim != config.dim:
        raise ValidationError(f"parameters have dimension {params.dim}, config {config.dim}")
    adam = Adam(
        [params.alpha.shape, params.prices.shape],
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
        maximize=True,
    )
    history = TrainingLog()
    log.info(
        "training %d items on %s, c=%s lambda=%g for %d steps",
        params.size, config.dist, config.upd.c, config.upd.lam, config.steps,
    )
    for step in range(int(config.steps)):
        x = draw(config.dist, stream_generator(config.seed, STREAM_TRAIN_BATCH, step), config.batch_size)
        obj, d_alpha, d_prices = objective_and_gradients(
            params, x, config.upd, config.temperature, config.chunk_size, config.n_jobs
        )
        if not (math.isfinite(obj) and np.all(np.isfinite(d_alpha)) and np.all(np.isfinite(d_prices))):
            raise NumericalError(
                f"non-finite objective or gradient at step {step} (objective {obj!r}); "
                f"try a lower temperature or learning rate"
            )
        adam.step([params.alpha, params.prices], [d_alpha, d_prices])
        done = step + 1
        if done % config.log_every == 0 or done == config.steps:
            hard = expected_profit_mc(
                params.hard_menu(), config.dist, config.upd, config.eval_samples,
                seed=config.seed, n_jobs=config.n_jobs,
            )
            entry = LogEntry(done, obj, hard.value, hard.stderr)
            history.append(entry)
            log.info(
                "step %d: soft objective %.6f, hard profit %.6f +- %.6f",
                done, obj, hard.value, hard.stderr,
            )
            if callback is not None:
                callback(done, params.copy(), entry)
    return params, history


# ---------------------------------------------------------------------------
# Extracting a readable menu
# ---------------------------------------------------------------------------

PRUNE_RESOLUTION = 512
PRUNE_SAMPLES_3D = 1_000_000
DEDUP_TOL = 0.02


def _prune_points(dim: int, resolution: int, samples: int, seed: int) -> np.ndarray:
    if dim <= 2:
        pts, _, _ = lattice(dim, resolution)
        return pts
    return stream_generator(seed, STREAM_PRUNE).random((samples, dim))


def extract_menu(
    params: LearnerParams,
    dedup_tol: float = DEDUP_TOL,
    prune_grid_resolution: int = PRUNE_RESOLUTION,
    prune_samples: int = PRUNE_SAMPLES_3D,
    seed: int = 0,
) -> Menu:
    """
    Turn trained parameters into a compact menu.

    Items never chosen on the prune grid are dropped; the remaining ones are
    clustered greedily, most chosen first, joining the first cluster whose
    leader is within ``dedup_tol`` in every allocation entry and the price.
    Each cluster becomes its choice-count-weighted mean.  Clusters around the
    no-trade item are absorbed by it, and no-trade is re-inserted at index 0.
    """
    hard = params.hard_menu()
    pts = _prune_points(params.dim, int(prune_grid_resolution), int(prune_samples), seed)
    idx, _ = choose_many(hard, pts)
    counts = np.bincount(idx, minlength=len(hard))
    vectors = np.column_stack([hard.allocs, hard.prices])

    chosen = [k for k in range(1, len(hard)) if counts[k] > 0]
    chosen.sort(key=lambda k: (-counts[k], k))

    leaders: List[np.ndarray] = [vectors[0]]
    members: List[List[int]] = [[0]]
    for k in chosen:
        for c, lead in enumerate(leaders):
            if np.max(np.abs(vectors[k] - lead)) < dedup_tol:
                members[c].append(k)
                break
        else:
            leaders.append(vectors[k])
            members.append([k])

    rows = [np.zeros(params.dim + 1)]
    weights = []
    for group in members[1:]:
        w = counts[group].astype(float)
        rows.append((w[:, None] * vectors[group]).sum(axis=0) / w.sum())
        weights.append(w.sum())
    order = [0] + [1 + i for i in sorted(range(len(weights)), key=lambda i: -weights[i])]
    table = np.array([rows[i] for i in order])
    log.debug(
        "extract_menu: %d of %d items chosen, %d clusters, %d absorbed by no-trade",
        len(chosen), params.size, len(members) - 1, len(members[0]) - 1,
    )
    return Menu(dim=params.dim, allocs=table[:, :-1], prices=table[:, -1])


# ---------------------------------------------------------------------------
# Checkpoints: menu text file plus a sidecar of raw (alpha, price) rows
# ---------------------------------------------------------------------------


def params_path(path: Union[str, os.PathLike]) -> str:
    return os.fspath(path) + PARAMS_SUFFIX


def save_checkpoint(
    path: Union[str, os.PathLike], params: LearnerParams, header: Optional[str] = None
) -> None:
    write_menu(path, params.hard_menu(), header)
    cols = [f"alpha_{k + 1}" for k in range(params.dim)] + ["price"]
    text = format_rows(np.column_stack([params.alpha, params.prices]), cols, header)
    sidecar = params_path(path)
    try:
        with open(sidecar, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write parameter file {sidecar}: {exc}") from None


def load_checkpoint(path: Union[str, os.PathLike]) -> LearnerParams:
    """Read the sidecar next to ``path``; the menu file itself must also parse."""
    read_menu(path)
    sidecar = params_path(path)
    try:
        with open(sidecar, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read parameter file {sidecar}: {exc}") from None
    table = np.array(parse_rows(text, "parameter file"), dtype=float)
    return LearnerParams(alpha=table[:, :-1], prices=table[:, -1])


def menu_patterns(menu: Menu, threshold: float = 0.5) -> List[Tuple[int, ...]]:
    """Sign pattern of each allocation: entries above ``threshold`` in magnitude keep their sign."""
    return [
        tuple(int(np.sign(v)) if abs(v) > threshold else 0 for v in alloc)
        for alloc in menu.allocs
    ]


def match_by_pattern(menu: Menu, reference: Menu, threshold: float = 0.5) -> List[Tuple[int, int]]:
    """Pairs ``(i, j)`` of items of ``menu`` and ``reference`` sharing a sign pattern."""
    ref = {p: j for j, p in enumerate(menu_patterns(reference, threshold))}
    return [
        (i, ref[p]) for i, p in enumerate(menu_patterns(menu, threshold)) if p in ref
    ]


