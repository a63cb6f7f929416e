# mmopt/core/distributions.py
"""
Trader-value distributions on [0, 1]^d with independent coordinates.

Every coordinate follows the same one-dimensional law:

* ``uniform``            Uniform(0, 1)
* ``beta:alpha,beta``    Beta(alpha, beta), alpha, beta > 0
* ``truncnorm:mean,sd``  Normal(mean, sd) truncated to [0, 1]

Densities and their gradients are analytic.  Beta draws use the gamma-ratio
method; truncated-normal draws invert the CDF on the truncated range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from .errors import ValidationError
from .rng import CHUNK_SIZE, STREAM_VALUATIONS, chunk_bounds, stream_generator

UNIFORM = "uniform"
BETA = "beta"
TRUNCNORM = "truncnorm"

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CoordinateLaw:
    """One-dimensional law shared by every coordinate."""

    kind: str
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind == UNIFORM:
            if params:
                raise ValidationError("uniform takes no parameters")
        elif self.kind == BETA:
            if len(params) != 2 or min(params) <= 0 or not all(map(math.isfinite, params)):
                raise ValidationError(f"beta needs two positive shape parameters, got {params}")
        elif self.kind == TRUNCNORM:
            if len(params) != 2 or not all(map(math.isfinite, params)) or params[1] <= 0:
                raise ValidationError(f"truncnorm needs a mean and a positive sd, got {params}")
        else:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")

    @property
    def spec(self) -> str:
        if self.kind == UNIFORM:
            return UNIFORM
        return f"{self.kind}:{self.params[0]:g},{self.params[1]:g}"

    # -- truncated-normal helpers ------------------------------------------

    def _tn_bounds(self) -> Tuple[float, float, float]:
        mean, sd = self.params
        lo = special.ndtr((0.0 - mean) / sd)
        hi = special.ndtr((1.0 - mean) / sd)
        return float(lo), float(hi), float(hi - lo)

    # -- density, derivative, CDF ------------------------------------------

    def pdf(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= 1.0)
        if self.kind == UNIFORM:
            out = np.ones_like(t)
        elif self.kind == BETA:
            a, b = self.params
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.power(t, a - 1.0) * np.power(1.0 - t, b - 1.0) * math.exp(
                    -special.betaln(a, b)
                )
        else:
            mean, sd = self.params
            _, _, mass = self._tn_bounds()
            z = (t - mean) / sd
            out = _INV_SQRT_2PI * np.exp(-0.5 * z * z) / (sd * mass)
        return np.where(inside, out, 0.0)

    def dpdf(self, t: np.ndarray) -> np.ndarray:
        """Derivative of the density on the open interval (0, 1)."""
        t = np.asarray(t, dtype=float)
        if self.kind == UNIFORM:
            return np.zeros_like(t)
        if self.kind == BETA:
            a, b = self.params
            return self.pdf(t) * ((a - 1.0) / t - (b - 1.0) / (1.0 - t))
        mean, sd = self.params
        return -self.pdf(t) * (t - mean) / (sd * sd)

    def cdf(self, t: np.ndarray) -> np.ndarray:
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        if self.kind == UNIFORM:
            return t
        if self.kind == BETA:
            a, b = self.params
            return special.betainc(a, b, t)
        mean, sd = self.params
        lo, _, mass = self._tn_bounds()
        return (special.ndtr((t - mean) / sd) - lo) / mass

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == UNIFORM:
            return rng.random(shape)
        if self.kind == BETA:
            # Both gammas of an element are drawn together, element by element,
            # so a shorter draw is a prefix of a longer one.
            shape = tuple(np.atleast_1d(shape))
            g = rng.standard_gamma(np.broadcast_to(np.asarray(self.params), shape + (2,)))
            return g[..., 0] / (g[..., 0] + g[..., 1])
        mean, sd = self.params
        lo, _, mass = self._tn_bounds()
        u = rng.random(shape)
        x = mean + sd * special.ndtri(lo + u * mass)
        return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class ValuationDistribution:
    """Product distribution of ``dim`` independent copies of ``law``."""

    dim: int
    law: CoordinateLaw

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValidationError(f"dimension must be positive, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @classmethod
    def uniform(cls, dim: int) -> "ValuationDistribution":
        return cls(dim, CoordinateLaw(UNIFORM))

    @classmethod
    def beta(cls, dim: int, a: float, b: float) -> "ValuationDistribution":
        return cls(dim, CoordinateLaw(BETA, (a, b)))

    @classmethod
    def truncnorm(cls, dim: int, mean: float, sd: float) -> "ValuationDistribution":
        return cls(dim, CoordinateLaw(TRUNCNORM, (mean, sd)))

    @property
    def spec(self) -> str:
        return self.law.spec

    def __str__(self) -> str:
        return f"{self.spec}^{self.dim}"


def parse_distribution(spec: str, dim: int) -> ValuationDistribution:
    """
    Parse ``uniform``, ``beta:a,b`` or ``truncnorm:mean,sd``.

    >>> parse_distribution("beta:2,2", 2).law.params
    (2.0, 2.0)
    """
    text = spec.strip().lower()
    kind, _, rest = text.partition(":")
    params: Tuple[float, ...] = ()
    if rest:
        try:
            params = tuple(float(tok) for tok in rest.split(","))
        except ValueError:
            raise ValidationError(f"cannot parse distribution parameters in {spec!r}") from None
    return ValuationDistribution(dim, CoordinateLaw(kind, params))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def draw(dist: ValuationDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` draws from ``rng`` as an (n, d) array."""
    return dist.law.draw(rng, (int(n), dist.dim))


def sample_chunk(dist: ValuationDistribution, seed: int, chunk_index: int, size: int) -> np.ndarray:
    """The first ``size`` samples of chunk ``chunk_index`` of the valuation stream."""
    return draw(dist, stream_generator(seed, STREAM_VALUATIONS, chunk_index), size)


def sample(dist: ValuationDistribution, n: int, seed: int = 0) -> np.ndarray:
    """
    ``n`` i.i.d. value vectors.  Sample ``i`` comes from chunk ``i // CHUNK_SIZE``,
    so ``sample(dist, m, seed)`` is a prefix of ``sample(dist, n, seed)`` for m <= n.
    """
    n = int(n)
    if n < 0:
        raise ValidationError(f"sample count must be >= 0, got {n}")
    out = np.empty((n, dist.dim), dtype=float)
    for k, start, stop in chunk_bounds(n, CHUNK_SIZE):
        out[start:stop] = sample_chunk(dist, seed, k, stop - start)
    return out


# ---------------------------------------------------------------------------
# Density and gradient
# ---------------------------------------------------------------------------


def _as_rows(dist: ValuationDistribution, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != dist.dim:
        raise ValidationError(
            f"point dimension {pts.shape[-1]} does not match distribution dimension {dist.dim}"
        )
    return pts


def density(dist: ValuationDistribution, x) -> np.ndarray:
    """Product density at points of shape (..., d)."""
    pts = _as_rows(dist, x)
    return np.prod(dist.law.pdf(pts), axis=-1)


def density_gradient(dist: ValuationDistribution, x) -> np.ndarray:
    """Gradient of the product density at interior points of shape (..., d)."""
    pts = _as_rows(dist, x)
    g = dist.law.pdf(pts)
    h = dist.law.dpdf(pts)
    grad = np.empty_like(pts)
    for k in range(dist.dim):
        others = np.prod(np.delete(g, k, axis=-1), axis=-1)
        grad[..., k] = h[..., k] * others
    return grad


def pdf(dist: ValuationDistribution, x) -> float:
    """Density at a single point."""
    pts = _as_rows(dist, x)
    if pts.ndim != 1:
        raise ValidationError("pdf() takes a single point; use density()")
    return float(density(dist, pts))


def grad_pdf(dist: ValuationDistribution, x) -> np.ndarray:
    """Density gradient at a single point of the open cube (0, 1)^d."""
    pts = _as_rows(dist, x)
    if pts.ndim != 1:
        raise ValidationError("grad_pdf() takes a single point; use density_gradient()")
    if np.any(pts <= 0.0) or np.any(pts >= 1.0):
        raise ValidationError(f"grad_pdf is defined on the open cube only, got {pts}")
    return density_gradient(dist, pts)


def coordinate_cdf(dist: ValuationDistribution, t) -> np.ndarray:
    """Marginal CDF shared by every coordinate."""
    return dist.law.cdf(t)
