# mmopt/core/measure.py
"""
The transformed signed measure and the linearization identity.

For a density f on [0, 1]^d and the linear update pi(c, x) = lam*c + (1-lam)*x,
expected profit of any feasible menu equals the integral of its utility u
against a signed measure mu with three parts:

* interior density  ``-(lam * grad f . (x - c) + (1 + d*lam) * f)``
* boundary faces    ``lam * f * (1 - c_k)`` on ``x_k = 1`` and ``lam * f * c_k`` on ``x_k = 0``
* a unit point mass at the belief c

The total mass is zero.  The identity needs u(c) = 0, which is why
:func:`linearization_residual` refuses menus violating it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from .distributions import BETA, ValuationDistribution, density, density_gradient
from .errors import InfeasibleMenuError, ValidationError
from .mechanism import Estimate, Menu, UpdateModel, combine_stats, expected_profit_mc, utility
from .quadrature import tensor_rule
from .rng import CHUNK_SIZE, STREAM_MEASURE, chunk_bounds, stream_generator, worker_count

log = logging.getLogger(__name__)

QUAD_ORDER = 64
QUAD_PANELS = 16
# Mass integrals have smooth integrands; a lighter rule is enough in three dimensions.
MASS_ORDER_3D = 24
MASS_PANELS_3D = 4
# Above this dimension the interior term of integrate_u is sampled.
MAX_QUADRATURE_DIM = 2
DEFAULT_MC_SAMPLES = 10_000_000

UtilityLike = Union[Menu, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class BoundaryFace:
    """The face ``x[axis] == side`` of the unit cube, ``side`` in {0, 1}."""

    axis: int
    side: int

    @property
    def label(self) -> str:
        return f"x{self.axis + 1}={self.side}"

    def embed(self, face_points: np.ndarray) -> np.ndarray:
        """Lift (N, d-1) face coordinates to (N, d) points on this face."""
        n = face_points.shape[0]
        dim = face_points.shape[1] + 1
        out = np.empty((n, dim), dtype=float)
        others = [k for k in range(dim) if k != self.axis]
        out[:, others] = face_points
        out[:, self.axis] = float(self.side)
        return out


@dataclass(frozen=True)
class PointMass:
    location: Tuple[float, ...]
    mass: float


@dataclass(frozen=True)
class SignedMeasure:
    """
    Interior density, boundary face densities and point masses of mu.

    The densities are evaluated lazily from ``dist`` and ``upd``; only the
    geometry (faces and points) is stored.
    """

    dist: ValuationDistribution
    upd: UpdateModel
    faces: Tuple[BoundaryFace, ...]
    points: Tuple[PointMass, ...]

    @property
    def dim(self) -> int:
        return self.dist.dim

    def interior_density(self, x: np.ndarray) -> np.ndarray:
        lam, c = self.upd.lam, np.asarray(self.upd.c)
        f = density(self.dist, x)
        drift = np.einsum("...k,...k->...", density_gradient(self.dist, x), x - c)
        return -(lam * drift + (1.0 + self.dim * lam) * f)

    def face_density(self, face: BoundaryFace, x: np.ndarray) -> np.ndarray:
        """Density of ``face`` at points ``x`` already lying on it."""
        c_k = self.upd.c[face.axis]
        outward = (1.0 - c_k) if face.side == 1 else c_k
        return self.upd.lam * outward * density(self.dist, x)

    # -- masses ---------------------------------------------------------------

    def _mass_rule(self, dim: int):
        if self.dim > MAX_QUADRATURE_DIM:
            return tensor_rule(dim, MASS_ORDER_3D, MASS_PANELS_3D)
        return tensor_rule(dim, QUAD_ORDER, QUAD_PANELS)

    def interior_mass(self) -> float:
        pts, wts = self._mass_rule(self.dim)
        return float(wts @ self.interior_density(pts))

    def face_mass(self, face: BoundaryFace) -> float:
        pts, wts = self._mass_rule(self.dim - 1)
        return float(wts @ self.face_density(face, face.embed(pts)))

    def component_masses(self) -> Dict[str, float]:
        """Masses keyed ``interior``, one ``x<k>=<side>`` per face, and ``point``."""
        masses: Dict[str, float] = {"interior": self.interior_mass()}
        for face in self.faces:
            masses[face.label] = self.face_mass(face)
        masses["point"] = float(sum(p.mass for p in self.points))
        return masses

    def total_mass(self) -> float:
        return float(sum(self.component_masses().values()))


def build_measure(dist: ValuationDistribution, upd: UpdateModel) -> SignedMeasure:
    """Assemble mu for ``dist`` under the linear update ``upd``."""
    if dist.dim != upd.dim:
        raise ValidationError(
            f"distribution has dimension {dist.dim}, update model has {upd.dim}"
        )
    if dist.law.kind == BETA and min(dist.law.params) < 1.0:
        # The face densities are infinite when a shape parameter is below one.
        raise ValidationError(f"{dist.spec} has an unbounded density on the boundary")
    faces = tuple(BoundaryFace(axis=k, side=s) for k in range(dist.dim) for s in (0, 1))
    points = (PointMass(location=tuple(upd.c), mass=1.0),)
    return SignedMeasure(dist=dist, upd=upd, faces=faces, points=points)


# ---------------------------------------------------------------------------
# Integrating a utility against mu
# ---------------------------------------------------------------------------


def _as_callable(u: UtilityLike) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(u, Menu):
        menu = u
        return lambda pts: utility(menu, pts)
    return lambda pts: np.asarray(u(pts), dtype=float).reshape(-1)


def _interior_chunk(measure, u, seed, chunk_index, size):
    rng = stream_generator(seed, STREAM_MEASURE, chunk_index)
    x = rng.random((size, measure.dim))
    values = u(x) * measure.interior_density(x)
    mean = float(values.mean())
    return size, mean, float(((values - mean) ** 2).sum())


def _interior_mc(measure, u, n, seed, n_jobs) -> Estimate:
    chunks = list(chunk_bounds(n, CHUNK_SIZE))
    jobs = min(worker_count(n_jobs), len(chunks))
    if jobs <= 1:
        parts = [_interior_chunk(measure, u, seed, k, stop - start) for k, start, stop in chunks]
    else:
        parts = Parallel(n_jobs=jobs, prefer="threads")(
            delayed(_interior_chunk)(measure, u, seed, k, stop - start)
            for k, start, stop in chunks
        )
    count, mean, m2 = combine_stats(parts)
    if count < 2:
        return Estimate(mean, float("nan"))
    return Estimate(mean, math.sqrt(max(m2 / (count - 1), 0.0) / count))


def integrate_u(
    measure: SignedMeasure,
    u: UtilityLike,
    order: int = QUAD_ORDER,
    panels: int = QUAD_PANELS,
    n: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    n_jobs: Optional[int] = None,
) -> Estimate:
    """
    ``int u dmu`` for a menu or a vectorized convex function ``u``.

    Faces use composite Gauss-Legendre rules and point masses are exact.
    The interior uses a tensor rule for d <= 2 (standard error 0) and
    ``n`` uniform samples otherwise.
    """
    f = _as_callable(u)
    if isinstance(u, Menu) and u.dim != measure.dim:
        raise ValidationError(f"menu has dimension {u.dim}, measure has {measure.dim}")
    if measure.dim <= MAX_QUADRATURE_DIM:
        pts, wts = tensor_rule(measure.dim, order, panels)
        interior = Estimate(float(wts @ (f(pts) * measure.interior_density(pts))), 0.0)
    else:
        interior = _interior_mc(measure, f, int(n), seed, n_jobs)

    boundary = 0.0
    face_pts, face_wts = tensor_rule(measure.dim - 1, order, panels)
    for face in measure.faces:
        x = face.embed(face_pts)
        boundary += float(face_wts @ (f(x) * measure.face_density(face, x)))

    point = 0.0
    for pm in measure.points:
        point += pm.mass * float(f(np.asarray(pm.location, dtype=float).reshape(1, -1))[0])

    log.debug(
        "integrate_u: interior=%.9g boundary=%.9g point=%.9g", interior.value, boundary, point
    )
    return Estimate(interior.value + boundary + point, interior.stderr)


def linearization_residual(
    menu: Menu,
    dist: ValuationDistribution,
    upd: UpdateModel,
    n: int,
    seed: int = 0,
    tol: float = 1e-9,
) -> Estimate:
    """
    ``|E[profit] - int u dmu|`` with the combined standard error of both sides.

    Raises :class:`InfeasibleMenuError` when u(c) != 0.
    """
    u_c = float(utility(menu, np.asarray(upd.c).reshape(1, -1))[0])
    if abs(u_c) > tol:
        raise InfeasibleMenuError(f"u(c) = {u_c:.3g}; the identity needs u(c) = 0")
    profit = expected_profit_mc(menu, dist, upd, n, seed=seed)
    integral = integrate_u(build_measure(dist, upd), menu, n=n, seed=seed)
    se_profit = 0.0 if math.isnan(profit.stderr) else profit.stderr
    se = math.hypot(se_profit, integral.stderr)
    return Estimate(abs(profit.value - integral.value), se)
