# mmopt/core/quadrature.py
"""
Composite Gauss-Legendre rules on the unit interval and unit cubes.

All nodes are strictly interior, so integrands that blow up on the faces
(Beta density gradients) are never evaluated there.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ValidationError


@lru_cache(maxsize=None)
def gauss_legendre_01(order: int, panels: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of a composite ``order``-point rule with ``panels``
    equal sub-intervals on [0, 1].  Weights sum to 1.
    """
    if order < 1 or panels < 1:
        raise ValidationError(f"order and panels must be positive, got {order}, {panels}")
    x, w = leggauss(order)
    h = 1.0 / panels
    starts = np.arange(panels) * h
    nodes = (starts[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * w, panels)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=None)
def tensor_rule(dim: int, order: int, panels: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on [0, 1]^dim: points of shape (N, dim) and weights (N,)."""
    if dim < 0:
        raise ValidationError(f"dimension must be >= 0, got {dim}")
    if dim == 0:
        pts = np.zeros((1, 0))
        wts = np.ones(1)
    else:
        nodes, weights = gauss_legendre_01(order, panels)
        grids = np.meshgrid(*([nodes] * dim), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
        wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts
