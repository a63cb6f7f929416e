# mmopt/core/newton.py
"""Damped Newton iteration for small square nonlinear systems."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError

log = logging.getLogger(__name__)

Vector = np.ndarray
System = Callable[[Vector], Vector]
Jacobian = Callable[[Vector], np.ndarray]


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    history: List[float]


def fd_jacobian(func: System, x: Vector, f0: Vector, h: float = 1e-7) -> np.ndarray:
    """Forward-difference Jacobian, one column per coordinate."""
    n = x.shape[0]
    jac = np.empty((f0.shape[0], n))
    for i in range(n):
        step = np.zeros(n)
        step[i] = h * max(1.0, abs(x[i]))
        jac[:, i] = (func(x + step) - f0) / step[i]
    return jac


def damped_newton(
    func: System,
    x0,
    jac: Optional[Jacobian] = None,
    tol: float = 1e-12,
    max_iter: int = 200,
    damping: float = 0.5,
    max_halvings: int = 30,
) -> NewtonResult:
    """
    Solve ``func(x) = 0`` from ``x0``.

    Each step is scaled by ``damping`` until the residual infinity norm stops
    increasing.  Converged when that norm is below ``tol``.  ``jac`` defaults
    to forward differences.
    """
    x = np.array(x0, dtype=float)
    fx = np.asarray(func(x), dtype=float)
    if fx.shape != x.shape:
        raise ValidationError("func() must return a vector of the same length as x0")
    norm = float(np.max(np.abs(fx)))
    history = [norm]
    for it in range(max_iter):
        if not np.isfinite(norm):
            raise NumericalError(f"non-finite residual at iteration {it}")
        if norm < tol:
            log.debug("newton converged in %d iterations, residual %.3e", it, norm)
            return NewtonResult(x=x, residual=norm, iterations=it, history=history)
        J = jac(x) if jac is not None else fd_jacobian(func, x, fx)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            raise NumericalError(f"singular Jacobian at iteration {it}, x={x}") from None
        scale = 1.0
        for _ in range(max_halvings):
            x_new = x + scale * step
            f_new = np.asarray(func(x_new), dtype=float)
            new_norm = float(np.max(np.abs(f_new)))
            if np.isfinite(new_norm) and new_norm <= norm:
                break
            scale *= damping
        x, fx, norm = x_new, f_new, new_norm
        history.append(norm)
        log.debug("newton iteration %d: residual %.3e (step scale %g)", it + 1, norm, scale)
    if norm < tol:
        return NewtonResult(x=x, residual=norm, iterations=max_iter, history=history)
    raise ConvergenceError(
        f"newton did not converge in {max_iter} iterations (residual {norm:.3e})"
    )
