# mmopt/core/optim.py
"""Adam for a list of numpy parameter arrays."""

from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .errors import ValidationError


class Adam:
    """
    Adam with bias correction.  ``maximize=True`` ascends the objective,
    which is how the learner uses it.
    """

    def __init__(
        self,
        shapes: Sequence[tuple],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        maximize: bool = True,
    ):
        if learning_rate <= 0:
            raise ValidationError(f"learning rate must be positive, got {learning_rate}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValidationError(f"betas must lie in [0,1), got {beta1}, {beta2}")
        self.alpha = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(epsilon)
        self.sign = 1.0 if maximize else -1.0
        self.t = 0
        self.beta1_t = 1.0
        self.beta2_t = 1.0
        self.m: List[np.ndarray] = [np.zeros(s) for s in shapes]
        self.v: List[np.ndarray] = [np.zeros(s) for s in shapes]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """Update ``params`` in place from ``grads``."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValidationError("parameter and gradient lists do not match the optimizer state")
        self.t += 1
        self.beta1_t *= self.beta1
        self.beta2_t *= self.beta2
        for k, (var, grad) in enumerate(zip(params, grads)):
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[k] / (1.0 - self.beta1_t)
            v_hat = self.v[k] / (1.0 - self.beta2_t)
            var += self.sign * self.alpha * m_hat / (np.sqrt(v_hat) + self.eps)
