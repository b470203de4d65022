"""Dampened Sinkhorn solver for democratic and gamma-democratic weights.

Weights alpha solve diag(alpha) K diag(alpha) 1 = (K 1)^gamma. gamma=0 equalizes
every feature's contribution, gamma=1 is met by alpha = 1 (plain sum pooling).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NonPositiveKernel, ZeroRowSum
from .kernel import KernelMatrix


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver settings.

    ``tau`` damps the update alpha <- alpha / sigma**tau. tau=1 is the
    undampened iteration and tends to oscillate; 0.5 is the usual choice.
    The loop always runs ``iterations`` steps; inspect the returned residual
    and raise the count if it is too large.
    """

    tau: float = 0.5
    iterations: int = 10
    gamma: float = 0.0
    zero_division_epsilon: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.zero_division_epsilon > 0:
            raise ValueError("zero_division_epsilon must be positive")


@dataclass(frozen=True)
class DemocraticWeights:
    alpha: np.ndarray
    residual: float
    iterations_run: int

    def __len__(self):
        return self.alpha.shape[0]


def constraint_residual(K, alpha, target):
    """max_i |(diag(a) K diag(a) 1)_i - t_i| / t_i."""
    lhs = alpha * (K @ alpha)
    return float(np.max(np.abs(lhs - target) / target))


def _check_kernel(K, eps):
    if np.any(K < 0):
        i, j = np.argwhere(K < 0)[0]
        raise NonPositiveKernel(
            f"kernel entry ({i}, {j}) = {K[i, j]:.3g} is negative; clamp first-order kernels first"
        )
    row_sums = K.sum(axis=1)
    low = np.flatnonzero(row_sums <= eps)
    if low.size:
        raise ZeroRowSum(f"kernel row {low[0]} sums to {row_sums[low[0]]:.3g}")
    return row_sums


def solve_gamma_democratic(K: KernelMatrix | np.ndarray, cfg: SinkhornConfig = SinkhornConfig()) -> DemocraticWeights:
    Kv = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
    _check_kernel(Kv, cfg.zero_division_epsilon)

    target = gamma_target(Kv, cfg.gamma)
    alpha = sinkhorn_iterations(Kv, target, cfg.tau, int(cfg.iterations))
    return DemocraticWeights(alpha, constraint_residual(Kv, alpha, target), int(cfg.iterations))


def gamma_target(Kv, gamma):
    # K @ ones rather than K.sum(axis=1): the first iterate's K @ alpha must
    # reproduce it bit for bit so that gamma=1 leaves alpha at exactly 1
    return (Kv @ np.ones(Kv.shape[0])) ** gamma


def sinkhorn_iterations(Kv, target, tau, T):
    """The bare damped loop starting from alpha = 1; no input checks."""
    alpha = np.ones(Kv.shape[0])
    for _ in range(T):
        sigma = alpha * (Kv @ alpha) / target
        alpha = alpha / sigma**tau
    return alpha


def solve_democratic(K: KernelMatrix | np.ndarray, cfg: SinkhornConfig = SinkhornConfig()) -> DemocraticWeights:
    """Fully democratic weights (gamma forced to 0, target C = 1)."""
    return solve_gamma_democratic(K, replace(cfg, gamma=0.0))
