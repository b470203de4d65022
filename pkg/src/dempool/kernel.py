"""Pairwise kernel matrices for first-order and outer-product encoders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .features import FeatureSet

Order = Literal["first", "second"]


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    order: Order

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"kernel must be square, got shape {v.shape}")
        if self.order not in ("first", "second"):
            raise ValueError(f"unknown kernel order {self.order!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _mirror_upper(G):
    # copy the upper triangle onto the lower one so K[i, j] == K[j, i] bit for bit
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def raw_kernel(fs: FeatureSet) -> KernelMatrix:
    """Gram matrix of the raw features, K[i, j] = x_i . x_j."""
    X = fs.data
    return KernelMatrix(_mirror_upper(X @ X.T), "first")


def second_order_kernel(fs: FeatureSet) -> KernelMatrix:
    """Kernel of the outer-product encoder.

    vec(x x^T) . vec(y y^T) = (x . y)^2, so the n x n kernel is the
    element-wise square of the raw Gram matrix and no d^2-dimensional vector
    is ever formed.
    """
    G = raw_kernel(fs).values
    return KernelMatrix(G * G, "second")


def clamp_negatives(K: KernelMatrix) -> KernelMatrix:
    return KernelMatrix(np.maximum(K.values, 0.0), K.order)


def dump_kernel_csv(path, K: KernelMatrix):
    from .features import save_matrix

    save_matrix(path, K.values, "csv")
