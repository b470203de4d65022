"""Weighted aggregation of features into global descriptors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionMismatch, EncodingMismatch, ZeroDescriptor
from .features import FeatureSet
from .sinkhorn import DemocraticWeights

Encoding = Literal["first", "second-explicit", "second-sketch"]


@dataclass(frozen=True)
class Descriptor:
    values: np.ndarray
    encoding: Encoding
    normalized: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if not np.isfinite(v).all():
            raise ValueError("descriptor has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def matrix(self) -> np.ndarray:
        """d x d view of an explicit second-order descriptor (row-major vec)."""
        if self.encoding != "second-explicit":
            raise EncodingMismatch(f"{self.encoding} descriptor has no matrix form")
        d = int(round(np.sqrt(self.values.size)))
        return self.values.reshape(d, d)

    def __len__(self):
        return self.values.size


def resolve_weights(alpha, n) -> np.ndarray:
    """Turn DemocraticWeights / array / None (uniform) into a length-n vector."""
    if alpha is None:
        return np.ones(n)
    if isinstance(alpha, DemocraticWeights):
        alpha = alpha.alpha
    a = np.asarray(alpha, dtype=np.float64).ravel()
    if a.shape[0] != n:
        raise DimensionMismatch(f"{a.shape[0]} weights for {n} features")
    return a


def second_order_matrix(fs: FeatureSet, alpha=None) -> np.ndarray:
    """A_alpha = sum_i alpha_i x_i x_i^T as a symmetric d x d matrix."""
    a = resolve_weights(alpha, fs.n)
    X = fs.data
    A = (X * a[:, None]).T @ X
    return 0.5 * (A + A.T)


def aggregate_second_order(fs: FeatureSet, alpha=None) -> Descriptor:
    return Descriptor(second_order_matrix(fs, alpha).ravel(), "second-explicit")


def aggregate_first_order(fs: FeatureSet, alpha=None) -> Descriptor:
    a = resolve_weights(alpha, fs.n)
    return Descriptor(a @ fs.data, "first")


def contributions(fs: FeatureSet, alpha, xi: Descriptor, sketch_cfg=None) -> np.ndarray:
    """alpha(x) phi(x)^T xi for every feature, without forming phi explicitly
    for the explicit second-order encoder (x^T A x == vec(xx^T) . vec(A))."""
    a = resolve_weights(alpha, fs.n)
    X = fs.data
    if xi.encoding == "first":
        if xi.values.size != fs.d:
            raise EncodingMismatch(f"first-order descriptor of length {xi.values.size} for d={fs.d}")
        return a * (X @ xi.values)
    if xi.encoding == "second-explicit":
        if xi.values.size != fs.d * fs.d:
            raise EncodingMismatch(f"explicit descriptor of length {xi.values.size} for d={fs.d}")
        A = xi.matrix
        return a * np.einsum("ij,jk,ik->i", X, A, X)
    if xi.encoding == "second-sketch":
        if sketch_cfg is None:
            raise EncodingMismatch("sketched descriptor needs the SketchConfig it was built with")
        from .sketch import sketch_features

        theta = sketch_features(X, sketch_cfg)
        if theta.shape[1] != xi.values.size:
            raise EncodingMismatch("sketch dimension differs from descriptor length")
        return a * (theta @ xi.values)
    raise EncodingMismatch(f"unknown encoding {xi.encoding!r}")


def contribution(x_index: int, fs: FeatureSet, alpha, xi: Descriptor, sketch_cfg=None) -> float:
    if not 0 <= x_index < fs.n:
        raise IndexError(f"feature index {x_index} out of range for n={fs.n}")
    sub = FeatureSet(fs.data[x_index:x_index + 1])
    a = resolve_weights(alpha, fs.n)[x_index:x_index + 1]
    return float(contributions(sub, a, xi, sketch_cfg)[0])


def postprocess(desc: Descriptor) -> Descriptor:
    """Signed square root followed by l2 normalization."""
    v = np.sign(desc.values) * np.sqrt(np.abs(desc.values))
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ZeroDescriptor("cannot normalize an all-zero descriptor")
    return Descriptor(v / norm, desc.encoding, normalized=True)
