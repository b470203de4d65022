"""Tensor Sketch embedding of the outer-product encoder.

theta(x) is the circular convolution of two independent count sketches of x,
evaluated through the FFT, so that E[theta(x) . theta(y)] = (x . y)^2 =
vec(xx^T) . vec(yy^T). Because gamma-democratic aggregation is linear in the
encoded features, sum_i alpha_i theta(x_i) stands in for sum_i alpha_i x_i x_i^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregate import Descriptor, resolve_weights
from .errors import DimensionMismatch
from .features import FeatureSet

DEFAULT_SKETCH_DIM = 8192


@dataclass(frozen=True)
class SketchConfig:
    d: int
    k: int = DEFAULT_SKETCH_DIM
    seed: int = 0
    h1: np.ndarray = field(init=False, repr=False)
    s1: np.ndarray = field(init=False, repr=False)
    h2: np.ndarray = field(init=False, repr=False)
    s2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise ValueError(f"need k >= 1 and d >= 1, got k={self.k}, d={self.d}")
        # every index hashed uniformly and independently; the tables are a
        # pure function of (d, k, seed)
        rng = np.random.default_rng([self.seed, self.d, self.k])
        tables = {}
        for j in (1, 2):
            h = rng.integers(0, self.k, size=self.d)
            s = rng.integers(0, 2, size=self.d) * 2.0 - 1.0
            h.setflags(write=False)
            s.setflags(write=False)
            tables[f"h{j}"], tables[f"s{j}"] = h, s
        for name, arr in tables.items():
            object.__setattr__(self, name, arr)


def count_sketch(X, h, s, k) -> np.ndarray:
    """Scatter x_i * s(i) into bucket h(i). X may be one vector or a row batch."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    out = np.zeros((X2.shape[0], k))
    # np.add.at accumulates repeated bucket indices (fancy-index += would not)
    np.add.at(out.T, h, (X2 * s).T)
    return out[0] if single else out


def sketch_features(X, cfg: SketchConfig) -> np.ndarray:
    """theta for every row of X (n x d) -> n x k."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != cfg.d:
        raise DimensionMismatch(f"features have d={X.shape[1]}, sketch expects d={cfg.d}")
    c1 = count_sketch(X, cfg.h1, cfg.s1, cfg.k)
    c2 = count_sketch(X, cfg.h2, cfg.s2, cfg.k)
    # real inputs: rfft/irfft compute the same circular convolution without
    # the imaginary residue of a complex round trip
    return np.fft.irfft(np.fft.rfft(c1, axis=1) * np.fft.rfft(c2, axis=1), n=cfg.k, axis=1)


def sketch_feature(x, cfg: SketchConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("sketch_feature takes a single vector")
    return sketch_features(x[None, :], cfg)[0]


def aggregate_second_order_sketched(fs: FeatureSet, alpha, cfg: SketchConfig) -> Descriptor:
    a = resolve_weights(alpha, fs.n)
    return Descriptor(a @ sketch_features(fs.data, cfg), "second-sketch")
