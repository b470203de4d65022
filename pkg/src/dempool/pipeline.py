"""Feature set -> global descriptor, composing kernel, solver, aggregation
and post-processing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .aggregate import (
    Descriptor,
    aggregate_first_order,
    aggregate_second_order,
    postprocess,
    second_order_matrix,
)
from .features import FeatureSet
from .kernel import clamp_negatives, raw_kernel, second_order_kernel
from .sinkhorn import SinkhornConfig, solve_gamma_democratic
from .sketch import SketchConfig, aggregate_second_order_sketched
from .spectral import matrix_power, newton_schulz_sqrt


@dataclass(frozen=True)
class EncodeOptions:
    order: int = 2
    encoder: str = "explicit"          # explicit | sketch
    pooling: str = "democratic"        # democratic | sum | power
    gamma: float = 0.5
    tau: float = 0.5
    iters: int = 10
    power: float = 0.5
    sqrt_method: str = "eig"           # eig | newton (power pooling with p=0.5)
    newton_iters: int = 20
    sketch_dim: int = 8192
    sketch_seed: int = 0
    postprocess: bool = True

    def validate(self):
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.encoder not in ("explicit", "sketch"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.pooling not in ("democratic", "sum", "power"):
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.order == 1 and self.encoder == "sketch":
            raise ValueError("sketching applies to second-order features only")
        if self.pooling == "power":
            if self.order != 2 or self.encoder != "explicit":
                # a matrix power does not live in the span of the encoded
                # features, so it has no sketched counterpart
                raise ValueError("power pooling needs explicit second-order features")
            if not 0.0 < self.power <= 1.0:
                raise ValueError(f"power must lie in (0, 1], got {self.power}")
            if self.sqrt_method == "newton" and self.power != 0.5:
                raise ValueError("newton method only computes the square root (power 0.5)")


def encode(fs: FeatureSet, opts: EncodeOptions = EncodeOptions(), sketch_cfg: SketchConfig | None = None):
    """Return (descriptor, info) where info holds solver diagnostics and timings."""
    opts.validate()
    info = {"n": fs.n, "d": fs.d}
    t0 = time.perf_counter()

    alpha = None
    if opts.pooling == "democratic":
        K = second_order_kernel(fs) if opts.order == 2 else clamp_negatives(raw_kernel(fs))
        cfg = SinkhornConfig(tau=opts.tau, iterations=opts.iters, gamma=opts.gamma)
        w = solve_gamma_democratic(K, cfg)
        alpha = w.alpha
        info.update(residual=w.residual, iterations=w.iterations_run, gamma=opts.gamma, tau=opts.tau)

    if opts.pooling == "power":
        A = second_order_matrix(fs)
        if opts.sqrt_method == "newton":
            Z = newton_schulz_sqrt(A, opts.newton_iters)
        elif opts.sqrt_method == "eig":
            Z = matrix_power(A, opts.power)
        else:
            raise ValueError(f"unknown square-root method {opts.sqrt_method!r}")
        desc = Descriptor(Z.ravel(), "second-explicit")
        info.update(power=opts.power, sqrt_method=opts.sqrt_method)
    elif opts.order == 1:
        desc = aggregate_first_order(fs, alpha)
    elif opts.encoder == "explicit":
        desc = aggregate_second_order(fs, alpha)
    else:
        cfg = sketch_cfg or SketchConfig(fs.d, opts.sketch_dim, opts.sketch_seed)
        desc = aggregate_second_order_sketched(fs, alpha, cfg)
        info.update(sketch_dim=cfg.k, sketch_seed=cfg.seed)

    if opts.postprocess:
        desc = postprocess(desc)
    info["seconds"] = time.perf_counter() - t0
    info["encoding"] = desc.encoding
    info["length"] = int(desc.values.size)
    return desc, info


def encode_many(feature_sets, opts: EncodeOptions = EncodeOptions()) -> np.ndarray:
    """Stack descriptors of several images; one shared sketch config per call."""
    sketch_cfg = None
    out = []
    for fs in feature_sets:
        if opts.encoder == "sketch" and sketch_cfg is None:
            sketch_cfg = SketchConfig(fs.d, opts.sketch_dim, opts.sketch_seed)
        out.append(encode(fs, opts, sketch_cfg)[0].values)
    return np.vstack(out)
