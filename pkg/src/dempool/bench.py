"""Wall-clock comparison of Sinkhorn weighting against the Newton-Schulz
matrix square root, plus per-iteration scaling sweeps.

Everything runs with BLAS pinned to one thread so neither side gets more
cores than the other. Timings cover compute only; inputs are generated in
memory beforehand.
"""

from __future__ import annotations

import time
from statistics import median

import numpy as np
from threadpoolctl import threadpool_limits

from .aggregate import second_order_matrix
from .features import FeatureSet
from .kernel import second_order_kernel
from .sinkhorn import gamma_target, sinkhorn_iterations
from .spectral import newton_schulz_sqrt

SINKHORN_SWEEP_N = (2048, 2896, 4096, 5792, 8192)
NEWTON_SWEEP_D = (256, 362, 512, 724, 1024)


def time_median(fn, repeats=5, warmup=1):
    """Median wall time of ``fn()``; warm-up calls are discarded."""
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return median(times)


def random_features(n, d, seed=0):
    rng = np.random.default_rng(seed)
    return FeatureSet(rng.standard_normal((n, d)))


def fit_exponent(sizes, times):
    """Slope of log(time) against log(size)."""
    return float(np.polyfit(np.log(sizes), np.log(times), 1)[0])


def compare_phases(n=784, d=512, iters=10, newton_iters=20, repeats=5, seed=0):
    fs = random_features(n, d, seed)
    K = second_order_kernel(fs).values
    target = gamma_target(K, 0.0)
    A = second_order_matrix(fs)

    kernel_t = time_median(lambda: second_order_kernel(fs), repeats)
    sinkhorn_t = time_median(lambda: sinkhorn_iterations(K, target, 0.5, iters), repeats)
    cov_t = time_median(lambda: second_order_matrix(fs), repeats)
    newton_t = time_median(lambda: newton_schulz_sqrt(A, newton_iters), repeats)
    return {
        "n": n,
        "d": d,
        "sinkhorn_iters": iters,
        "newton_iters": newton_iters,
        "repeats": repeats,
        "kernel_seconds": kernel_t,
        "sinkhorn_iteration_seconds": sinkhorn_t,
        "sinkhorn_total_seconds": kernel_t + sinkhorn_t,
        "covariance_seconds": cov_t,
        "newton_seconds": newton_t,
        "newton_total_seconds": cov_t + newton_t,
        "iteration_phase_ratio": newton_t / sinkhorn_t,
        "total_ratio": (cov_t + newton_t) / (kernel_t + sinkhorn_t),
    }


def _interleaved_per_iteration(jobs, repeats):
    """jobs: list of (fn, iterations). Timing rounds visit every size in turn
    so slow drifts in machine load hit all sizes alike; median per size."""
    for fn, _ in jobs:
        fn()
    samples = [[] for _ in jobs]
    for _ in range(max(1, repeats)):
        for i, (fn, T) in enumerate(jobs):
            t0 = time.perf_counter()
            fn()
            samples[i].append((time.perf_counter() - t0) / T)
    return [median(s) for s in samples]


def sinkhorn_sweep(ns=SINKHORN_SWEEP_N, d=32, repeats=5, seed=0, work=1e9, min_iters=20):
    """Per-iteration Sinkhorn time for each n. The iteration count is chosen
    so each timed call visits roughly ``work`` kernel entries."""
    jobs = []
    for n in ns:
        K = second_order_kernel(random_features(n, d, seed)).values
        target = gamma_target(K, 0.0)
        T = max(min_iters, int(work / (n * n)))
        jobs.append(((lambda K=K, target=target, T=T: sinkhorn_iterations(K, target, 0.5, T)), T))
    per_iter = _interleaved_per_iteration(jobs, repeats)
    return {"n": list(ns), "seconds_per_iteration": per_iter, "exponent": fit_exponent(ns, per_iter)}


def newton_sweep(ds=NEWTON_SWEEP_D, iters=3, repeats=3, seed=0):
    jobs = []
    for d in ds:
        A = second_order_matrix(random_features(2 * d, d, seed))
        jobs.append(((lambda A=A: newton_schulz_sqrt(A, iters)), iters))
    per_iter = _interleaved_per_iteration(jobs, repeats)
    return {"d": list(ds), "seconds_per_iteration": per_iter, "exponent": fit_exponent(ds, per_iter)}


def run_bench(n=784, d=512, iters=10, newton_iters=20, repeats=5, seed=0, sweep=True,
              sweep_ns=SINKHORN_SWEEP_N, sweep_ds=NEWTON_SWEEP_D, threads=1):
    with threadpool_limits(limits=threads):
        report = {"threads": threads, "comparison": compare_phases(n, d, iters, newton_iters, repeats, seed)}
        if sweep:
            report["sinkhorn_scaling"] = sinkhorn_sweep(sweep_ns, seed=seed)
            report["newton_scaling"] = newton_sweep(sweep_ds, seed=seed)
    return report
