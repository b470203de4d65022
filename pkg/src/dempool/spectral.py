"""Eigendecomposition-based matrix powers, Newton-Schulz square root, and a
least-squares test for membership in the span of feature outer products."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DimensionMismatch, NonSymmetricMatrix, ZeroDescriptor
from .features import FeatureSet


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray   # descending, clamped at zero
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self, fn=None):
        lam = self.eigenvalues if fn is None else fn(self.eigenvalues)
        U = self.eigenvectors
        out = (U * lam) @ U.T
        return 0.5 * (out + out.T)


def _check_symmetric(A, tol=1e-10):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.max(np.abs(A)), 1.0) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > tol * scale:
        raise NonSymmetricMatrix("matrix is not symmetric")
    return A


def eig_sym(A) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric PSD matrix, eigenvalues descending.

    Eigenvalues at or below d * eps * lambda_max are roundoff (negative ones
    certainly are) and are set to exactly zero, so fractional powers map the
    null space to zero instead of amplifying noise.
    """
    A = _check_symmetric(A)
    try:
        lam, U = np.linalg.eigh(0.5 * (A + A.T))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    if lam.size:
        floor = A.shape[0] * np.finfo(np.float64).eps * max(lam[0], 0.0)
        lam = np.where(lam > floor, lam, 0.0)
    return SpectralDecomposition(lam, U[:, order])


def _check_power(p):
    if not 0.0 < p <= 1.0:
        raise ValueError(f"power must lie in (0, 1], got {p}")


def matrix_power(A, p: float, decomposition: SpectralDecomposition | None = None) -> np.ndarray:
    """U diag(lambda^p) U^T. p=1 returns A itself."""
    _check_power(p)
    if p == 1.0:
        return np.array(_check_symmetric(A), dtype=np.float64)
    dec = decomposition if decomposition is not None else eig_sym(A)
    return dec.reconstruct(lambda lam: lam**p)


def newton_schulz_sqrt(A, iters: int = 20) -> np.ndarray:
    """Coupled Newton-Schulz iteration for A^(1/2).

    A is first divided by c = min(trace, max absolute row sum). Both are upper
    bounds on the largest eigenvalue of a PSD matrix, so the scaled spectrum
    lies in (0, 1] and ||I - A/c|| < 1 for positive definite A. Taking the
    smaller bound speeds convergence and makes the identity an exact fixed
    point. The result is scaled back by sqrt(c).
    """
    A = _check_symmetric(A)
    tr = float(np.trace(A))
    if tr <= 0:
        raise ZeroDescriptor("Newton-Schulz square root of a zero (or non-PSD) matrix")
    c = min(tr, float(np.max(np.sum(np.abs(A), axis=1))))
    d = A.shape[0]
    eye = np.eye(d)
    Y = A / c
    Z = eye
    for _ in range(int(iters)):
        T = 0.5 * (3.0 * eye - Z @ Y)
        Y = Y @ T
        Z = T @ Z
    return Y * np.sqrt(c)


def sqrt_matrix(A, method="eig", newton_iters=20):
    if method == "eig":
        return matrix_power(A, 0.5)
    if method == "newton":
        return newton_schulz_sqrt(A, newton_iters)
    raise ValueError(f"unknown square-root method {method!r}")


class SpanCheck(NamedTuple):
    inside: bool
    residual: float  # Frobenius norm of the least-squares misfit
    coefficients: np.ndarray


def in_span_of_outer_products(M, fs: FeatureSet, tol=1e-8) -> SpanCheck:
    """Least-squares fit of M by sum_i c_i x_i x_i^T; inside means the misfit
    is at most tol * ||M||_F."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (fs.d, fs.d):
        raise DimensionMismatch(f"matrix shape {M.shape} does not match d={fs.d}")
    X = fs.data
    # columns are vec(x_i x_i^T)
    basis = np.einsum("ij,ik->jki", X, X).reshape(fs.d * fs.d, fs.n)
    coef, *_ = np.linalg.lstsq(basis, M.ravel(), rcond=None)
    residual = float(np.linalg.norm(basis @ coef - M.ravel()))
    return SpanCheck(bool(residual <= tol * np.linalg.norm(M)), residual, coef)
