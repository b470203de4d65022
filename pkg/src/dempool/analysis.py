"""Contribution statistics of features against normalized matrix powers,
their spectral bounds, and spectrum summaries of different aggregators."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .aggregate import second_order_matrix
from .errors import ZeroDescriptor
from .features import FeatureSet
from .kernel import second_order_kernel
from .sinkhorn import SinkhornConfig, solve_gamma_democratic
from .spectral import eig_sym

BOUND_TOL = 1e-9
IDENTITY_RTOL = 1e-8


@dataclass
class ContributionReport:
    p: float
    rho: float
    contributions: np.ndarray
    sum_C: float
    mu: float
    M: float
    m: float
    variance: float
    r_max: float
    r_min: float
    eigenvalues: np.ndarray
    bounds: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.contributions.size

    def to_dict(self):
        out = asdict(self)
        out["contributions"] = self.contributions.tolist()
        out["eigenvalues"] = self.eigenvalues.tolist()
        out["checks"] = [asdict(c) for c in verify_bounds(self)]
        return out

    def to_csv(self, radii=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "contribution"] + (["squared_radius"] if radii is not None else []))
        for i, c in enumerate(self.contributions):
            w.writerow([i, repr(float(c))] + ([repr(float(radii[i]))] if radii is not None else []))
        return buf.getvalue()


def contributions_vs_power(fs: FeatureSet, p: float) -> ContributionReport:
    """C(x) = vec(xx^T) . vec(A^p) / ||A^p||_F for the sum-pooled A.

    Evaluated as the quadratic form x^T A^p x / rho, O(n d^2).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"power must lie in (0, 1], got {p}")
    A = second_order_matrix(fs)
    dec = eig_sym(A)
    lam = dec.eigenvalues
    Ap = dec.reconstruct(lambda v: v**p)
    rho = float(np.linalg.norm(Ap))
    if rho == 0:
        raise ZeroDescriptor("aggregate matrix is zero")

    X = fs.data
    C = np.einsum("ij,jk,ik->i", X, Ap, X) / rho
    radii = np.einsum("ij,ij->i", X, X)
    r_max, r_min = float(radii.max()), float(radii.min())
    M, m, mu = float(C.max()), float(C.min()), float(C.mean())
    lam1_p, lamd_p = lam[0] ** p, lam[-1] ** p

    bounds = {
        "rho_spectral": float(np.sqrt(np.sum(lam ** (2 * p)))),
        "sum_identity": float(np.sum(lam ** (1 + p)) / rho),
        "M_upper": float(r_max * lam1_p / rho),
        "m_lower": float(r_min * lamd_p / rho),
        "var_bhatia_davis": (M - mu) * (mu - m),
        "var_popoviciu": (M - m) ** 2 / 4,
        "var_spectral": float(r_max**2 * lam1_p**2 / (4 * rho**2)),
    }
    return ContributionReport(
        p=float(p), rho=rho, contributions=C, sum_C=float(C.sum()), mu=mu, M=M, m=m,
        variance=float(C.var()), r_max=r_max, r_min=r_min, eigenvalues=lam, bounds=bounds,
    )


@dataclass(frozen=True)
class BoundCheck:
    name: str
    holds: bool
    slack: float


def _identity(name, measured, expected):
    err = abs(measured - expected)
    return BoundCheck(name, bool(err <= IDENTITY_RTOL * abs(expected)), -err)


def _ineq(name, slack):
    return BoundCheck(name, bool(slack >= -BOUND_TOL), float(slack))


def verify_bounds(report: ContributionReport) -> list[BoundCheck]:
    """Evaluate every identity and inequality in ``report.bounds``.

    Inequalities carry slack = bound - measured (holds when slack >= -1e-9).
    The two identities carry slack = -|measured - expected| and hold at 1e-8
    relative error.
    """
    b = report.bounds
    bd = _ineq("var_bhatia_davis", b["var_bhatia_davis"] - report.variance)
    pop = _ineq("var_popoviciu", b["var_popoviciu"] - b["var_bhatia_davis"])
    spec = _ineq("var_spectral", b["var_spectral"] - b["var_popoviciu"])
    chain_slack = min(bd.slack, pop.slack, spec.slack)
    return [
        _identity("rho_identity", report.rho, b["rho_spectral"]),
        _identity("sum_identity", report.sum_C, b["sum_identity"]),
        _ineq("M_upper", b["M_upper"] - report.M),
        _ineq("m_lower", report.m - b["m_lower"]),
        bd,
        pop,
        spec,
        _ineq("variance_chain", chain_slack),
    ]


@dataclass
class SpectrumReport:
    method: str
    spectrum: np.ndarray   # eigenvalues normalized to unit l1 mass, descending
    entropy: float
    normalized_variance: float
    top_mass: float
    residual: float | None = None

    def to_dict(self):
        out = asdict(self)
        out["spectrum"] = self.spectrum.tolist()
        return out


def spectral_entropy(q):
    q = np.asarray(q, dtype=np.float64)
    nz = q[q > 0]
    return float(-np.sum(nz * np.log(nz)))


def normalize_spectrum(lam):
    total = float(np.sum(lam))
    if total <= 0:
        raise ZeroDescriptor("aggregate has an all-zero spectrum")
    return np.asarray(lam) / total


def spectrum_report(fs: FeatureSet, method="sum", p=None, gamma=None,
                    sinkhorn_cfg: SinkhornConfig | None = None) -> SpectrumReport:
    """Normalized spectrum of the aggregate built by ``method``.

    method is "sum" (A), "power" (A^p) or "gamma" (A_alpha = sum alpha_i x_i x_i^T
    with gamma-democratic alpha). Flatness is summarized by the Shannon
    entropy and by var(q) / mean(q)^2 (zero for a flat spectrum).
    """
    residual = None
    if method == "sum":
        lam = eig_sym(second_order_matrix(fs)).eigenvalues
        label = "sum"
    elif method == "power":
        if p is None or not 0.0 < p <= 1.0:
            raise ValueError(f"power must lie in (0, 1], got {p}")
        lam = eig_sym(second_order_matrix(fs)).eigenvalues ** p
        label = f"power({p:g})"
    elif method == "gamma":
        if gamma is None:
            raise ValueError("gamma-democratic spectrum needs gamma")
        cfg = sinkhorn_cfg or SinkhornConfig()
        cfg = SinkhornConfig(cfg.tau, cfg.iterations, gamma, cfg.zero_division_epsilon)
        w = solve_gamma_democratic(second_order_kernel(fs), cfg)
        residual = w.residual
        lam = eig_sym(second_order_matrix(fs, w)).eigenvalues
        label = f"gamma({gamma:g})"
    else:
        raise ValueError(f"unknown aggregation method {method!r}")
    q = normalize_spectrum(lam)
    nvar = float(np.var(q) / np.mean(q) ** 2)
    return SpectrumReport(label, q, spectral_entropy(q), nvar, float(q[0]), residual)


def democratic_contributions(fs: FeatureSet, cfg: SinkhornConfig):
    """Contributions alpha_i x_i^T A_alpha x_i / ||A_alpha||_F under
    gamma-democratic weights, with summary statistics."""
    w = solve_gamma_democratic(second_order_kernel(fs), cfg)
    A = second_order_matrix(fs, w)
    rho = float(np.linalg.norm(A))
    if rho == 0:
        raise ZeroDescriptor("aggregate matrix is zero")
    X = fs.data
    C = w.alpha * np.einsum("ij,jk,ik->i", X, A, X) / rho
    return {
        "gamma": cfg.gamma,
        "residual": w.residual,
        "iterations": w.iterations_run,
        "contributions": C.tolist(),
        "mean": float(C.mean()),
        "max": float(C.max()),
        "min": float(C.min()),
        "variance": float(C.var()),
        "relative_spread": float((C.max() - C.min()) / C.mean()),
    }
