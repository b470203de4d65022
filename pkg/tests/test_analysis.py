import numpy as np
import pytest

from dempool.analysis import (
    contributions_vs_power,
    democratic_contributions,
    spectral_entropy,
    spectrum_report,
    verify_bounds,
)
from dempool.features import FeatureSet, SyntheticSpec, generate_synthetic
from dempool.sinkhorn import SinkhornConfig

from conftest import random_fs

P_GRID = [round(0.1 * i, 1) for i in range(1, 11)]


def test_orthonormal_identity_aggregate():
    d = 5
    rep = contributions_vs_power(FeatureSet(np.eye(d)), 1.0)
    assert rep.rho == pytest.approx(np.sqrt(d), rel=1e-14)
    np.testing.assert_allclose(rep.contributions, 1 / np.sqrt(d), rtol=1e-14)


def test_contributions_explicit_oracle(rng):
    fs = random_fs(rng, 7, 3)
    for p in (0.3, 0.5, 1.0):
        rep = contributions_vs_power(fs, p)
        A = fs.data.T @ fs.data
        lam, U = np.linalg.eigh(A)
        Ap = (U * np.clip(lam, 0, None) ** p) @ U.T
        Ahat = Ap.ravel() / np.linalg.norm(Ap.ravel())
        explicit = np.array([np.outer(x, x).ravel() @ Ahat for x in fs.data])
        np.testing.assert_allclose(rep.contributions, explicit, atol=1e-10, rtol=0)


def test_identities_random(rng):
    for _ in range(10):
        fs = random_fs(rng, int(rng.integers(1, 40)), int(rng.integers(1, 20)))
        for p in (0.2, 0.5, 0.9):
            rep = contributions_vs_power(fs, p)
            lam = np.linalg.eigvalsh(fs.data.T @ fs.data).clip(0)
            assert rep.rho == pytest.approx(np.sqrt(np.sum(lam ** (2 * p))), rel=1e-8)
            assert rep.sum_C == pytest.approx(np.sum(lam ** (1 + p)) / rep.rho, rel=1e-8)


def test_bounds_hold_random(rng):
    for _ in range(30):
        fs = random_fs(rng, int(rng.integers(1, 64)), int(rng.integers(1, 64)))
        p = float(rng.choice(P_GRID))
        checks = verify_bounds(contributions_vs_power(fs, p))
        assert [c.name for c in checks if not c.holds] == []


def test_single_feature_report():
    x = np.array([1.0, -2.0, 2.0])
    rep = contributions_vs_power(FeatureSet([x]), 0.5)
    r = x @ x
    expected = r * r**0.5 / rep.rho
    assert rep.M == pytest.approx(expected, rel=1e-12)
    assert rep.m == pytest.approx(expected, rel=1e-12)
    assert rep.mu == pytest.approx(expected, rel=1e-12)
    assert rep.variance == pytest.approx(0, abs=1e-20)
    checks = {c.name: c for c in verify_bounds(rep)}
    assert all(c.holds for c in checks.values())
    assert checks["var_bhatia_davis"].slack == pytest.approx(0, abs=1e-12)


def test_ordering_invariants(rng):
    rep = contributions_vs_power(random_fs(rng, 30, 8), 0.5)
    assert rep.m <= rep.mu <= rep.M
    assert rep.variance >= 0
    assert rep.r_min <= rep.r_max
    assert rep.rho > 0


def test_upper_bound_tightness_on_bursts_is_reported():
    rep = contributions_vs_power(generate_synthetic(SyntheticSpec(n=64, d=32, seed=1)), 0.5)
    tightness = (rep.bounds["M_upper"] - rep.M) / rep.bounds["M_upper"]
    assert tightness >= -1e-12  # never violated; tightness itself is only reported


def test_to_dict_roundtrip_fields(rng):
    rep = contributions_vs_power(random_fs(rng, 6, 3), 0.5)
    d = rep.to_dict()
    assert len(d["contributions"]) == 6
    assert {c["name"] for c in d["checks"]} >= {"M_upper", "m_lower", "var_spectral"}
    assert rep.to_csv().count("\n") == 7


def test_spectrum_sum_orthonormal():
    rep = spectrum_report(FeatureSet(np.eye(6)), "sum")
    np.testing.assert_allclose(rep.spectrum, 1 / 6)
    assert rep.entropy == pytest.approx(np.log(6), rel=1e-12)
    assert rep.normalized_variance == pytest.approx(0, abs=1e-20)


def test_power_flattens_spectrum(rng):
    for _ in range(10):
        fs = random_fs(rng, 40, 10)
        h = [spectrum_report(fs, "power", p=p).entropy for p in P_GRID]
        assert all(a >= b - 1e-12 for a, b in zip(h, h[1:]))


def test_entropy_helper():
    assert spectral_entropy([1.0, 0.0]) == 0
    assert spectral_entropy([0.5, 0.5]) == pytest.approx(np.log(2))


def test_democratic_reduces_top_mass_on_bursts():
    wins = 0
    for seed in range(20):
        fs = generate_synthetic(SyntheticSpec(n=64, d=32, seed=seed))
        wins += spectrum_report(fs, "gamma", gamma=0.0).top_mass < spectrum_report(fs, "sum").top_mass
    assert wins >= 18


def test_spectrum_bad_method(rng):
    with pytest.raises(ValueError):
        spectrum_report(random_fs(rng, 3, 2), "max")


def test_democratic_contributions_flat(rng):
    out = democratic_contributions(random_fs(rng, 20, 5), SinkhornConfig(gamma=0.0, iterations=60))
    assert out["relative_spread"] <= 0.01
    assert out["residual"] <= 1e-3


def test_variance_equalizes_as_p_shrinks():
    ok = 0
    seeds = range(20)
    for seed in seeds:
        fs = generate_synthetic(SyntheticSpec(n=64, d=16, seed=seed))
        v = [contributions_vs_power(fs, p).variance for p in (1.0, 0.5, 0.25)]
        ok += v[0] >= v[1] >= v[2]
    assert ok >= 0.9 * len(seeds)
