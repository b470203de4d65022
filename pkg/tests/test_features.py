import numpy as np
import pytest

from dempool.errors import (
    DimensionMismatch,
    InputIOError,
    InvalidSpec,
    NonFiniteEntry,
    ParseError,
    ZeroNormRow,
)
from dempool.features import (
    FeatureSet,
    SyntheticSpec,
    burst_direction,
    class_directions,
    encode_raw_f32,
    generate_synthetic,
    load_features,
    save_features,
)


def test_load_csv_small(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,0\n1,1\n0,2\n")
    fs = load_features(p, "csv")
    assert (fs.n, fs.d) == (3, 2)
    np.testing.assert_array_equal(fs.data, [[1, 0], [1, 1], [0, 2]])


def test_load_csv_nan_rejected(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,0\nnan,1\n")
    with pytest.raises(NonFiniteEntry):
        load_features(p, "csv")


def test_load_csv_ragged(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,0\n1,1,2\n")
    with pytest.raises(DimensionMismatch):
        load_features(p, "csv")


def test_load_csv_garbage(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,x\n")
    with pytest.raises(ParseError):
        load_features(p, "csv")


def test_missing_file(tmp_path):
    with pytest.raises(InputIOError):
        load_features(tmp_path / "nope.csv", "csv")


def test_zero_row_policy(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("1,0\n0,0\n0,2\n")
    with pytest.raises(ZeroNormRow):
        load_features(p, "csv")
    fs = load_features(p, "csv", drop_zero_rows=True)
    np.testing.assert_array_equal(fs.data, [[1, 0], [0, 2]])


def test_raw_f32_roundtrip_bit_exact(tmp_path, rng):
    data = rng.standard_normal((784, 512)).astype(np.float32)
    p = tmp_path / "f.f32"
    save_features(p, FeatureSet(data), "raw-f32")
    raw = p.read_bytes()
    assert raw[:4] == b"DPF1"
    assert int.from_bytes(raw[4:8], "little") == 784
    assert int.from_bytes(raw[8:12], "little") == 512
    assert raw[12:16] == b"\0\0\0\0"
    assert len(raw) == 16 + 4 * 784 * 512
    fs = load_features(p, "raw-f32")
    assert (fs.n, fs.d) == (784, 512)
    assert np.array_equal(fs.data.astype(np.float32), data)
    assert fs.data.astype(np.float32).tobytes() == data.tobytes()


def test_raw_f32_bad_magic_and_size(tmp_path):
    p = tmp_path / "bad.f32"
    p.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(ParseError):
        load_features(p, "raw-f32")
    good = encode_raw_f32(np.ones((2, 3)))
    p.write_bytes(good[:-4])
    with pytest.raises(DimensionMismatch):
        load_features(p, "raw-f32")


def test_csv_roundtrip(tmp_path, rng):
    data = rng.standard_normal((20, 7))
    p = tmp_path / "f.csv"
    save_features(p, FeatureSet(data), "csv")
    np.testing.assert_allclose(load_features(p, "csv").data, data, atol=1e-6, rtol=0)


def test_feature_set_immutable():
    fs = FeatureSet([[1.0, 2.0]])
    with pytest.raises(ValueError):
        fs.data[0, 0] = 3.0


def test_from_feature_map():
    fmap = np.arange(1, 2 * 3 * 4 + 1, dtype=float).reshape(2, 3, 4)
    fs = FeatureSet.from_feature_map(fmap)
    assert (fs.n, fs.d) == (6, 4)
    assert fs.source_shape == (2, 3, 4)


def test_synthetic_deterministic():
    spec = SyntheticSpec(n=50, d=16, seed=7)
    assert np.array_equal(generate_synthetic(spec).data, generate_synthetic(spec).data)
    other = generate_synthetic(SyntheticSpec(n=50, d=16, seed=8))
    assert not np.array_equal(generate_synthetic(spec).data, other.data)


@pytest.mark.parametrize("d", [8, 32, 512])
def test_synthetic_burst_rows_collinear(d):
    spec = SyntheticSpec(n=100, d=d, burst_fraction=0.5, seed=3)
    X = generate_synthetic(spec).data
    u = burst_direction(spec)
    cos = X @ u / np.linalg.norm(X, axis=1)
    assert np.sum(cos >= 0.99) >= 50


def test_synthetic_class_subspaces_orthogonal():
    Q0 = class_directions(32, 0)
    Q1 = class_directions(32, 1)
    np.testing.assert_allclose(Q0.T @ Q1, 0, atol=1e-12)
    np.testing.assert_allclose(Q0.T @ Q0, np.eye(2), atol=1e-12)


def test_synthetic_signal_lives_in_class_subspace():
    spec = SyntheticSpec(n=40, d=16, burst_fraction=0.0, signal_fraction=1.0,
                         noise_scale=1e-9, class_id=2, seed=1)
    X = generate_synthetic(spec).data
    Q = class_directions(16, 2)
    resid = X - (X @ Q) @ Q.T
    assert np.max(np.abs(resid)) < 1e-6


@pytest.mark.parametrize("kwargs", [
    dict(n=0, d=4),
    dict(n=4, d=4, burst_fraction=0.7, signal_fraction=0.5),
    dict(n=4, d=4, burst_fraction=0.0, signal_fraction=0.0, noise_scale=0.0),
    dict(n=4, d=4, burst_fraction=-0.1),
])
def test_synthetic_degenerate_specs(kwargs):
    with pytest.raises(InvalidSpec):
        generate_synthetic(SyntheticSpec(**kwargs))
