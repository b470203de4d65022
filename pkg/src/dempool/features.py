"""Feature sets: the per-image collection of local descriptors, plus file IO
and a seeded synthetic generator that mimics bursty CNN activations."""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InputIOError,
    InvalidSpec,
    NonFiniteEntry,
    ParseError,
    ZeroNormRow,
)

RAW_MAGIC = b"DPF1"
RAW_HEADER = struct.Struct("<4sIII")
DEFAULT_ZERO_NORM_EPS = 1e-12

# Seed of the fixed orthonormal dictionary that class signal directions are
# drawn from. Independent of SyntheticSpec.seed so classes stay comparable
# across images.
_CLASS_BASIS_SEED = 7411


@dataclass(frozen=True)
class FeatureSet:
    """n local features of dimension d, one per row of ``data``.

    Construction validates the invariants (finite entries, every row with
    positive norm). Use :meth:`from_array` to drop zero rows instead of
    rejecting them.
    """

    data: np.ndarray
    source_shape: tuple[int, int, int] | None = None
    zero_norm_eps: float = field(default=DEFAULT_ZERO_NORM_EPS, repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise DimensionMismatch(f"feature data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch(f"need n >= 1 and d >= 1, got shape {arr.shape}")
        bad = ~np.isfinite(arr)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise NonFiniteEntry(f"non-finite entry at row {r}, column {c}")
        norms = np.linalg.norm(arr, axis=1)
        zero = np.flatnonzero(norms <= self.zero_norm_eps)
        if zero.size:
            raise ZeroNormRow(
                f"{zero.size} feature row(s) with zero norm (first at row {zero[0]}); "
                "use drop_zero_rows to discard them"
            )
        if self.source_shape is not None:
            w, h, dd = self.source_shape
            if w * h != arr.shape[0] or dd != arr.shape[1]:
                raise DimensionMismatch(
                    f"source_shape {self.source_shape} inconsistent with data shape {arr.shape}"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, data, drop_zero_rows=False, zero_norm_eps=DEFAULT_ZERO_NORM_EPS,
                   source_shape=None):
        arr = np.asarray(data, dtype=np.float64)
        if drop_zero_rows and arr.ndim == 2 and np.isfinite(arr).all():
            keep = np.linalg.norm(arr, axis=1) > zero_norm_eps
            if not keep.all():
                arr = arr[keep]
                source_shape = None
        return cls(arr, source_shape=source_shape, zero_norm_eps=zero_norm_eps)

    @classmethod
    def from_feature_map(cls, fmap, **kwargs):
        """Flatten a W x H x D activation map into W*H features of dimension D."""
        fmap = np.asarray(fmap)
        if fmap.ndim != 3:
            raise DimensionMismatch(f"feature map must be W x H x D, got shape {fmap.shape}")
        w, h, d = fmap.shape
        return cls.from_array(fmap.reshape(w * h, d), source_shape=(w, h, d), **kwargs)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic bursty feature generator.

    ``burst_fraction`` of the rows are high-norm near-copies of one random
    direction (a burst), ``signal_fraction`` of the rows are combinations of
    the class's own orthonormal directions plus noise, the rest is isotropic
    noise with standard deviation ``noise_scale``.
    """

    n: int
    d: int
    burst_fraction: float = 0.5
    signal_fraction: float = 0.25
    noise_scale: float = 0.3
    seed: int = 0
    class_id: int = 0
    burst_scale: float = 4.0
    signal_scale: float = 1.0
    signal_rank: int = 2
    burst_jitter: float = 0.05

    def validate(self):
        if self.n < 1 or self.d < 1:
            raise InvalidSpec(f"need n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        for name in ("burst_fraction", "signal_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1], got {v}")
        if self.burst_fraction + self.signal_fraction > 1.0 + 1e-12:
            raise InvalidSpec("burst_fraction + signal_fraction must not exceed 1")
        if self.noise_scale < 0 or self.burst_scale <= 0 or self.signal_scale < 0:
            raise InvalidSpec("scales must be non-negative (burst_scale positive)")
        if self.signal_rank < 1:
            raise InvalidSpec("signal_rank must be >= 1")
        if self.class_id < 0:
            raise InvalidSpec("class_id must be non-negative")
        n_burst, n_signal, n_noise = self.row_counts()
        if self.noise_scale == 0 and n_noise > 0:
            raise InvalidSpec("noise_scale=0 with noise rows would produce zero features")
        if self.noise_scale == 0 and self.signal_scale == 0 and n_signal > 0:
            raise InvalidSpec("signal rows would be identically zero")

    def row_counts(self):
        n_burst = int(round(self.burst_fraction * self.n))
        n_signal = min(int(round(self.signal_fraction * self.n)), self.n - n_burst)
        return n_burst, n_signal, self.n - n_burst - n_signal


def class_directions(d, class_id, rank=2):
    """Orthonormal d x rank block of signal directions for ``class_id``.

    Blocks of distinct classes are mutually orthogonal as long as
    (number of classes) * rank <= d; beyond that they wrap around.
    """
    basis, _ = np.linalg.qr(np.random.default_rng(_CLASS_BASIS_SEED + d).standard_normal((d, d)))
    cols = [(class_id * rank + j) % d for j in range(rank)]
    return basis[:, cols]


def burst_direction(spec: SyntheticSpec):
    rng = np.random.default_rng([spec.seed, spec.class_id, 1])
    u = rng.standard_normal(spec.d)
    return u / np.linalg.norm(u)


def generate_synthetic(spec: SyntheticSpec) -> FeatureSet:
    spec.validate()
    n_burst, n_signal, n_noise = spec.row_counts()
    d = spec.d
    rng = np.random.default_rng([spec.seed, spec.class_id])

    u = burst_direction(spec)
    scales = spec.burst_scale * (1.0 + 0.25 * rng.random(n_burst))
    jitter = rng.standard_normal((n_burst, d)) * (spec.burst_jitter / np.sqrt(d))
    burst = scales[:, None] * (u[None, :] + jitter)

    Q = class_directions(d, spec.class_id, spec.signal_rank)
    coef = rng.standard_normal((n_signal, Q.shape[1])) * spec.signal_scale
    signal = coef @ Q.T + spec.noise_scale * rng.standard_normal((n_signal, d))

    noise = spec.noise_scale * rng.standard_normal((n_noise, d))

    data = np.vstack([burst, signal, noise])
    # interleave so row order carries no information about row type
    data = data[rng.permutation(spec.n)]
    return FeatureSet(data)


def _read_bytes(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _parse_csv(text, path):
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            vals = [float(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DimensionMismatch(
                f"{path}:{lineno}: expected {width} columns, found {len(vals)}"
            )
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no feature rows")
    return np.array(rows, dtype=np.float64)


def decode_raw_f32(buf, path="<bytes>"):
    if len(buf) < RAW_HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, n, d, reserved = RAW_HEADER.unpack_from(buf)
    if magic != RAW_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if reserved != 0:
        raise ParseError(f"{path}: reserved header field is {reserved}, expected 0")
    expected = RAW_HEADER.size + 4 * n * d
    if len(buf) != expected:
        raise DimensionMismatch(
            f"{path}: header declares {n}x{d} ({expected} bytes) but file has {len(buf)} bytes"
        )
    return np.frombuffer(buf, dtype="<f4", offset=RAW_HEADER.size).reshape(n, d)


def encode_raw_f32(matrix):
    matrix = np.atleast_2d(np.asarray(matrix))
    n, d = matrix.shape
    return RAW_HEADER.pack(RAW_MAGIC, n, d, 0) + np.ascontiguousarray(matrix, dtype="<f4").tobytes()


def read_matrix(path, fmt):
    buf = _read_bytes(path)
    if fmt == "csv":
        try:
            text = buf.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{path}: not an ASCII CSV file") from exc
        return _parse_csv(text, path)
    if fmt == "raw-f32":
        return decode_raw_f32(buf, path).astype(np.float64)
    raise ParseError(f"unknown feature format {fmt!r}")


def load_features(path, fmt="csv", drop_zero_rows=False, zero_norm_eps=DEFAULT_ZERO_NORM_EPS):
    """Read a feature file; row order is preserved."""
    data = read_matrix(path, fmt)
    return FeatureSet.from_array(data, drop_zero_rows=drop_zero_rows, zero_norm_eps=zero_norm_eps)


def format_csv(matrix, precision=17):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    fmt = f"%.{precision}g"
    return "".join(",".join(fmt % v for v in row) + "\n" for row in matrix)


def write_atomic(path, payload: bytes):
    """Write ``payload`` to ``path`` via a temp file so failures leave no partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_matrix(path, matrix, fmt="csv", precision=17):
    if fmt == "csv":
        payload = format_csv(matrix, precision).encode("ascii")
    elif fmt == "raw-f32":
        payload = encode_raw_f32(matrix)
    else:
        raise ParseError(f"unknown matrix format {fmt!r}")
    write_atomic(path, payload)


def save_features(path, fs: FeatureSet, fmt="csv", precision=17):
    save_matrix(path, fs.data, fmt, precision)
