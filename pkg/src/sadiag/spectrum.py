"""One-sided FFT amplitude features with per-row z-normalization.

Every signal segment becomes one feature vector: the segment is zero-padded
to a power-of-two FFT length, the one-sided magnitude spectrum is taken
(scaled by the original segment length), and the resulting vector is
z-normalized to zero mean and unit standard deviation. A 12000-point segment
padded to 16384 yields 8193 amplitudes.

The amplitude scale factor is irrelevant downstream: z-normalization removes
any affine factor, which the test suite asserts as a property.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import ConfigurationError, DegenerateInputError, ParseError
from .signal_io import SegmentCollection

_CACHE_MAGIC = b"SDFM"


@dataclass(frozen=True)
class FeatureMatrix:
    """n x D matrix of feature vectors, one row per sample.

    ``label_ids`` is None for unlabeled (target-domain) data.
    """

    rows: np.ndarray
    label_ids: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        object.__setattr__(self, "rows", rows)
        if rows.ndim != 2:
            raise ConfigurationError("rows must be a 2-D array (n, D)")
        if self.label_ids is not None:
            ids = np.asarray(self.label_ids, dtype=np.int64)
            object.__setattr__(self, "label_ids", ids)
            if ids.shape != (rows.shape[0],):
                raise ConfigurationError(
                    f"expected {rows.shape[0]} labels, got shape {ids.shape}"
                )

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim_D(self) -> int:
        return self.rows.shape[1]

    def without_labels(self) -> "FeatureMatrix":
        return FeatureMatrix(rows=self.rows, label_ids=None, meta=dict(self.meta))


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    if n < 1:
        raise ConfigurationError(f"length must be positive, got {n}")
    return 1 << (n - 1).bit_length()


def fft_amplitudes(segment: np.ndarray, fft_len: int | None = None) -> np.ndarray:
    """One-sided FFT magnitude spectrum of a real signal segment.

    The segment (length L) is zero-padded to ``fft_len`` (a power of two,
    default the smallest power of two >= L) and the first fft_len/2 + 1
    magnitudes are returned, scaled by 1/L.
    """
    segment = np.asarray(segment, dtype=np.float64)
    if segment.ndim != 1 or segment.size == 0:
        raise ConfigurationError("segment must be a nonempty 1-D array")
    length = segment.size
    if fft_len is None:
        fft_len = next_pow2(length)
    if fft_len < length:
        raise ConfigurationError(f"fft_len {fft_len} is shorter than the segment ({length})")
    if fft_len & (fft_len - 1):
        raise ConfigurationError(f"fft_len must be a power of two, got {fft_len}")
    spectrum = np.fft.rfft(segment, n=fft_len)
    return np.abs(spectrum) / length


def z_normalize(vector: np.ndarray) -> np.ndarray:
    """Rescale to zero mean and unit population standard deviation."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.size < 2:
        raise ConfigurationError("z_normalize needs a 1-D vector of length >= 2")
    mean = vector.mean()
    std = vector.std()  # population (ddof=0)
    if std < 1e-15:
        raise DegenerateInputError("constant vector has no z-normalization")
    return (vector - mean) / std


def featurize(segments: SegmentCollection | np.ndarray,
              fft_len: int | None = None) -> FeatureMatrix:
    """Turn segments into a FeatureMatrix of z-normalized FFT amplitudes.

    Accepts a labeled SegmentCollection (labels are carried through) or a
    bare (n, L) array. All segments must share one length.
    """
    if isinstance(segments, SegmentCollection):
        data = segments.segments
        label_ids = segments.label_ids
        meta: dict[str, Any] = {
            "sampling_rate_hz": segments.sampling_rate_hz,
            "label_names": {int(k): v for k, v in segments.label_names.items()},
        }
    else:
        data = np.asarray(segments, dtype=np.float64)
        label_ids = None
        meta = {}
    if data.ndim != 2:
        raise ConfigurationError("segments must form a 2-D array of equal-length rows")
    length = data.shape[1]
    if fft_len is None:
        fft_len = next_pow2(length)
    meta["fft_len"] = fft_len
    meta["segment_len"] = length

    rows = np.empty((data.shape[0], fft_len // 2 + 1), dtype=np.float64)
    for i in range(data.shape[0]):
        try:
            rows[i] = z_normalize(fft_amplitudes(data[i], fft_len))
        except DegenerateInputError as exc:
            raise DegenerateInputError(f"segment {i}: {exc}") from None
    return FeatureMatrix(rows=rows, label_ids=label_ids, meta=meta)


def save_features(features: FeatureMatrix, path: str | Path) -> None:
    """Write a FeatureMatrix cache file.

    Layout: magic, uint64 n, uint64 D, uint8 label flag, then n*D float64
    row-major values, then n int64 label ids when the flag is set (all
    little-endian).
    """
    n, dim = features.rows.shape
    has_labels = features.label_ids is not None
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<QQB", n, dim, 1 if has_labels else 0))
        fh.write(np.ascontiguousarray(features.rows, dtype="<f8").tobytes())
        if has_labels:
            fh.write(np.ascontiguousarray(features.label_ids, dtype="<i8").tobytes())


def load_features(path: str | Path) -> FeatureMatrix:
    """Read a FeatureMatrix cache file written by :func:`save_features`."""
    data = Path(path).read_bytes()
    if data[:4] != _CACHE_MAGIC:
        raise ParseError(f"{path}: bad magic at byte 0, not a feature cache file")
    try:
        n, dim, flag = struct.unpack_from("<QQB", data, 4)
    except struct.error:
        raise ParseError(f"{path}: truncated header at byte {len(data)}") from None
    offset = 4 + 17
    need = offset + n * dim * 8 + (n * 8 if flag else 0)
    if len(data) != need:
        raise ParseError(f"{path}: expected {need} bytes, file has {len(data)}")
    rows = np.frombuffer(data, dtype="<f8", count=n * dim, offset=offset).reshape(n, dim)
    label_ids = None
    if flag:
        label_ids = np.frombuffer(data, dtype="<i8", count=n, offset=offset + n * dim * 8)
    return FeatureMatrix(rows=rows.copy(),
                         label_ids=None if label_ids is None else label_ids.copy())
