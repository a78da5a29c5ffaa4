"""Loading, segmenting and labeling of raw vibration recordings.

A dataset is described by a JSON manifest::

    {
      "name": "L0",
      "labels": [{"id": 0, "name": "NO"}, {"id": 1, "name": "IF"}, ...],
      "entries": [
        {"path": "no.csv", "format": "csv", "label_id": 0,
         "segment_len": 12000, "segment_count": 100},
        ...
      ]
    }

Relative entry paths are resolved against the manifest's own directory.
Supported file formats are ``csv`` (one numeric value per line, an optional
single header line) and ``raw_f64_le`` (consecutive little-endian float64).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .exceptions import (
    ConfigurationError,
    EmptyInputError,
    LengthError,
    ParseError,
)

FORMATS = ("csv", "raw_f64_le")


@dataclass(frozen=True)
class RawRecord:
    """One channel of raw acceleration readings."""

    samples: np.ndarray
    sampling_rate_hz: float
    channel_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ConfigurationError("RawRecord.samples must be a nonempty 1-D sequence")
        if not self.sampling_rate_hz > 0:
            raise ConfigurationError(
                f"sampling_rate_hz must be positive, got {self.sampling_rate_hz}"
            )


@dataclass(frozen=True)
class FaultLabel:
    """Health-condition class, e.g. (0, 'NO') or (2, 'OF')."""

    class_id: int
    class_name: str

    def __post_init__(self):
        if self.class_id < 0:
            raise ConfigurationError(f"class_id must be non-negative, got {self.class_id}")


@dataclass(frozen=True)
class ManifestEntry:
    file_path: str
    format: str
    label: FaultLabel
    segment_len: int
    segment_count: int

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigurationError(
                f"unknown format {self.format!r}, expected one of {FORMATS}"
            )
        if self.segment_len < 1 or self.segment_count < 1:
            raise ConfigurationError("segment_len and segment_count must be positive")


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    entries: tuple[ManifestEntry, ...]
    sampling_rate_hz: float = 1.0
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        names: dict[str, int] = {}
        for entry in self.entries:
            label = entry.label
            if names.setdefault(label.class_name, label.class_id) != label.class_id:
                raise ConfigurationError(
                    f"label name {label.class_name!r} mapped to multiple ids"
                )


@dataclass(frozen=True)
class SegmentCollection:
    """Fixed-length signal segments, each tagged with one label id."""

    segments: np.ndarray  # (n, L) float64
    label_ids: np.ndarray  # (n,) int64
    label_names: Mapping[int, str]
    sampling_rate_hz: float = 1.0

    def __post_init__(self):
        segments = np.asarray(self.segments, dtype=np.float64)
        label_ids = np.asarray(self.label_ids, dtype=np.int64)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "label_ids", label_ids)
        if segments.ndim != 2:
            raise ConfigurationError("segments must be a 2-D array (n, L)")
        if label_ids.shape != (segments.shape[0],):
            raise ConfigurationError(
                f"expected {segments.shape[0]} labels, got {label_ids.shape}"
            )

    def __len__(self) -> int:
        return self.segments.shape[0]


def load_record(path: str | Path, format: str, sampling_rate_hz: float = 1.0,
                channel_id: str = "") -> RawRecord:
    """Read all readings from ``path`` in file order.

    ``csv`` files hold one real value per line; a single leading header line
    (first non-blank character not part of a number) is skipped.
    ``raw_f64_le`` files hold consecutive little-endian 8-byte floats.
    """
    path = Path(path)
    if format == "csv":
        samples = _read_csv(path)
    elif format == "raw_f64_le":
        samples = _read_raw_f64_le(path)
    else:
        raise ConfigurationError(f"unknown format {format!r}, expected one of {FORMATS}")
    if samples.size == 0:
        raise EmptyInputError(f"{path}: file contains no samples")
    return RawRecord(samples=samples, sampling_rate_hz=sampling_rate_hz,
                     channel_id=channel_id or path.name)


def _read_csv(path: Path) -> np.ndarray:
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                # One header line is tolerated at the top of the file.
                if lineno == 1:
                    continue
                raise ParseError(f"{path}: cannot parse line {lineno}: {text!r}") from None
    return np.asarray(values, dtype=np.float64)


def _read_raw_f64_le(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) % 8 != 0:
        raise ParseError(
            f"{path}: trailing {len(data) % 8} bytes at offset {len(data) - len(data) % 8}"
            " are not a full float64"
        )
    count = len(data) // 8
    return np.asarray(struct.unpack(f"<{count}d", data), dtype=np.float64)


def segment(record: RawRecord, segment_len: int, segment_count: int) -> np.ndarray:
    """Cut ``segment_count`` non-overlapping windows of ``segment_len`` samples.

    Windows are consecutive from the start of the record; samples beyond
    ``segment_len * segment_count`` are discarded.
    """
    if segment_len < 1 or segment_count < 1:
        raise ConfigurationError("segment_len and segment_count must be positive")
    needed = segment_len * segment_count
    available = record.samples.size
    if needed > available:
        raise LengthError(
            f"need {needed} samples ({segment_count} x {segment_len}), "
            f"record has {available}"
        )
    return record.samples[:needed].reshape(segment_count, segment_len).copy()


def build_dataset(manifest: DatasetManifest) -> SegmentCollection:
    """Load and segment every manifest entry, in manifest order.

    Deterministic: the same manifest always yields a bit-identical collection.
    """
    blocks: list[np.ndarray] = []
    label_ids: list[int] = []
    label_names: dict[int, str] = {}
    for entry in manifest.entries:
        path = Path(entry.file_path)
        if not path.is_absolute():
            path = manifest.base_dir / path
        try:
            record = load_record(path, entry.format, manifest.sampling_rate_hz)
            segments = segment(record, entry.segment_len, entry.segment_count)
        except (OSError, ParseError, LengthError, ConfigurationError) as exc:
            raise type(exc)(f"{entry.file_path}: {exc}") from exc
        blocks.append(segments)
        label_ids.extend([entry.label.class_id] * entry.segment_count)
        label_names[entry.label.class_id] = entry.label.class_name
    if not blocks:
        raise ConfigurationError(f"manifest {manifest.name!r} has no entries")
    return SegmentCollection(
        segments=np.vstack(blocks),
        label_ids=np.asarray(label_ids, dtype=np.int64),
        label_names=label_names,
        sampling_rate_hz=manifest.sampling_rate_hz,
    )


def read_manifest(path: str | Path) -> DatasetManifest:
    """Parse a JSON manifest file (see module docstring for the schema)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    try:
        labels = {int(l["id"]): FaultLabel(int(l["id"]), str(l["name"]))
                  for l in doc["labels"]}
        entries = tuple(
            ManifestEntry(
                file_path=str(e["path"]),
                format=str(e["format"]),
                label=labels[int(e["label_id"])],
                segment_len=int(e["segment_len"]),
                segment_count=int(e["segment_count"]),
            )
            for e in doc["entries"]
        )
        return DatasetManifest(
            name=str(doc["name"]),
            entries=entries,
            sampling_rate_hz=float(doc.get("sampling_rate_hz", 1.0)),
            base_dir=path.parent,
        )
    except KeyError as exc:
        raise ParseError(f"{path}: manifest is missing field {exc}") from None


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    labels = {e.label.class_id: e.label.class_name for e in manifest.entries}
    doc = {
        "name": manifest.name,
        "sampling_rate_hz": manifest.sampling_rate_hz,
        "labels": [{"id": i, "name": labels[i]} for i in sorted(labels)],
        "entries": [
            {
                "path": e.file_path,
                "format": e.format,
                "label_id": e.label.class_id,
                "segment_len": e.segment_len,
                "segment_count": e.segment_count,
            }
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_raw_f64_le(samples: np.ndarray, path: str | Path) -> None:
    """Persist a signal in the raw little-endian float64 format."""
    np.asarray(samples, dtype="<f8").tofile(path)


def write_dataset(collection: SegmentCollection, out_dir: str | Path,
                  name: str) -> Path:
    """Persist a segment collection as one raw file per class plus a
    manifest, ordered by class id. ``build_dataset`` on the written
    manifest recovers every segment bit-exactly (grouped by class).
    Returns the manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for class_id in sorted(set(int(v) for v in collection.label_ids)):
        rows = collection.segments[collection.label_ids == class_id]
        class_name = collection.label_names.get(class_id, f"class{class_id}")
        file_name = f"{class_name}.bin"
        write_raw_f64_le(rows.ravel(), out_dir / file_name)
        entries.append(ManifestEntry(
            file_path=file_name,
            format="raw_f64_le",
            label=FaultLabel(class_id, class_name),
            segment_len=collection.segments.shape[1],
            segment_count=rows.shape[0],
        ))
    manifest = DatasetManifest(
        name=name, entries=tuple(entries),
        sampling_rate_hz=collection.sampling_rate_hz, base_dir=out_dir,
    )
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path
