import json
import struct

import numpy as np
import pytest

from sadiag.exceptions import (
    ConfigurationError,
    EmptyInputError,
    LengthError,
    ParseError,
)
from sadiag.signal_io import (
    DatasetManifest,
    FaultLabel,
    ManifestEntry,
    RawRecord,
    SegmentCollection,
    build_dataset,
    load_record,
    read_manifest,
    segment,
    write_dataset,
    write_manifest,
    write_raw_f64_le,
)


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_csv_reader_values_and_header(tmp_path):
    path = tmp_path / "sig.csv"
    write_csv(path, ["amplitude", "1.5", "-2.25", "", "3e-2"])
    record = load_record(path, "csv", sampling_rate_hz=100.0)
    np.testing.assert_array_equal(record.samples, [1.5, -2.25, 0.03])
    assert record.sampling_rate_hz == 100.0
    assert record.channel_id == "sig.csv"


def test_csv_reader_rejects_garbage_with_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    write_csv(path, ["1.0", "2.0", "oops", "4.0"])
    with pytest.raises(ParseError, match="line 3"):
        load_record(path, "csv")


def test_csv_reader_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(EmptyInputError):
        load_record(path, "csv")
    path.write_text("header only\n", encoding="utf-8")
    with pytest.raises(EmptyInputError):
        load_record(path, "csv")


def test_raw_reader_round_trip(tmp_path):
    values = np.array([0.0, -1.5, 2.0 ** -40, 1e300])
    path = tmp_path / "sig.bin"
    write_raw_f64_le(values, path)
    record = load_record(path, "raw_f64_le", channel_id="ch0")
    np.testing.assert_array_equal(record.samples, values)
    assert record.channel_id == "ch0"


def test_raw_reader_rejects_trailing_bytes(tmp_path):
    path = tmp_path / "sig.bin"
    path.write_bytes(struct.pack("<2d", 1.0, 2.0) + b"xyz")
    with pytest.raises(ParseError, match="trailing 3 bytes"):
        load_record(path, "raw_f64_le")


def test_load_record_unknown_format(tmp_path):
    path = tmp_path / "sig.dat"
    path.write_text("1.0\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="unknown format"):
        load_record(path, "wav")


def test_record_validation():
    with pytest.raises(ConfigurationError):
        RawRecord(samples=np.zeros((2, 2)), sampling_rate_hz=1.0)
    with pytest.raises(ConfigurationError):
        RawRecord(samples=np.array([1.0]), sampling_rate_hz=0.0)
    with pytest.raises(ConfigurationError):
        FaultLabel(class_id=-1, class_name="NO")


def test_segment_windows_and_discard():
    record = RawRecord(samples=np.arange(10.0), sampling_rate_hz=1.0)
    windows = segment(record, segment_len=3, segment_count=3)
    np.testing.assert_array_equal(windows, np.arange(9.0).reshape(3, 3))
    windows[0, 0] = 99.0
    assert record.samples[0] == 0.0  # segments are copies


def test_segment_length_error():
    record = RawRecord(samples=np.arange(10.0), sampling_rate_hz=1.0)
    with pytest.raises(LengthError, match="need 12 samples"):
        segment(record, segment_len=4, segment_count=3)
    with pytest.raises(ConfigurationError):
        segment(record, segment_len=0, segment_count=3)


def sample_manifest(tmp_path, segment_len=4):
    rng = np.random.default_rng(0)
    for name in ("no", "of"):
        write_raw_f64_le(rng.normal(size=3 * segment_len), tmp_path / f"{name}.bin")
    entries = (
        ManifestEntry("no.bin", "raw_f64_le", FaultLabel(0, "NO"), segment_len, 3),
        ManifestEntry("of.bin", "raw_f64_le", FaultLabel(2, "OF"), segment_len, 2),
    )
    return DatasetManifest(name="rig", entries=entries, sampling_rate_hz=8192.0,
                           base_dir=tmp_path)


def test_manifest_round_trip(tmp_path):
    manifest = sample_manifest(tmp_path)
    path = tmp_path / "manifest.json"
    write_manifest(manifest, path)
    loaded = read_manifest(path)
    assert loaded.name == manifest.name
    assert loaded.sampling_rate_hz == manifest.sampling_rate_hz
    assert loaded.entries == manifest.entries
    assert loaded.base_dir == tmp_path


def test_manifest_missing_field(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"name": "x", "labels": []}), encoding="utf-8")
    with pytest.raises(ParseError, match="missing field"):
        read_manifest(path)


def test_manifest_invalid_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError, match="invalid JSON"):
        read_manifest(path)


def test_manifest_duplicate_label_name():
    entries = (
        ManifestEntry("a.bin", "raw_f64_le", FaultLabel(0, "NO"), 4, 1),
        ManifestEntry("b.bin", "raw_f64_le", FaultLabel(1, "NO"), 4, 1),
    )
    with pytest.raises(ConfigurationError, match="multiple ids"):
        DatasetManifest(name="bad", entries=entries)


def test_manifest_entry_validation():
    with pytest.raises(ConfigurationError, match="unknown format"):
        ManifestEntry("a.bin", "flac", FaultLabel(0, "NO"), 4, 1)
    with pytest.raises(ConfigurationError):
        ManifestEntry("a.bin", "csv", FaultLabel(0, "NO"), 0, 1)


def test_build_dataset_order_and_labels(tmp_path):
    manifest = sample_manifest(tmp_path)
    collection = build_dataset(manifest)
    assert collection.segments.shape == (5, 4)
    np.testing.assert_array_equal(collection.label_ids, [0, 0, 0, 2, 2])
    assert collection.label_names == {0: "NO", 2: "OF"}
    assert collection.sampling_rate_hz == 8192.0
    raw = np.fromfile(tmp_path / "no.bin")
    np.testing.assert_array_equal(collection.segments[:3].ravel(), raw)


def test_build_dataset_resolves_relative_paths(tmp_path, monkeypatch):
    (tmp_path / "data").mkdir()
    manifest = sample_manifest(tmp_path / "data")
    path = tmp_path / "data" / "manifest.json"
    write_manifest(manifest, path)
    monkeypatch.chdir(tmp_path)  # cwd must not matter
    collection = build_dataset(read_manifest(path))
    assert len(collection) == 5


def test_build_dataset_prefixes_errors_with_entry_path(tmp_path):
    entries = (
        ManifestEntry("short.bin", "raw_f64_le", FaultLabel(0, "NO"), 100, 5),
    )
    write_raw_f64_le(np.zeros(10), tmp_path / "short.bin")
    manifest = DatasetManifest(name="rig", entries=entries, base_dir=tmp_path)
    with pytest.raises(LengthError, match="short.bin"):
        build_dataset(manifest)


def test_write_dataset_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    collection = SegmentCollection(
        segments=rng.normal(size=(6, 8)),
        label_ids=np.array([1, 0, 1, 0, 1, 0]),
        label_names={0: "NO", 1: "IF"},
        sampling_rate_hz=4096.0,
    )
    manifest_path = write_dataset(collection, tmp_path / "out", "rig")
    loaded = build_dataset(read_manifest(manifest_path))
    assert loaded.label_names == collection.label_names
    assert loaded.sampling_rate_hz == 4096.0
    # write_dataset groups by class id; compare per class, bit-exact
    for class_id in (0, 1):
        np.testing.assert_array_equal(
            loaded.segments[loaded.label_ids == class_id],
            collection.segments[collection.label_ids == class_id],
        )


def test_write_dataset_fallback_class_names(tmp_path):
    collection = SegmentCollection(
        segments=np.ones((2, 4)),
        label_ids=np.array([7, 7]),
        label_names={},
    )
    manifest_path = write_dataset(collection, tmp_path, "rig")
    loaded = read_manifest(manifest_path)
    assert loaded.entries[0].label == FaultLabel(7, "class7")
    assert (tmp_path / "class7.bin").exists()


def test_segment_collection_validation():
    with pytest.raises(ConfigurationError, match="2-D"):
        SegmentCollection(segments=np.zeros(4), label_ids=np.zeros(4, dtype=int),
                          label_names={})
    with pytest.raises(ConfigurationError, match="labels"):
        SegmentCollection(segments=np.zeros((3, 2)), label_ids=np.array([0]),
                          label_names={})
