import numpy as np
import pytest

from sadiag.exceptions import ConfigurationError
from sadiag.signal_io import build_dataset, read_manifest, write_dataset
from sadiag.spectrum import fft_amplitudes
from sadiag.synth import (
    CLASS_NAMES,
    FAULT_CLASSES,
    SynthSpec,
    generate,
    generate_condition_set,
    generate_domain_pair,
)

from oracles import count_envelope_impulses, envelope_periodicity_hz


def test_generation_is_deterministic_and_seed_sensitive():
    spec = SynthSpec(shaft_speed_rpm=1200, fault_type="IF", rng_seed=42)
    a = generate(spec, 3)
    b = generate(spec, 3)
    np.testing.assert_array_equal(a.segments, b.segments)
    other = generate(SynthSpec(shaft_speed_rpm=1200, fault_type="IF", rng_seed=43), 3)
    assert not np.array_equal(a.segments, other.segments)
    np.testing.assert_array_equal(a.label_ids, other.label_ids)


def test_segments_independent_of_batch_size():
    spec = SynthSpec(shaft_speed_rpm=960, fault_type="OF", rng_seed=7)
    small = generate(spec, 2)
    large = generate(spec, 5)
    np.testing.assert_array_equal(small.segments, large.segments[:2])


def test_counts_labels_and_balance():
    spec = SynthSpec(shaft_speed_rpm=1080, fault_type="NO", rng_seed=0)
    collection = generate_condition_set(spec, 4)
    assert len(collection) == 16
    ids, counts = np.unique(collection.label_ids, return_counts=True)
    np.testing.assert_array_equal(ids, [0, 1, 2, 3])
    np.testing.assert_array_equal(counts, [4, 4, 4, 4])
    assert collection.label_names == CLASS_NAMES
    assert FAULT_CLASSES == {"NO": 0, "IF": 1, "OF": 2, "BF": 3}
    with pytest.raises(ConfigurationError):
        generate(spec, 0)


def test_healthy_spectrum_peaks_at_shaft_frequency():
    spec = SynthSpec(shaft_speed_rpm=960, fault_type="NO", noise_std=0.0, rng_seed=1)
    collection = generate(spec, 3)
    shaft_hz = 960 / 60.0
    for segment in collection.segments:
        spectrum = fft_amplitudes(segment)
        fft_len = 2 * (spectrum.size - 1)
        shaft_bin = round(shaft_hz * fft_len / spec.sampling_rate_hz)
        assert np.argmax(spectrum) == shaft_bin


def test_outer_race_envelope_periodicity_oracle():
    # Demodulate the resonance band, as envelope analysis does, so shaft
    # harmonics do not dominate the autocorrelation.
    spec = SynthSpec(shaft_speed_rpm=1200, fault_type="OF", rng_seed=2)
    expected_hz = 3.58 * 1200 / 60.0  # 71.6 Hz
    band = (spec.resonance_hz * 0.6, spec.resonance_hz * 1.3)
    for segment in generate(spec, 3).segments:
        measured = envelope_periodicity_hz(
            segment, spec.sampling_rate_hz,
            min_hz=expected_hz / 2.5, max_hz=expected_hz * 2.5,
            band=band,
        )
        assert measured == pytest.approx(expected_hz, rel=0.03)


def test_faulty_segments_contain_five_impulses():
    for fault in ("IF", "OF", "BF"):
        spec = SynthSpec(shaft_speed_rpm=960, fault_type=fault, rng_seed=3)
        ring_samples = spec.sampling_rate_hz / spec.fault_freq_hz / 2.0
        band = (spec.resonance_hz * 0.6, spec.resonance_hz * 1.3)
        for segment in generate(spec, 3).segments:
            count = count_envelope_impulses(
                segment, threshold=3.0 * spec.noise_std, min_gap=int(ring_samples),
                fs=spec.sampling_rate_hz, band=band,
            )
            assert count >= 5


def test_faulty_band_energy_exceeds_healthy():
    for seed in range(3):
        collections = {
            fault: generate(
                SynthSpec(shaft_speed_rpm=1080, fault_type=fault, rng_seed=seed), 5
            )
            for fault in ("NO", "IF", "OF", "BF")
        }
        spec = SynthSpec(shaft_speed_rpm=1080, fault_type="NO", rng_seed=seed)
        def band_energy(collection):
            spectra = np.vstack([fft_amplitudes(s) for s in collection.segments])
            mean = spectra.mean(axis=0)
            fft_len = 2 * (mean.size - 1)
            hz_per_bin = spec.sampling_rate_hz / fft_len
            lo = int(np.ceil((spec.resonance_hz - 500.0) / hz_per_bin))
            hi = int(np.floor((spec.resonance_hz + 500.0) / hz_per_bin))
            return float((mean[lo:hi + 1] ** 2).sum())
        healthy = band_energy(collections["NO"])
        for fault in ("IF", "OF", "BF"):
            assert band_energy(collections[fault]) > healthy


def test_domain_pair_shapes_and_disjoint_streams():
    base = SynthSpec(shaft_speed_rpm=960, fault_type="NO", rng_seed=0)
    source, target = generate_domain_pair(base, 960, 1320, 5)
    assert len(source) == 20 and len(target) == 20
    np.testing.assert_array_equal(np.unique(source.label_ids), [0, 1, 2, 3])
    np.testing.assert_array_equal(source.label_ids, target.label_ids)
    same_speed_s, same_speed_t = generate_domain_pair(base, 960, 960, 5)
    assert not np.array_equal(same_speed_s.segments, same_speed_t.segments)


def test_spec_validation():
    good = dict(shaft_speed_rpm=960, fault_type="IF")
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "shaft_speed_rpm": 0.0})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "fault_type": "XX"})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "fault_freq_multipliers": {"IF": 5.42}})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "fault_freq_multipliers": {"IF": -1.0, "OF": 3.58, "BF": 4.71}})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "noise_std": -0.1})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "segment_len": 1})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "rng_seed": -1})
    with pytest.raises(ConfigurationError):
        SynthSpec(**{**good, "decay_rate": 0.0})


def test_nyquist_and_impact_coverage_guards():
    with pytest.raises(ConfigurationError):
        SynthSpec(shaft_speed_rpm=960, fault_type="IF", resonance_hz=4000.0)
    with pytest.raises(ConfigurationError):
        SynthSpec(shaft_speed_rpm=960, fault_type="IF",
                  fault_freq_multipliers={"IF": 500.0, "OF": 3.58, "BF": 4.71})
    with pytest.raises(ConfigurationError):
        SynthSpec(shaft_speed_rpm=960, fault_type="OF", segment_len=512)
    SynthSpec(shaft_speed_rpm=960, fault_type="NO", segment_len=512)  # NO has no impacts


def test_persisted_dataset_rebuilds_bit_exactly(tmp_path):
    spec = SynthSpec(shaft_speed_rpm=1320, fault_type="NO", rng_seed=9)
    collection = generate_condition_set(spec, 2)
    manifest_path = write_dataset(collection, tmp_path / "rpm1320", "rpm1320")
    rebuilt = build_dataset(read_manifest(manifest_path))
    np.testing.assert_array_equal(rebuilt.segments, collection.segments)
    np.testing.assert_array_equal(rebuilt.label_ids, collection.label_ids)
    assert rebuilt.label_names == dict(collection.label_names)
    assert rebuilt.sampling_rate_hz == collection.sampling_rate_hz
