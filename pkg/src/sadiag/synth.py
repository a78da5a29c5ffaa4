"""Synthetic bearing vibration generator with a controllable shaft speed.

Produces labeled segments for four machine conditions: NO (healthy), IF
(inner race), OF (outer race) and BF (ball). The healthy signal is the
shaft-frequency sinusoid with two harmonics in Gaussian noise. Fault
signals add a periodic train of exponentially decaying resonance bursts
at the fault characteristic frequency (a fault-specific multiple of the
shaft frequency), with per-impact timing jitter, fault-specific amplitude
modulation and ring frequency, and impact energy and ring frequency that
grow with speed. Changing the speed therefore moves every spectral line,
shifts the excited resonance, and rescales the impact energy: two speeds
give two genuinely shifted feature distributions with the same label
structure, which is the situation the adaptation pipeline targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConfigurationError
from .signal_io import SegmentCollection

FAULT_CLASSES = {"NO": 0, "IF": 1, "OF": 2, "BF": 3}
CLASS_NAMES = {v: k for k, v in FAULT_CLASSES.items()}

DEFAULT_MULTIPLIERS = {"OF": 3.58, "IF": 5.42, "BF": 4.71}

# Shaft harmonic amplitudes (fundamental, 2x, 3x).
_HARMONIC_AMPS = (1.0, 0.5, 0.25)
# Relative impact strength per fault type.
_IMPACT_AMPS = {"IF": 1.0, "OF": 1.3, "BF": 0.75}
# Amplitude modulation of the impact train: (depth, shaft-frequency multiple).
# IF impacts pass through the load zone once per revolution; BF impacts are
# modulated at the cage rate; OF impacts are stationary.
_MODULATION = {"IF": (0.8, 1.0), "OF": (0.0, 1.0), "BF": (0.8, 0.4)}
# Each fault location couples to a slightly different structural mode, so the
# burst ring frequency is resonance_hz scaled per fault type.
_RESONANCE_SCALE = {"IF": 1.085, "OF": 0.915, "BF": 1.0}
# Impact energy grows with speed: gain = (rpm / 1000) ** _SPEED_EXPONENT.
_SPEED_EXPONENT = 1.5
# Centrifugal preload stiffens the rolling contact at speed, pulling the
# excited mode upward: ring frequency scales with a weak speed power.
_RESONANCE_SPEED_EXPONENT = 0.075
_REFERENCE_RPM = 1000.0
# Per-impact relative amplitude scatter.
_IMPACT_SCATTER = 0.1
# Per-impact timing jitter as a fraction of the impact period.
_JITTER_FRACTION = 0.01


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one generated condition."""

    shaft_speed_rpm: float
    fault_type: str
    fault_freq_multipliers: dict = field(default_factory=lambda: dict(DEFAULT_MULTIPLIERS))
    resonance_hz: float = 3000.0
    decay_rate: float = 800.0
    noise_std: float = 0.1
    sampling_rate_hz: float = 8192.0
    segment_len: int = 4096
    rng_seed: int = 0

    def __post_init__(self):
        if self.shaft_speed_rpm <= 0.0:
            raise ConfigurationError(f"shaft speed must be positive, got {self.shaft_speed_rpm}")
        if self.fault_type not in FAULT_CLASSES:
            raise ConfigurationError(
                f"unknown fault type {self.fault_type!r}, expected one of {sorted(FAULT_CLASSES)}"
            )
        missing = {"IF", "OF", "BF"} - set(self.fault_freq_multipliers)
        if missing:
            raise ConfigurationError(f"missing fault frequency multipliers for {sorted(missing)}")
        if any(v <= 0.0 for v in self.fault_freq_multipliers.values()):
            raise ConfigurationError("fault frequency multipliers must be positive")
        if self.resonance_hz <= 0.0 or self.decay_rate <= 0.0:
            raise ConfigurationError("resonance frequency and decay rate must be positive")
        if self.noise_std < 0.0:
            raise ConfigurationError(f"noise level must be non-negative, got {self.noise_std}")
        if self.sampling_rate_hz <= 0.0:
            raise ConfigurationError("sampling rate must be positive")
        if self.segment_len < 2:
            raise ConfigurationError(f"segment length must be >= 2, got {self.segment_len}")
        if self.rng_seed < 0:
            raise ConfigurationError(f"rng seed must be non-negative, got {self.rng_seed}")
        nyquist = self.sampling_rate_hz / 2.0
        speed_ratio = self.shaft_speed_rpm / _REFERENCE_RPM
        ring_max = (self.resonance_hz * max(_RESONANCE_SCALE.values())
                    * speed_ratio ** _RESONANCE_SPEED_EXPONENT)
        if ring_max >= nyquist:
            raise ConfigurationError(
                f"resonance {self.resonance_hz} Hz rings at or above Nyquist {nyquist} Hz"
            )
        if self.fault_type != "NO":
            f_fault = self.fault_freq_hz
            if f_fault >= nyquist:
                raise ConfigurationError(
                    f"fault frequency {f_fault:.1f} Hz is at or above Nyquist {nyquist} Hz"
                )
            impacts = self.segment_len / self.sampling_rate_hz * f_fault
            if impacts < 5.0:
                raise ConfigurationError(
                    f"segment covers only {impacts:.1f} impacts of the {f_fault:.1f} Hz "
                    "fault; need at least 5"
                )

    @property
    def shaft_freq_hz(self) -> float:
        return self.shaft_speed_rpm / 60.0

    @property
    def fault_freq_hz(self) -> float:
        if self.fault_type == "NO":
            return 0.0
        return self.fault_freq_multipliers[self.fault_type] * self.shaft_freq_hz

    @property
    def class_id(self) -> int:
        return FAULT_CLASSES[self.fault_type]


def _segment(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    length = spec.segment_len
    fs = spec.sampling_rate_hz
    t = np.arange(length) / fs
    speed_gain = (spec.shaft_speed_rpm / _REFERENCE_RPM) ** _SPEED_EXPONENT
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(_HARMONIC_AMPS))
    x = np.zeros(length)
    for h, (amp, phase) in enumerate(zip(_HARMONIC_AMPS, phases), start=1):
        x += amp * np.sin(2.0 * np.pi * h * spec.shaft_freq_hz * t + phase)
    if spec.fault_type != "NO":
        x += _impact_train(spec, rng, t, speed_gain)
    if spec.noise_std > 0.0:
        x += spec.noise_std * rng.standard_normal(length)
    return x


def _impact_train(spec: SynthSpec, rng: np.random.Generator, t: np.ndarray,
                  speed_gain: float) -> np.ndarray:
    fs = spec.sampling_rate_hz
    length = spec.segment_len
    duration = length / fs
    period = 1.0 / spec.fault_freq_hz
    base_amp = _IMPACT_AMPS[spec.fault_type] * speed_gain
    depth, mod_multiple = _MODULATION[spec.fault_type]
    mod_freq = mod_multiple * spec.shaft_freq_hz
    mod_phase = rng.uniform(0.0, 2.0 * np.pi)
    # Ring long enough for the burst to decay to 1e-4 of its peak.
    ring_len = min(length, int(math.ceil(fs * math.log(1e4) / spec.decay_rate)))
    tau = np.arange(ring_len) / fs
    speed_ratio = spec.shaft_speed_rpm / _REFERENCE_RPM
    ring_hz = (spec.resonance_hz * _RESONANCE_SCALE[spec.fault_type]
               * speed_ratio ** _RESONANCE_SPEED_EXPONENT)
    ring = np.exp(-spec.decay_rate * tau) * np.sin(2.0 * np.pi * ring_hz * tau)
    n_impacts = int(duration / period) + 2
    offsets = rng.uniform(-_JITTER_FRACTION, _JITTER_FRACTION, size=n_impacts) * period
    times = rng.uniform(0.0, period) + np.arange(n_impacts) * period + offsets
    scatter = 1.0 + _IMPACT_SCATTER * rng.standard_normal(n_impacts)
    out = np.zeros(length)
    for t_k, sc in zip(times, scatter):
        start = int(math.ceil(t_k * fs))
        if start >= length:
            continue
        modulation = 1.0 + depth * np.cos(2.0 * np.pi * mod_freq * t_k + mod_phase)
        amp = base_amp * sc * modulation
        stop = min(start + ring_len, length)
        out[start:stop] += amp * ring[: stop - start]
    return out


def generate(spec: SynthSpec, count: int) -> SegmentCollection:
    """Generate ``count`` segments of one condition.

    Each segment draws from its own seed stream derived from
    (rng_seed, class id, segment index), so results are independent of
    generation order and reproducible segment by segment.
    """
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    segments = np.empty((count, spec.segment_len))
    for k in range(count):
        rng = np.random.default_rng(
            np.random.SeedSequence([spec.rng_seed, spec.class_id, k])
        )
        segments[k] = _segment(spec, rng)
    return SegmentCollection(
        segments=segments,
        label_ids=np.full(count, spec.class_id, dtype=np.int64),
        label_names=dict(CLASS_NAMES),
        sampling_rate_hz=spec.sampling_rate_hz,
    )


def generate_condition_set(spec: SynthSpec, per_class: int) -> SegmentCollection:
    """Generate a balanced 4-class dataset sharing ``spec``'s shaft speed."""
    if per_class < 1:
        raise ConfigurationError(f"per_class must be >= 1, got {per_class}")
    parts = [
        generate(replace(spec, fault_type=fault), per_class)
        for fault in sorted(FAULT_CLASSES, key=FAULT_CLASSES.get)
    ]
    return SegmentCollection(
        segments=np.vstack([p.segments for p in parts]),
        label_ids=np.concatenate([p.label_ids for p in parts]),
        label_names=dict(CLASS_NAMES),
        sampling_rate_hz=spec.sampling_rate_hz,
    )


def generate_domain_pair(base_spec: SynthSpec, source_rpm: float,
                         target_rpm: float, per_class: int):
    """Two balanced datasets differing only in shaft speed.

    The domains draw from disjoint seed streams, so a no-shift pair
    (equal speeds) gives identically distributed but distinct samples.
    """
    source_seed, target_seed = (
        int(s) for s in np.random.SeedSequence(base_spec.rng_seed).generate_state(2)
    )
    source = generate_condition_set(
        replace(base_spec, shaft_speed_rpm=source_rpm, rng_seed=source_seed), per_class
    )
    target = generate_condition_set(
        replace(base_spec, shaft_speed_rpm=target_rpm, rng_seed=target_seed), per_class
    )
    return source, target
