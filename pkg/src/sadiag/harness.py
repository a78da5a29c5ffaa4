"""Experiment orchestration: run adaptation methods over domain pairs.

A run takes two or more labeled domains (loaded from manifests or
generated synthetically), executes the requested methods on every ordered
(source, target) pair, repeats the stochastic stages with derived seeds,
and aggregates accuracies, confusion matrices and domain-divergence
estimates into a machine-readable report.

Target labels are quarantined: adaptation and training see a label-free
view of the target features, and labels re-enter only in the scoring
step. Methods:

    baseline1   1-NN on raw features
    baseline2   1-NN in a joint source+target subspace (90% variance)
    svm_na      linear-kernel SVM on raw features, cross-validated C
    nn_sa       1-NN on the aligned-subspace similarity matrix
    svm_sa      SVM on the aligned-subspace kernel, cross-validated C
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import classifiers, divergence, signal_io, subspace, synth
from .classifiers import CVConfig
from .exceptions import (
    ConfigurationError,
    DiagnosisError,
    ScoringError,
)
from .spectrum import FeatureMatrix, featurize
from .subspace import DimPolicy

METHODS = ("baseline1", "baseline2", "svm_na", "nn_sa", "svm_sa")
DETERMINISTIC_METHODS = frozenset({"baseline1", "baseline2", "nn_sa"})
REPORT_SCHEMA = "sadiag-report-v1"
BASELINE2_VARIANCE = 0.9
ASYMMETRY_NOTE_THRESHOLD = 1e-6

CSV_COLUMNS = (
    "source", "target", "method", "mean_accuracy", "std_accuracy",
    "subspace_dim", "chosen_c", "retained_d",
    "hdh_raw_mean", "hdh_raw_std", "hdh_aligned_mean", "hdh_aligned_std",
    "wall_time_s",
)


@dataclass(frozen=True)
class DomainSpec:
    """One domain: either a dataset manifest on disk or a synthetic recipe.

    Synthetic recipes are dicts with ``shaft_speed_rpm`` and ``per_class``
    plus any optional generator field (noise_std, segment_len, ...).
    """

    name: str
    manifest: str | None = None
    synth: dict | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("domain name must be nonempty")
        if (self.manifest is None) == (self.synth is None):
            raise ConfigurationError(
                f"domain {self.name!r}: give exactly one of manifest or synth"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs besides the data itself."""

    domains: tuple = ()
    methods: tuple = METHODS
    repeats: int = 20
    dim: DimPolicy = DimPolicy.fixed(30)
    cv: CVConfig = CVConfig()
    hdh_repeats: int = 10
    rng_seed: int = 0
    workers: int = 1
    fft_len: int | None = None
    output_dir: str = "."
    format: str = "json"

    def __post_init__(self):
        methods = tuple(self.methods)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "domains", tuple(self.domains))
        if not methods:
            raise ConfigurationError("at least one method is required")
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ConfigurationError(f"unknown methods {unknown}, expected subset of {METHODS}")
        if len(set(methods)) != len(methods):
            raise ConfigurationError("duplicate method names")
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be >= 1, got {self.repeats}")
        if self.hdh_repeats < 1:
            raise ConfigurationError(f"hdh_repeats must be >= 1, got {self.hdh_repeats}")
        if self.rng_seed < 0:
            raise ConfigurationError(f"rng_seed must be non-negative, got {self.rng_seed}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if self.format not in ("json", "csv"):
            raise ConfigurationError(f"format must be json or csv, got {self.format!r}")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate domain names in {names}")


_CONFIG_KEYS = {
    "domains", "methods", "repeats", "dim", "cv", "hdh_repeats",
    "rng_seed", "workers", "fft_len", "output_dir", "format",
}
_CV_KEYS = {"c_grid", "folds"}
_DOMAIN_KEYS = {"name", "manifest", "synth"}


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from parsed JSON; unknown keys are rejected."""
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
    kwargs: dict = {}
    if "domains" in doc:
        domains = []
        for entry in doc["domains"]:
            extra = set(entry) - _DOMAIN_KEYS
            if extra:
                raise ConfigurationError(f"unknown domain keys {sorted(extra)}")
            domains.append(DomainSpec(
                name=str(entry.get("name", "")),
                manifest=entry.get("manifest"),
                synth=entry.get("synth"),
            ))
        kwargs["domains"] = tuple(domains)
    if "methods" in doc:
        kwargs["methods"] = tuple(doc["methods"])
    if "dim" in doc:
        kwargs["dim"] = DimPolicy.parse(str(doc["dim"]))
    if "cv" in doc:
        extra = set(doc["cv"]) - _CV_KEYS
        if extra:
            raise ConfigurationError(f"unknown cv keys {sorted(extra)}")
        kwargs["cv"] = CVConfig(
            c_grid=tuple(doc["cv"].get("c_grid", classifiers.DEFAULT_C_GRID)),
            folds=int(doc["cv"].get("folds", 5)),
        )
    for key in ("repeats", "hdh_repeats", "rng_seed", "workers"):
        if key in doc:
            kwargs[key] = int(doc[key])
    if "fft_len" in doc and doc["fft_len"] is not None:
        kwargs["fft_len"] = int(doc["fft_len"])
    for key in ("output_dir", "format"):
        if key in doc:
            kwargs[key] = str(doc[key])
    return ExperimentConfig(**kwargs)


def config_from_json(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config root must be a JSON object")
    return config_from_dict(doc)


SYNTH_DOMAIN_KEYS = {
    "shaft_speed_rpm", "per_class", "fault_freq_multipliers", "resonance_hz",
    "decay_rate", "noise_std", "sampling_rate_hz", "segment_len", "rng_seed",
}


def load_domain(spec: DomainSpec, base_dir: Path | None = None) -> signal_io.SegmentCollection:
    """Materialize one domain as labeled segments."""
    if spec.manifest is not None:
        path = Path(spec.manifest)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return signal_io.build_dataset(signal_io.read_manifest(path))
    entry = dict(spec.synth)
    extra = set(entry) - SYNTH_DOMAIN_KEYS
    if extra:
        raise ConfigurationError(f"domain {spec.name!r}: unknown synth keys {sorted(extra)}")
    try:
        per_class = int(entry.pop("per_class"))
        rpm = float(entry.pop("shaft_speed_rpm"))
    except KeyError as exc:
        raise ConfigurationError(
            f"domain {spec.name!r}: synth recipe is missing {exc}"
        ) from None
    base = synth.SynthSpec(shaft_speed_rpm=rpm, fault_type="NO", **entry)
    return synth.generate_condition_set(base, per_class)


@dataclass(frozen=True)
class MethodOutcome:
    """Label-free result of one method on one pair."""

    method: str
    predictions: tuple  # one int64 array per repeat
    chosen_c: tuple | None  # per repeat, svm methods only
    retained_d: int | None  # baseline2 only
    wall_time_s: float


@dataclass(frozen=True)
class PairComputation:
    """Everything computed for one pair before scoring."""

    outcomes: dict
    subspace_dim: int
    kernel_max_asymmetry: float
    hdh_raw: divergence.RepeatedDivergence
    hdh_aligned: divergence.RepeatedDivergence


@dataclass(frozen=True)
class MethodResult:
    method: str
    per_repeat_accuracy: tuple
    confusion: np.ndarray  # (n_classes, n_classes), summed over repeats
    chosen_c: tuple | None
    retained_d: int | None
    wall_time_s: float

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.per_repeat_accuracy))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.per_repeat_accuracy))


@dataclass(frozen=True)
class PairResult:
    source: str
    target: str
    n_source: int
    n_target: int
    class_ids: tuple
    subspace_dim: int
    kernel_max_asymmetry: float
    methods: dict
    hdh_raw: divergence.RepeatedDivergence
    hdh_aligned: divergence.RepeatedDivergence
    wall_time_s: float


@dataclass(frozen=True)
class ExperimentReport:
    pairs: tuple
    methods: tuple
    repeats: int
    rng_seed: int
    total_wall_time_s: float


def _pair_streams(pair_seed: int, repeats: int):
    """Derive independent seed streams for the repeat loop and the
    divergence estimates of one pair."""
    root = np.random.SeedSequence(pair_seed)
    repeat_seeds = [int(s) for s in root.generate_state(repeats + 1)]
    return repeat_seeds[:repeats], repeat_seeds[repeats]


def predict_pair(source_feat: FeatureMatrix, target_feat: FeatureMatrix,
                 config: ExperimentConfig, pair_seed: int | None = None) -> PairComputation:
    """Run every requested method without touching target labels.

    ``target_feat`` must be label-free (see FeatureMatrix.without_labels);
    this is enforced so adaptation provably cannot read target labels.
    Deterministic methods run once; cross-validated methods run once per
    repeat with a derived seed.
    """
    if target_feat.label_ids is not None:
        raise ConfigurationError(
            "target features must be label-free here; call without_labels() first"
        )
    if source_feat.label_ids is None:
        raise ConfigurationError("source features must carry labels")
    if source_feat.dim_D != target_feat.dim_D:
        raise ConfigurationError(
            f"feature dimensions differ: {source_feat.dim_D} vs {target_feat.dim_D}"
        )
    labels = source_feat.label_ids
    if pair_seed is None:
        pair_seed = config.rng_seed
    repeat_seeds, hdh_seed = _pair_streams(pair_seed, config.repeats)

    # Shared adaptation stage, deterministic per pair.
    space_s = subspace.pca_full(source_feat)
    space_t = subspace.pca_full(target_feat)
    d = subspace.select_dim(space_s.eigenvalues, space_t.eigenvalues, config.dim)
    z_s = space_s.truncate(d)
    z_t = space_t.truncate(d)
    m = subspace.align(z_s, z_t)
    k_source = subspace.source_kernel(source_feat, z_s, z_t, m)
    k_cross = subspace.cross_kernel(source_feat, target_feat, z_s, z_t, m)
    asymmetry = subspace.max_asymmetry(source_feat, z_s, z_t, m)

    outcomes: dict = {}
    for method in config.methods:
        start = time.perf_counter()
        chosen_c = None
        retained_d = None
        if method == "baseline1":
            once = classifiers.baseline1_nn(source_feat, labels, target_feat)
            predictions = (once,) * config.repeats
        elif method == "baseline2":
            result = classifiers.baseline2_joint_pca_nn(
                source_feat, labels, target_feat, BASELINE2_VARIANCE
            )
            predictions = (result.predictions,) * config.repeats
            retained_d = result.retained_d
        elif method == "nn_sa":
            once = classifiers.knn_predict(k_cross, labels, k=1)
            predictions = (once,) * config.repeats
        elif method == "svm_na":
            runs = [
                classifiers.svm_na(source_feat, labels, target_feat,
                                   replace(config.cv, rng_seed=seed))
                for seed in repeat_seeds
            ]
            predictions = tuple(r.predictions for r in runs)
            chosen_c = tuple(r.chosen_c for r in runs)
        elif method == "svm_sa":
            runs = [
                classifiers.svm_precomputed(k_source, k_cross, labels,
                                            replace(config.cv, rng_seed=seed))
                for seed in repeat_seeds
            ]
            predictions = tuple(r.predictions for r in runs)
            chosen_c = tuple(r.chosen_c for r in runs)
        outcomes[method] = MethodOutcome(
            method=method, predictions=predictions, chosen_c=chosen_c,
            retained_d=retained_d, wall_time_s=time.perf_counter() - start,
        )

    hdh_raw = divergence.estimate_hdh_repeated(
        source_feat, target_feat, base_seed=hdh_seed, repeats=config.hdh_repeats
    )
    hdh_aligned = divergence.estimate_hdh_repeated(
        source_feat, target_feat, base_seed=hdh_seed, repeats=config.hdh_repeats,
        source_z=z_s, target_z=z_t, m=m,
    )
    return PairComputation(
        outcomes=outcomes, subspace_dim=d, kernel_max_asymmetry=asymmetry,
        hdh_raw=hdh_raw, hdh_aligned=hdh_aligned,
    )


def _score(computation: PairComputation, target_labels, class_ids,
           source_name: str, target_name: str, n_source: int,
           started: float) -> PairResult:
    if target_labels is None:
        raise ScoringError("target labels are unavailable; cannot score predictions")
    truth = np.asarray(target_labels, dtype=np.int64)
    if truth.size and truth.min() < 0:
        raise ScoringError("target labels are a sentinel; cannot score predictions")
    extra = set(np.unique(truth)) - set(class_ids)
    if extra:
        raise ConfigurationError(
            f"target labels {sorted(int(e) for e in extra)} missing from source label set"
        )
    index_of = {cid: i for i, cid in enumerate(class_ids)}
    n_classes = len(class_ids)
    methods: dict = {}
    for name, outcome in computation.outcomes.items():
        confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
        accuracies = []
        for predicted in outcome.predictions:
            accuracies.append(float((predicted == truth).mean()))
            for t, p in zip(truth, predicted):
                confusion[index_of[int(t)], index_of[int(p)]] += 1
        methods[name] = MethodResult(
            method=name, per_repeat_accuracy=tuple(accuracies),
            confusion=confusion, chosen_c=outcome.chosen_c,
            retained_d=outcome.retained_d, wall_time_s=outcome.wall_time_s,
        )
    return PairResult(
        source=source_name, target=target_name,
        n_source=n_source, n_target=int(truth.size),
        class_ids=tuple(class_ids), subspace_dim=computation.subspace_dim,
        kernel_max_asymmetry=computation.kernel_max_asymmetry,
        methods=methods, hdh_raw=computation.hdh_raw,
        hdh_aligned=computation.hdh_aligned,
        wall_time_s=time.perf_counter() - started,
    )


def run_pair(source: signal_io.SegmentCollection, target: signal_io.SegmentCollection,
             config: ExperimentConfig, source_name: str = "source",
             target_name: str = "target", pair_seed: int | None = None) -> PairResult:
    """Featurize both domains, run all methods, then score.

    Target labels are stripped before the method stage and consulted only
    when scoring; a missing or sentinel target labeling fails here with a
    scoring error, after all adaptation stages completed.
    """
    started = time.perf_counter()
    source_feat = featurize(source, config.fft_len)
    target_feat = featurize(target, config.fft_len)
    computation = predict_pair(
        source_feat, target_feat.without_labels(), config, pair_seed
    )
    class_ids = tuple(int(v) for v in np.unique(source_feat.label_ids))
    return _score(computation, target_feat.label_ids, class_ids,
                  source_name, target_name, source_feat.n, started)


def run_grid(domains, config: ExperimentConfig) -> ExperimentReport:
    """Run every ordered (source, target) pair of named domains.

    ``domains`` is a sequence of (name, SegmentCollection). Pairs execute
    concurrently up to ``config.workers``.
    """
    domains = list(domains)
    if len(domains) < 2:
        raise ConfigurationError(f"need at least 2 domains, got {len(domains)}")
    started = time.perf_counter()
    tasks = []
    pair_seeds = [
        int(s)
        for s in np.random.SeedSequence(config.rng_seed).generate_state(
            len(domains) * (len(domains) - 1)
        )
    ]
    k = 0
    for si, (source_name, source) in enumerate(domains):
        for ti, (target_name, target) in enumerate(domains):
            if si == ti:
                continue
            tasks.append((source_name, source, target_name, target, pair_seeds[k]))
            k += 1

    def run_one(task):
        source_name, source, target_name, target, pair_seed = task
        try:
            return run_pair(source, target, config, source_name, target_name, pair_seed)
        except DiagnosisError as exc:
            raise type(exc)(f"pair {source_name}->{target_name}: {exc}") from exc

    if config.workers == 1:
        results = [run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_one, tasks))
    return ExperimentReport(
        pairs=tuple(results), methods=config.methods, repeats=config.repeats,
        rng_seed=config.rng_seed, total_wall_time_s=time.perf_counter() - started,
    )


def divergence_to_dict(estimate: divergence.RepeatedDivergence) -> dict:
    return {
        "mean": estimate.mean,
        "std": estimate.std,
        "values": list(estimate.values),
    }


def _method_dict(result: MethodResult) -> dict:
    return {
        "mean_accuracy": result.mean_accuracy,
        "std_accuracy": result.std_accuracy,
        "per_repeat_accuracy": list(result.per_repeat_accuracy),
        "confusion": result.confusion.tolist(),
        "chosen_c": list(result.chosen_c) if result.chosen_c is not None else None,
        "retained_d": result.retained_d,
        "wall_time_s": result.wall_time_s,
    }


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "methods": list(report.methods),
        "repeats": report.repeats,
        "rng_seed": report.rng_seed,
        "total_wall_time_s": report.total_wall_time_s,
        "pairs": [
            {
                "source": pair.source,
                "target": pair.target,
                "n_source": pair.n_source,
                "n_target": pair.n_target,
                "class_ids": list(pair.class_ids),
                "subspace_dim": pair.subspace_dim,
                "kernel_max_asymmetry": pair.kernel_max_asymmetry,
                "kernel_asymmetry_notable":
                    pair.kernel_max_asymmetry > ASYMMETRY_NOTE_THRESHOLD,
                "hdh_raw_features": divergence_to_dict(pair.hdh_raw),
                "hdh_aligned": divergence_to_dict(pair.hdh_aligned),
                "wall_time_s": pair.wall_time_s,
                "methods": {
                    name: _method_dict(result)
                    for name, result in sorted(pair.methods.items())
                },
            }
            for pair in report.pairs
        ],
    }


def _modal_c(chosen: tuple | None):
    if chosen is None:
        return ""
    values, counts = np.unique(np.asarray(chosen, dtype=np.float64), return_counts=True)
    return float(values[np.argmax(counts)])  # ties go to the smaller C


def report_to_csv(report: ExperimentReport) -> str:
    """Flat view: one row per (pair, method); see CSV_COLUMNS."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pair in report.pairs:
        for name in sorted(pair.methods):
            result = pair.methods[name]
            writer.writerow([
                pair.source, pair.target, name,
                f"{result.mean_accuracy:.6f}", f"{result.std_accuracy:.6f}",
                pair.subspace_dim, _modal_c(result.chosen_c),
                result.retained_d if result.retained_d is not None else "",
                f"{pair.hdh_raw.mean:.6f}", f"{pair.hdh_raw.std:.6f}",
                f"{pair.hdh_aligned.mean:.6f}", f"{pair.hdh_aligned.std:.6f}",
                f"{result.wall_time_s:.3f}",
            ])
    return buffer.getvalue()


def emit_report(report: ExperimentReport, format: str, output_dir) -> Path:
    """Write the report; returns the written path. Byte-stable for equal
    report values."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if format == "json":
        path = output_dir / "report.json"
        text = json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    elif format == "csv":
        path = output_dir / "report.csv"
        text = report_to_csv(report)
    else:
        raise ConfigurationError(f"format must be json or csv, got {format!r}")
    path.write_text(text, encoding="utf-8")
    return path


def run_experiment(config: ExperimentConfig, base_dir: Path | None = None) -> tuple:
    """Load all configured domains, run the grid, and emit the report.

    Returns (report, written_path).
    """
    if len(config.domains) < 2:
        raise ConfigurationError("config must declare at least 2 domains")
    loaded = [(d.name, load_domain(d, base_dir)) for d in config.domains]
    report = run_grid(loaded, config)
    path = emit_report(report, config.format, config.output_dir)
    return report, path
