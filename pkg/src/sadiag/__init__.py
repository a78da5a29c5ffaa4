"""Bearing fault diagnosis across working conditions.

Labeled vibration data from one working condition (the source domain) is
used to classify unlabeled data from another (the target domain). Raw
signals become one-sided FFT amplitude features; each domain gets a PCA
subspace; a closed-form alignment maps the source basis toward the target
basis; classification then runs on the aligned similarity matrix (1-NN)
or on the aligned kernel (precomputed-kernel SVM). A proxy divergence
estimate quantifies how much the alignment reduced the domain shift.
"""

from ._smo_backend import BACKEND as SOLVER_BACKEND
from .classifiers import (
    Baseline2Result,
    CVConfig,
    CVResult,
    SvmRunResult,
    TrainedSVM,
    baseline1_nn,
    baseline2_joint_pca_nn,
    cross_validate_c,
    knn_predict,
    load_model,
    save_model,
    svm_na,
    svm_precomputed,
    svm_predict,
    svm_train,
)
from .divergence import (
    DivergenceEstimate,
    RepeatedDivergence,
    estimate_hdh,
    estimate_hdh_in_subspaces,
    estimate_hdh_repeated,
)
from .exceptions import (
    ConfigurationError,
    ConvergenceError,
    DegenerateInputError,
    DiagnosisError,
    EmptyInputError,
    IndefiniteKernelWarning,
    InsufficientDataError,
    LengthError,
    ParseError,
    RankError,
    ScoringError,
)
from .harness import (
    DomainSpec,
    ExperimentConfig,
    ExperimentReport,
    MethodResult,
    PairResult,
    config_from_json,
    emit_report,
    predict_pair,
    run_experiment,
    run_grid,
    run_pair,
)
from .signal_io import (
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
)
from .spectrum import (
    FeatureMatrix,
    featurize,
    fft_amplitudes,
    load_features,
    next_pow2,
    save_features,
    z_normalize,
)
from .subspace import (
    AlignmentMatrix,
    DimPolicy,
    SimilarityMatrix,
    Subspace,
    align,
    alignment_residual,
    cross_kernel,
    load_subspace,
    pca_fit,
    pca_full,
    save_subspace,
    select_dim,
    similarity,
    source_kernel,
    subspace_divergence,
)
from .synth import SynthSpec, generate, generate_condition_set, generate_domain_pair

__version__ = "0.1.0"
