"""Decision layer: similarity k-NN, precomputed-kernel one-vs-one SVM with
an SMO dual solver, cross-validated box bound C, and the no-adaptation
baselines used for comparison runs.

All classifiers are deterministic given their inputs and seeds. The SVM
side works purely on precomputed kernels: training takes a symmetric
n x n matrix, prediction takes the n_train x n_target cross matrix whose
rows follow training-sample order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._smo_backend import BACKEND, smo_solve
from .exceptions import (
    ConfigurationError,
    ConvergenceError,
    DegenerateInputError,
    IndefiniteKernelWarning,
    InsufficientDataError,
    ParseError,
)
from .spectrum import FeatureMatrix
from .subspace import DimPolicy, SimilarityMatrix, pca_full, select_dim

DEFAULT_C_GRID = tuple(10.0 ** e for e in range(-3, 5))
DEFAULT_TOL = 1e-3
MAX_ITER = 100_000


@dataclass(frozen=True)
class CVConfig:
    """Grid and fold settings for choosing C."""

    c_grid: tuple = DEFAULT_C_GRID
    folds: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        grid = tuple(sorted(float(c) for c in self.c_grid))
        object.__setattr__(self, "c_grid", grid)
        if not grid:
            raise ConfigurationError("C grid must be nonempty")
        if any(c <= 0.0 for c in grid):
            raise ConfigurationError("C grid values must be positive")
        if self.folds < 2:
            raise ConfigurationError(f"folds must be >= 2, got {self.folds}")


@dataclass(frozen=True)
class PairModel:
    """One binary one-vs-one sub-problem: +1 = class_pos, -1 = class_neg."""

    class_pos: int
    class_neg: int
    indices: np.ndarray   # positions into the training set
    dual_coef: np.ndarray  # alpha_i * y_i, same length as indices
    bias: float
    objective: float

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "dual_coef", np.asarray(self.dual_coef, dtype=np.float64))
        if self.indices.shape != self.dual_coef.shape:
            raise ConfigurationError("indices and dual coefficients must align")


@dataclass(frozen=True)
class TrainedSVM:
    """One-vs-one multiclass model over a precomputed kernel."""

    class_ids: tuple
    pairs: tuple
    c: float
    n_train: int
    kernel_fingerprint: str


@dataclass(frozen=True)
class CVResult:
    """Cross-validation outcome; best_c is the smallest C among the
    highest-mean-accuracy grid points."""

    best_c: float
    c_grid: tuple
    mean_accuracy: np.ndarray  # per grid point
    fold_accuracy: np.ndarray  # (grid, folds)
    rng_seed: int


@dataclass(frozen=True)
class SvmRunResult:
    """Predictions of a cross-validated SVM run plus the chosen C."""

    predictions: np.ndarray
    chosen_c: float
    cv: CVResult
    model: TrainedSVM


@dataclass(frozen=True)
class Baseline2Result:
    """Joint-subspace 1-NN predictions plus the retained dimension."""

    predictions: np.ndarray
    retained_d: int


def _as_rows(x) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.rows
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigurationError("expected a 2-D sample matrix")
    return x


def _as_labels(labels, n: int) -> np.ndarray:
    out = np.asarray(labels, dtype=np.int64)
    if out.shape != (n,):
        raise ConfigurationError(f"expected {n} labels, got shape {out.shape}")
    return out


def _check_kernel(kernel: np.ndarray) -> np.ndarray:
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ConfigurationError(f"kernel must be square, got {kernel.shape}")
    if kernel.shape[0] < 2:
        raise ConfigurationError("kernel needs at least 2 training samples")
    if not np.isfinite(kernel).all():
        raise ConfigurationError("kernel contains non-finite values")
    asym = np.abs(kernel - kernel.T).max()
    if asym > 1e-8:
        raise ConfigurationError(f"kernel max asymmetry {asym:.3e} exceeds 1e-8")
    return kernel


def estimate_min_eigenvalue(kernel: np.ndarray, iterations: int = 30) -> float:
    """Cheap deterministic power-iteration estimate of the smallest
    eigenvalue, used only to decide whether to warn about indefiniteness."""
    n = kernel.shape[0]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    for _ in range(iterations):
        v = kernel @ v
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return 0.0
        v = v / norm
    shift = abs(float(v @ (kernel @ v)))
    if shift == 0.0:
        return 0.0
    w = rng.standard_normal(n)
    for _ in range(iterations):
        w = shift * w - kernel @ w
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        w = w / norm
    top_of_shifted = float(w @ (shift * w - kernel @ w))
    return shift - top_of_shifted


def _warn_if_indefinite(kernel: np.ndarray) -> None:
    n = kernel.shape[0]
    threshold = -1e-6 * float(np.trace(kernel)) / n
    min_eig = estimate_min_eigenvalue(kernel)
    if min_eig < threshold:
        warnings.warn(
            f"kernel is indefinite (estimated min eigenvalue {min_eig:.3e}); "
            "the dual objective is not concave",
            IndefiniteKernelWarning,
            stacklevel=3,
        )


def _solve_binary(kernel: np.ndarray, y: np.ndarray, c: float, tol: float,
                  max_iter: int):
    """Run the SMO backend and derive bias and dual objective.

    Bias and objective are computed here, outside the backends, so both
    backends go through identical post-processing.
    """
    k = np.ascontiguousarray(kernel, dtype=np.float64)
    yv = np.ascontiguousarray(y, dtype=np.float64)
    alpha, f, iters, converged = smo_solve(k, yv, float(c), float(tol), int(max_iter))
    viol = yv - f
    if not converged:
        raise ConvergenceError(
            f"SMO stopped after {iters} of {max_iter} iterations without "
            f"reaching gap tolerance {tol:g}"
        )
    free = (alpha > 0.0) & (alpha < c)
    if free.any():
        bias = float(viol[free].mean())
    else:
        up = ((yv > 0.0) & (alpha < c)) | ((yv < 0.0) & (alpha > 0.0))
        low = ((yv < 0.0) & (alpha < c)) | ((yv > 0.0) & (alpha > 0.0))
        if up.any() and low.any():
            bias = float((viol[up].max() + viol[low].min()) / 2.0)
        else:
            bias = float(viol.mean())
    ay = alpha * yv
    objective = float(alpha.sum() - 0.5 * (ay @ k @ ay))
    return alpha, bias, objective, iters


def dual_feasibility_gap(kernel: np.ndarray, y: np.ndarray, alpha: np.ndarray,
                         c: float) -> float:
    """KKT stationarity gap of a candidate dual point: the spread between
    the most violating up- and low-set samples (<= tol at convergence)."""
    y = np.asarray(y, dtype=np.float64)
    f = kernel @ (alpha * y)
    viol = y - f
    up = ((y > 0.0) & (alpha < c)) | ((y < 0.0) & (alpha > 0.0))
    low = ((y < 0.0) & (alpha < c)) | ((y > 0.0) & (alpha > 0.0))
    if not up.any() or not low.any():
        return 0.0
    return float(viol[up].max() - viol[low].min())


def svm_train(kernel, labels, c: float, tol: float = DEFAULT_TOL,
              max_iter: int = MAX_ITER) -> TrainedSVM:
    """Train a one-vs-one multiclass SVM on a precomputed kernel.

    Each unordered class pair (p, q), p < q, becomes a binary problem with
    +1 for the smaller class id; the dual is solved to the stationarity
    tolerance ``tol``. Deterministic given (kernel, labels, c, tol).
    """
    kernel = _check_kernel(kernel)
    n = kernel.shape[0]
    labels = _as_labels(labels, n)
    if c <= 0.0:
        raise ConfigurationError(f"C must be positive, got {c}")
    if tol <= 0.0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    class_ids = tuple(int(v) for v in np.unique(labels))
    if len(class_ids) < 2:
        raise DegenerateInputError("training labels contain a single class")
    _warn_if_indefinite(kernel)
    pairs = []
    for a, p in enumerate(class_ids):
        for q in class_ids[a + 1:]:
            idx = np.flatnonzero((labels == p) | (labels == q))
            y = np.where(labels[idx] == p, 1.0, -1.0)
            sub = np.ascontiguousarray(kernel[np.ix_(idx, idx)])
            alpha, bias, objective, _ = _solve_binary(sub, y, c, tol, max_iter)
            pairs.append(PairModel(
                class_pos=p, class_neg=q, indices=idx,
                dual_coef=alpha * y, bias=bias, objective=objective,
            ))
    fingerprint = hashlib.sha256(kernel.tobytes()).hexdigest()
    return TrainedSVM(class_ids=class_ids, pairs=tuple(pairs), c=float(c),
                      n_train=n, kernel_fingerprint=fingerprint)


def svm_predict(model: TrainedSVM, cross: np.ndarray) -> np.ndarray:
    """Predict target labels from the train-by-target cross kernel.

    Each binary model votes by the sign of its decision value; the class
    with most votes wins, vote ties go to the class with the larger summed
    decision magnitude, remaining ties to the smaller class id.
    """
    cross = np.asarray(cross, dtype=np.float64)
    if cross.ndim != 2 or cross.shape[0] != model.n_train:
        raise ConfigurationError(
            f"cross kernel must have {model.n_train} rows, got {cross.shape}"
        )
    n_t = cross.shape[1]
    class_pos_of = {cid: i for i, cid in enumerate(model.class_ids)}
    votes = np.zeros((n_t, len(model.class_ids)), dtype=np.int64)
    magnitude = np.zeros((n_t, len(model.class_ids)), dtype=np.float64)
    for pair in model.pairs:
        decision = pair.dual_coef @ cross[pair.indices, :] + pair.bias
        chose_pos = decision > 0.0
        p = class_pos_of[pair.class_pos]
        q = class_pos_of[pair.class_neg]
        votes[chose_pos, p] += 1
        votes[~chose_pos, q] += 1
        amag = np.abs(decision)
        magnitude[chose_pos, p] += amag[chose_pos]
        magnitude[~chose_pos, q] += amag[~chose_pos]
    out = np.empty(n_t, dtype=np.int64)
    ids = np.asarray(model.class_ids, dtype=np.int64)
    for t in range(n_t):
        best = votes[t].max()
        cands = np.flatnonzero(votes[t] == best)
        if cands.size > 1:
            mags = magnitude[t, cands]
            cands = cands[mags == mags.max()]
        out[t] = ids[cands[0]]
    return out


def decision_values(model: TrainedSVM, cross: np.ndarray) -> dict:
    """Per-pair decision values, keyed by (class_pos, class_neg)."""
    cross = np.asarray(cross, dtype=np.float64)
    return {
        (pair.class_pos, pair.class_neg):
            pair.dual_coef @ cross[pair.indices, :] + pair.bias
        for pair in model.pairs
    }


def cross_validate_c(kernel, labels, config: CVConfig = CVConfig(),
                     tol: float = DEFAULT_TOL) -> CVResult:
    """Pick C by stratified k-fold cross-validation on the training kernel.

    Folds are assigned per class from a seeded shuffle, so every fold sees
    every class (requires folds <= smallest class count). The winning C is
    the smallest one attaining the best mean fold accuracy.
    """
    kernel = _check_kernel(kernel)
    n = kernel.shape[0]
    labels = _as_labels(labels, n)
    class_ids = np.unique(labels)
    if class_ids.size < 2:
        raise DegenerateInputError("cross-validation needs at least 2 classes")
    smallest = min(int((labels == cid).sum()) for cid in class_ids)
    if config.folds > smallest:
        raise ConfigurationError(
            f"folds={config.folds} exceeds smallest class count {smallest}"
        )
    rng = np.random.default_rng(config.rng_seed)
    fold_of = np.empty(n, dtype=np.int64)
    for cid in class_ids:
        idx = np.flatnonzero(labels == cid)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = np.arange(idx.size) % config.folds
    fold_accuracy = np.zeros((len(config.c_grid), config.folds))
    for fold in range(config.folds):
        train = np.flatnonzero(fold_of != fold)
        test = np.flatnonzero(fold_of == fold)
        k_train = np.ascontiguousarray(kernel[np.ix_(train, train)])
        k_cross = kernel[np.ix_(train, test)]
        truth = labels[test]
        for gi, c in enumerate(config.c_grid):
            model = svm_train(k_train, labels[train], c, tol)
            predicted = svm_predict(model, k_cross)
            fold_accuracy[gi, fold] = float((predicted == truth).mean())
    mean_accuracy = fold_accuracy.mean(axis=1)
    best = int(np.argmax(mean_accuracy))  # first max: smallest C on ties
    return CVResult(best_c=float(config.c_grid[best]), c_grid=config.c_grid,
                    mean_accuracy=mean_accuracy, fold_accuracy=fold_accuracy,
                    rng_seed=config.rng_seed)


def svm_precomputed(k_train, k_cross, labels, config: CVConfig = CVConfig(),
                    tol: float = DEFAULT_TOL) -> SvmRunResult:
    """Cross-validate C on the training kernel, train on all of it, and
    predict through the cross kernel."""
    cv = cross_validate_c(k_train, labels, config, tol)
    model = svm_train(k_train, labels, cv.best_c, tol)
    predictions = svm_predict(model, k_cross)
    return SvmRunResult(predictions=predictions, chosen_c=cv.best_c,
                        cv=cv, model=model)


def svm_na(source_x, labels, target_x, config: CVConfig = CVConfig(),
           tol: float = DEFAULT_TOL) -> SvmRunResult:
    """No-adaptation SVM: linear kernel on the raw feature rows."""
    xs = _as_rows(source_x)
    xt = _as_rows(target_x)
    if xs.shape[1] != xt.shape[1]:
        raise ConfigurationError(
            f"feature dimensions differ: {xs.shape[1]} vs {xt.shape[1]}"
        )
    gram = xs @ xs.T
    gram = (gram + gram.T) / 2.0  # clear BLAS round-off asymmetry
    return svm_precomputed(gram, xs @ xt.T, labels, config, tol)


def knn_predict(sim: SimilarityMatrix, source_labels, k: int = 1) -> np.ndarray:
    """Classify each target column by its k most similar source rows.

    Majority label among the k wins; when classes tie, the tied class
    holding the single most similar neighbor is chosen.
    """
    values = sim.values if isinstance(sim, SimilarityMatrix) else np.asarray(sim, dtype=np.float64)
    n_s, n_t = values.shape
    labels = _as_labels(source_labels, n_s)
    if not 1 <= k <= n_s:
        raise ConfigurationError(f"k must be in [1, {n_s}], got {k}")
    if k == 1:
        return labels[np.argmax(values, axis=0)]
    out = np.empty(n_t, dtype=np.int64)
    for t in range(n_t):
        order = np.argsort(-values[:, t], kind="stable")[:k]
        top = labels[order]
        ids, counts = np.unique(top, return_counts=True)
        tied = set(ids[counts == counts.max()])
        if len(tied) == 1:
            out[t] = tied.pop()
        else:
            out[t] = next(lab for lab in top if lab in tied)
    return out


def _nearest_neighbor(source_rows: np.ndarray, target_rows: np.ndarray) -> np.ndarray:
    """Index of the Euclidean-nearest source row for each target row."""
    ss = np.einsum("ij,ij->i", source_rows, source_rows)
    tt = np.einsum("ij,ij->i", target_rows, target_rows)
    d2 = ss[:, None] + tt[None, :] - 2.0 * (source_rows @ target_rows.T)
    return np.argmin(d2, axis=0)


def baseline1_nn(source_x, labels, target_x) -> np.ndarray:
    """1-NN by Euclidean distance in the raw feature space (no adaptation)."""
    xs = _as_rows(source_x)
    xt = _as_rows(target_x)
    if xs.shape[0] == 0:
        raise InsufficientDataError("source domain is empty")
    if xs.shape[1] != xt.shape[1]:
        raise ConfigurationError(
            f"feature dimensions differ: {xs.shape[1]} vs {xt.shape[1]}"
        )
    labels = _as_labels(labels, xs.shape[0])
    return labels[_nearest_neighbor(xs, xt)]


def baseline2_joint_pca_nn(source_x, labels, target_x,
                           variance_fraction: float = 0.9) -> Baseline2Result:
    """1-NN in one subspace fitted on source and target rows together.

    The joint cloud is centered by its own mean, the smallest dimension
    reaching ``variance_fraction`` of the variance is retained, and both
    domains are compared in that projection.
    """
    xs = _as_rows(source_x)
    xt = _as_rows(target_x)
    if xs.shape[1] != xt.shape[1]:
        raise ConfigurationError(
            f"feature dimensions differ: {xs.shape[1]} vs {xt.shape[1]}"
        )
    labels = _as_labels(labels, xs.shape[0])
    joint = pca_full(np.vstack([xs, xt]))
    d = select_dim(joint.eigenvalues, joint.eigenvalues,
                   DimPolicy.variance(variance_fraction))
    space = joint.truncate(d)
    nearest = _nearest_neighbor(space.project(xs), space.project(xt))
    return Baseline2Result(predictions=labels[nearest], retained_d=d)


def save_model(model: TrainedSVM, path) -> None:
    """Persist a trained model: one JSON header line (class pairs, C,
    biases, indices) then the dual coefficients of every pair,
    concatenated, as little-endian float64."""
    header = {
        "class_ids": list(model.class_ids),
        "c": model.c,
        "n_train": model.n_train,
        "kernel_fingerprint": model.kernel_fingerprint,
        "solver_backend": BACKEND,
        "pairs": [
            {
                "class_pos": pair.class_pos,
                "class_neg": pair.class_neg,
                "bias": pair.bias,
                "objective": pair.objective,
                "indices": pair.indices.tolist(),
            }
            for pair in model.pairs
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        for pair in model.pairs:
            fh.write(np.ascontiguousarray(pair.dual_coef, dtype="<f8").tobytes())


def load_model(path) -> TrainedSVM:
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise ParseError(f"{path}: missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
        pair_headers = header["pairs"]
        counts = [len(p["indices"]) for p in pair_headers]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: bad model header: {exc}") from None
    payload = data[newline + 1:]
    expected = sum(counts) * 8
    if len(payload) != expected:
        raise ParseError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    coefs = np.frombuffer(payload, dtype="<f8")
    pairs = []
    offset = 0
    for ph, count in zip(pair_headers, counts):
        pairs.append(PairModel(
            class_pos=int(ph["class_pos"]), class_neg=int(ph["class_neg"]),
            indices=np.asarray(ph["indices"], dtype=np.int64),
            dual_coef=coefs[offset:offset + count].copy(),
            bias=float(ph["bias"]), objective=float(ph["objective"]),
        ))
        offset += count
    return TrainedSVM(
        class_ids=tuple(int(v) for v in header["class_ids"]),
        pairs=tuple(pairs), c=float(header["c"]),
        n_train=int(header["n_train"]),
        kernel_fingerprint=str(header["kernel_fingerprint"]),
    )


def write_predictions(predictions: np.ndarray, path) -> None:
    """Emit predictions as CSV: sample_index, predicted_class_id."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "predicted_class_id"])
        for i, label in enumerate(np.asarray(predictions)):
            writer.writerow([i, int(label)])


def read_predictions(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_index", "predicted_class_id"]:
            raise ParseError(f"{path}: unexpected header {header}")
        return np.asarray([int(row[1]) for row in reader], dtype=np.int64)
