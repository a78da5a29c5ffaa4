"""Per-domain PCA subspaces, closed-form alignment, similarity and kernels.

The source and target feature clouds each get an orthonormal PCA basis
(``Subspace``). The shift between domains is the Frobenius divergence
``||Z_S - Z_T||_F^2``; it is corrected by the alignment matrix
``M* = Z_S^T Z_T``, the global minimizer of ``||Z_S M - Z_T||_F^2``.
Source rows are then compared with target rows through

    Sim = X_S (Z_S M*) Z_T^T X_T^T

after centering each side by its own domain mean. The same product with
``X_S`` on both sides, symmetrized, serves as a precomputed SVM kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, ParseError, RankError
from .spectrum import FeatureMatrix


@dataclass(frozen=True)
class Subspace:
    """Orthonormal PCA basis of one domain.

    basis        D x d, columns orthonormal, variance-ordered
    eigenvalues  length d, non-increasing, sample-covariance scale
    mean         length D column mean used for centering
    """

    basis: np.ndarray
    eigenvalues: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        basis = np.ascontiguousarray(self.basis, dtype=np.float64)
        eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        mean = np.asarray(self.mean, dtype=np.float64)
        for name, value in (("basis", basis), ("eigenvalues", eigenvalues), ("mean", mean)):
            object.__setattr__(self, name, value)
        if basis.ndim != 2:
            raise ConfigurationError("basis must be a D x d matrix")
        dim, d = basis.shape
        if d > dim:
            raise ConfigurationError(f"d={d} exceeds ambient dimension D={dim}")
        if eigenvalues.shape != (d,):
            raise ConfigurationError(f"expected {d} eigenvalues, got {eigenvalues.shape}")
        if mean.shape != (dim,):
            raise ConfigurationError(f"mean must have length {dim}, got {mean.shape}")
        if np.any(np.diff(eigenvalues) > 1e-12):
            raise ConfigurationError("eigenvalues must be non-increasing")
        gram_err = np.linalg.norm(basis.T @ basis - np.eye(d))
        if gram_err > 1e-8:
            raise ConfigurationError(f"basis columns not orthonormal (||Z'Z - I|| = {gram_err:.2e})")

    @property
    def dim_D(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def truncate(self, d: int) -> "Subspace":
        """Keep only the ``d`` leading basis directions."""
        if not 1 <= d <= self.d:
            raise ConfigurationError(f"cannot truncate d={self.d} basis to {d}")
        return Subspace(self.basis[:, :d], self.eigenvalues[:d], self.mean)

    def project(self, rows: np.ndarray) -> np.ndarray:
        """Center rows by the domain mean and project onto the basis."""
        return (np.asarray(rows, dtype=np.float64) - self.mean) @ self.basis


@dataclass(frozen=True)
class AlignmentMatrix:
    """d x d matrix mapping the source basis toward the target basis."""

    m: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.m, dtype=np.float64)
        object.__setattr__(self, "m", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigurationError("alignment matrix must be square")

    @property
    def d(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Pairwise source-to-target similarity values."""

    values: np.ndarray  # (n_S, n_T)
    row_ids: np.ndarray
    col_ids: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_ids", np.asarray(self.row_ids, dtype=np.int64))
        object.__setattr__(self, "col_ids", np.asarray(self.col_ids, dtype=np.int64))
        if values.ndim != 2:
            raise ConfigurationError("similarity values must be 2-D")
        if self.row_ids.shape != (values.shape[0],) or self.col_ids.shape != (values.shape[1],):
            raise ConfigurationError("row/col ids must match the value matrix shape")


@dataclass(frozen=True)
class DimPolicy:
    """How to pick the shared subspace dimension from two eigenvalue spectra."""

    kind: str  # "fixed" | "variance"
    value: float

    @classmethod
    def fixed(cls, d: int) -> "DimPolicy":
        if d < 1:
            raise ConfigurationError(f"fixed dimension must be >= 1, got {d}")
        return cls("fixed", float(d))

    @classmethod
    def variance(cls, fraction: float) -> "DimPolicy":
        if not 0.0 < fraction <= 1.0:
            raise ConfigurationError(f"variance fraction must be in (0, 1], got {fraction}")
        return cls("variance", float(fraction))

    @classmethod
    def parse(cls, text: str) -> "DimPolicy":
        """Parse 'fixed:30' or 'variance:0.9'."""
        kind, _, value = text.partition(":")
        if kind == "fixed":
            return cls.fixed(int(value))
        if kind == "variance":
            return cls.variance(float(value))
        raise ConfigurationError(f"unknown dim policy {text!r}, use fixed:<d> or variance:<f>")

    def __str__(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{int(self.value)}"
        return f"variance:{self.value:g}"


def _rows_of(x: FeatureMatrix | np.ndarray) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.rows
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigurationError("expected a 2-D sample matrix")
    return x


def pca_fit(features: FeatureMatrix | np.ndarray, d: int) -> Subspace:
    """Fit the top-``d`` principal directions of the feature cloud.

    Computed through the thin SVD of the centered data, equivalent to the
    eigendecomposition of the sample covariance (the test suite checks this
    against a dense covariance eigensolver). Each basis column's
    largest-magnitude entry is made positive, which fixes the sign
    ambiguity and makes the fit deterministic.
    """
    rows = _rows_of(features)
    n, dim = rows.shape
    if n < 2:
        raise ConfigurationError(f"PCA needs at least 2 samples, got {n}")
    d_cap = min(n - 1, dim)
    if not 1 <= d <= d_cap:
        raise ConfigurationError(f"d must be in [1, {d_cap}] for a {n} x {dim} matrix, got {d}")
    mean, svals, vt, rank = _centered_svd(rows)
    if rank < d:
        raise RankError(f"requested d={d} but centered data has rank {rank}")
    return _build_subspace(mean, svals, vt, d, n)


def pca_full(features: FeatureMatrix | np.ndarray) -> Subspace:
    """Fit every achievable principal direction (d = rank of centered data)."""
    rows = _rows_of(features)
    n = rows.shape[0]
    if n < 2:
        raise ConfigurationError(f"PCA needs at least 2 samples, got {n}")
    mean, svals, vt, rank = _centered_svd(rows)
    if rank == 0:
        raise RankError("all rows are identical: no variance direction to fit")
    return _build_subspace(mean, svals, vt, rank, n)


def _centered_svd(rows: np.ndarray):
    n, dim = rows.shape
    mean = rows.mean(axis=0)
    _, svals, vt = np.linalg.svd(rows - mean, full_matrices=False)
    rank_tol = svals[0] * max(n, dim) * np.finfo(np.float64).eps
    rank = int(np.count_nonzero(svals > rank_tol))
    return mean, svals, vt, rank


def _build_subspace(mean: np.ndarray, svals: np.ndarray, vt: np.ndarray,
                    d: int, n: int) -> Subspace:
    eigenvalues = (svals[:d] ** 2) / (n - 1)
    basis = _fix_signs(vt[:d].T)
    return Subspace(basis=basis, eigenvalues=eigenvalues, mean=mean)


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    basis = basis.copy()
    anchor = np.argmax(np.abs(basis), axis=0)
    flip = basis[anchor, np.arange(basis.shape[1])] < 0
    basis[:, flip] *= -1.0
    return basis


def select_dim(eigvals_source: np.ndarray, eigvals_target: np.ndarray,
               policy: DimPolicy) -> int:
    """Pick a common subspace dimension under the given policy.

    fixed(d): d capped by both spectrum lengths.
    variance(f): smallest d at which both domains' cumulative eigenvalue
    fractions reach f, capped by the common spectrum length.
    """
    ev_s = np.asarray(eigvals_source, dtype=np.float64)
    ev_t = np.asarray(eigvals_target, dtype=np.float64)
    if ev_s.size == 0 or ev_t.size == 0:
        raise ConfigurationError("eigenvalue spectra must be nonempty")
    common = min(ev_s.size, ev_t.size)
    if policy.kind == "fixed":
        return min(int(policy.value), common)
    if policy.kind == "variance":
        d_s = _dim_reaching(ev_s, policy.value)
        d_t = _dim_reaching(ev_t, policy.value)
        return min(max(d_s, d_t), common)
    raise ConfigurationError(f"unknown dim policy kind {policy.kind!r}")


def _dim_reaching(eigvals: np.ndarray, fraction: float) -> int:
    cumulative = np.cumsum(eigvals) / eigvals.sum()
    return int(np.searchsorted(cumulative, fraction - 1e-12) + 1)


def subspace_divergence(source: Subspace, target: Subspace) -> float:
    """Squared Frobenius distance between the two bases."""
    _check_pair(source, target)
    return float(np.linalg.norm(source.basis - target.basis) ** 2)


def align(source: Subspace, target: Subspace) -> AlignmentMatrix:
    """Closed-form minimizer of ``||Z_S M - Z_T||_F^2``: M* = Z_S^T Z_T."""
    _check_pair(source, target)
    return AlignmentMatrix(source.basis.T @ target.basis)


def alignment_residual(source: Subspace, target: Subspace, m: AlignmentMatrix) -> float:
    """``||Z_S M - Z_T||_F^2`` for a candidate alignment."""
    _check_pair(source, target)
    return float(np.linalg.norm(source.basis @ m.m - target.basis) ** 2)


def _check_pair(source: Subspace, target: Subspace) -> None:
    if source.dim_D != target.dim_D or source.d != target.d:
        raise ConfigurationError(
            f"subspace shapes differ: {source.dim_D}x{source.d} vs {target.dim_D}x{target.d}"
        )


def _check_features(rows: np.ndarray, space: Subspace, side: str) -> None:
    if rows.shape[1] != space.dim_D:
        raise ConfigurationError(
            f"{side} features have dimension {rows.shape[1]}, subspace expects {space.dim_D}"
        )


def similarity(source_x: FeatureMatrix | np.ndarray, target_x: FeatureMatrix | np.ndarray,
               source_z: Subspace, target_z: Subspace,
               m: AlignmentMatrix) -> SimilarityMatrix:
    """Source-to-target similarity through the aligned subspaces.

    Each side is centered by its own domain mean; source rows are projected
    by Z_S M, target rows by Z_T, and values are the pairwise inner products
    of the projections.
    """
    xs = _rows_of(source_x)
    xt = _rows_of(target_x)
    _check_features(xs, source_z, "source")
    _check_features(xt, target_z, "target")
    _check_pair(source_z, target_z)
    if m.d != source_z.d:
        raise ConfigurationError(f"alignment is {m.d}x{m.d}, subspaces are d={source_z.d}")
    source_proj = source_z.project(xs) @ m.m
    target_proj = target_z.project(xt)
    return SimilarityMatrix(
        values=source_proj @ target_proj.T,
        row_ids=np.arange(xs.shape[0]),
        col_ids=np.arange(xt.shape[0]),
    )


def cross_kernel(source_x, target_x, source_z: Subspace, target_z: Subspace,
                 m: AlignmentMatrix) -> np.ndarray:
    """n_S x n_T prediction kernel; identical to the similarity values."""
    return similarity(source_x, target_x, source_z, target_z, m).values


def source_kernel(source_x, source_z: Subspace, target_z: Subspace,
                  m: AlignmentMatrix) -> np.ndarray:
    """Symmetrized n_S x n_S training kernel.

    The raw product X_S Z_A Z_T' X_S' is not symmetric in general; the dual
    solver needs symmetry, so (K + K') / 2 is returned.
    """
    xs = _rows_of(source_x)
    _check_features(xs, source_z, "source")
    _check_pair(source_z, target_z)
    if m.d != source_z.d:
        raise ConfigurationError(f"alignment is {m.d}x{m.d}, subspaces are d={source_z.d}")
    centered = xs - source_z.mean
    k = (centered @ (source_z.basis @ m.m)) @ (centered @ target_z.basis).T
    return (k + k.T) / 2.0


def max_asymmetry(source_x, source_z: Subspace, target_z: Subspace,
                  m: AlignmentMatrix) -> float:
    """Largest |K - K'| entry of the raw (unsymmetrized) training kernel."""
    xs = _rows_of(source_x)
    centered = xs - source_z.mean
    k = (centered @ (source_z.basis @ m.m)) @ (centered @ target_z.basis).T
    return float(np.abs(k - k.T).max())


def save_subspace(space: Subspace, path: str | Path) -> None:
    """Persist a fitted subspace: one JSON header line, then the basis as
    row-major little-endian float64."""
    header = {
        "D": space.dim_D,
        "d": space.d,
        "eigenvalues": space.eigenvalues.tolist(),
        "mean": space.mean.tolist(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(space.basis, dtype="<f8").tobytes())


def load_subspace(path: str | Path) -> Subspace:
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise ParseError(f"{path}: missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
        dim, d = int(header["D"]), int(header["d"])
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad subspace header: {exc}") from None
    payload = data[newline + 1:]
    if len(payload) != dim * d * 8:
        raise ParseError(f"{path}: expected {dim * d * 8} payload bytes, got {len(payload)}")
    basis = np.frombuffer(payload, dtype="<f8").reshape(dim, d).copy()
    return Subspace(
        basis=basis,
        eigenvalues=np.asarray(header["eigenvalues"], dtype=np.float64),
        mean=np.asarray(header["mean"], dtype=np.float64),
    )
