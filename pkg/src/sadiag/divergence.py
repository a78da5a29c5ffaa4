"""Domain divergence estimation.

How distinguishable are two feature clouds? Pool them under pseudo-labels
(0 = first domain, 1 = second), train a linear-kernel SVM to tell them
apart, and rescale its held-out test error into [0, 2]: an error of 0.5
(chance) maps to 0, a perfect separation maps to 2. Estimates from single
splits are noisy, so a repeat-and-average helper is provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import _as_rows, svm_predict, svm_train
from .exceptions import ConfigurationError, InsufficientDataError
from .subspace import AlignmentMatrix, Subspace, _check_pair

_SPLIT_C = 1.0  # fixed box bound for the domain-separating classifier


@dataclass(frozen=True)
class DivergenceEstimate:
    """One-split divergence: value = 2*(1 - 2*err) clamped to [0, 2]."""

    value: float
    classifier_test_error: float
    n_train: int
    n_test: int
    rng_seed: int

    def __post_init__(self):
        if not 0.0 <= self.classifier_test_error <= 1.0:
            raise ConfigurationError(
                f"test error must be in [0, 1], got {self.classifier_test_error}"
            )
        expected = _clamp(2.0 * (1.0 - 2.0 * self.classifier_test_error))
        if abs(self.value - expected) > 1e-12:
            raise ConfigurationError(
                f"value {self.value} inconsistent with error {self.classifier_test_error}"
            )


@dataclass(frozen=True)
class RepeatedDivergence:
    """Mean and spread of the estimate across derived seeds."""

    mean: float
    std: float
    values: tuple
    estimates: tuple

    @property
    def repeats(self) -> int:
        return len(self.values)


def _clamp(value: float) -> float:
    return float(min(2.0, max(0.0, value)))


def _split_domain(n: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean train mask over n samples with at least one sample per side."""
    n_train = int(round(n * fraction))
    n_train = min(max(n_train, 1), n - 1)
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[:n_train]] = True
    return mask


def _estimate_from_gram(gram: np.ndarray, domain_of: np.ndarray,
                        split_fraction: float, rng_seed: int) -> DivergenceEstimate:
    rng = np.random.default_rng(rng_seed)
    train_mask = np.zeros(domain_of.shape[0], dtype=bool)
    for dom in (0, 1):
        idx = np.flatnonzero(domain_of == dom)
        train_mask[idx] = _split_domain(idx.size, split_fraction, rng)
    train = np.flatnonzero(train_mask)
    test = np.flatnonzero(~train_mask)
    k_train = np.ascontiguousarray(gram[np.ix_(train, train)])
    k_cross = gram[np.ix_(train, test)]
    model = svm_train(k_train, domain_of[train], _SPLIT_C)
    predicted = svm_predict(model, k_cross)
    err = float((predicted != domain_of[test]).mean())
    return DivergenceEstimate(
        value=_clamp(2.0 * (1.0 - 2.0 * err)),
        classifier_test_error=err,
        n_train=int(train.size), n_test=int(test.size), rng_seed=int(rng_seed),
    )


def _pooled_gram(source_x, target_x):
    xs = _as_rows(source_x)
    xt = _as_rows(target_x)
    if xs.shape[1] != xt.shape[1]:
        raise ConfigurationError(
            f"feature dimensions differ: {xs.shape[1]} vs {xt.shape[1]}"
        )
    if xs.shape[0] < 2 or xt.shape[0] < 2:
        raise InsufficientDataError("each domain needs at least 2 samples")
    pool = np.vstack([xs, xt])
    gram = pool @ pool.T
    gram = (gram + gram.T) / 2.0  # clear BLAS round-off asymmetry
    domain_of = np.repeat(np.array([0, 1], dtype=np.int64),
                          [xs.shape[0], xt.shape[0]])
    return gram, domain_of


def estimate_hdh(source_x, target_x, split_fraction: float = 0.5,
                 rng_seed: int = 0) -> DivergenceEstimate:
    """Divergence of two domains in whatever feature space they are given.

    Pools both domains, splits each domain by ``split_fraction`` into
    train/test (seeded), trains the domain-separating classifier on the
    train split and scores it on the test split. Errors worse than chance
    clamp the value to 0.
    """
    if not 0.0 < split_fraction < 1.0:
        raise ConfigurationError(
            f"split fraction must be in (0, 1), got {split_fraction}"
        )
    gram, domain_of = _pooled_gram(source_x, target_x)
    return _estimate_from_gram(gram, domain_of, split_fraction, rng_seed)


def estimate_hdh_in_subspaces(source_x, target_x, source_z: Subspace,
                              target_z: Subspace, m: AlignmentMatrix,
                              split_fraction: float = 0.5,
                              rng_seed: int = 0) -> DivergenceEstimate:
    """Divergence after adaptation: source rows are centered and projected
    through the aligned source basis, target rows through the target basis,
    then the two projected clouds are compared as in estimate_hdh."""
    _check_pair(source_z, target_z)
    if m.d != source_z.d:
        raise ConfigurationError(f"alignment is {m.d}x{m.d}, subspaces are d={source_z.d}")
    xs = _as_rows(source_x)
    xt = _as_rows(target_x)
    projected_s = source_z.project(xs) @ m.m
    projected_t = target_z.project(xt)
    return estimate_hdh(projected_s, projected_t, split_fraction, rng_seed)


def derive_seeds(base_seed: int, count: int) -> list:
    """Deterministic child seeds for repeated runs."""
    return [int(s) for s in np.random.SeedSequence(base_seed).generate_state(count)]


def estimate_hdh_repeated(source_x, target_x, split_fraction: float = 0.5,
                          base_seed: int = 0, repeats: int = 10,
                          source_z: Subspace | None = None,
                          target_z: Subspace | None = None,
                          m: AlignmentMatrix | None = None) -> RepeatedDivergence:
    """Average the estimate over ``repeats`` derived seeds.

    When subspaces and an alignment are given, rows are projected first
    (as in estimate_hdh_in_subspaces). The pooled Gram matrix is computed
    once and shared across the seed loop.
    """
    if repeats < 1:
        raise ConfigurationError(f"repeats must be >= 1, got {repeats}")
    if not 0.0 < split_fraction < 1.0:
        raise ConfigurationError(
            f"split fraction must be in (0, 1), got {split_fraction}"
        )
    if (source_z is None) != (target_z is None) or (source_z is None) != (m is None):
        raise ConfigurationError("give all of source_z, target_z, m or none of them")
    if source_z is not None:
        _check_pair(source_z, target_z)
        source_x = source_z.project(_as_rows(source_x)) @ m.m
        target_x = target_z.project(_as_rows(target_x))
    gram, domain_of = _pooled_gram(source_x, target_x)
    estimates = tuple(
        _estimate_from_gram(gram, domain_of, split_fraction, seed)
        for seed in derive_seeds(base_seed, repeats)
    )
    values = tuple(e.value for e in estimates)
    arr = np.asarray(values)
    return RepeatedDivergence(mean=float(arr.mean()), std=float(arr.std()),
                              values=values, estimates=estimates)
