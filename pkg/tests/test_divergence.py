import numpy as np
import pytest

from sadiag.divergence import (
    DivergenceEstimate,
    derive_seeds,
    estimate_hdh,
    estimate_hdh_in_subspaces,
    estimate_hdh_repeated,
)
from sadiag.exceptions import ConfigurationError, InsufficientDataError
from sadiag.subspace import align, pca_fit


def gaussian_cloud(rng, n, dim=12, shift=0.0):
    return rng.standard_normal((n, dim)) + shift


def orthant_pair(rng, n, dim=12):
    source = rng.uniform(0.5, 1.5, size=(n, dim))
    target = rng.uniform(-1.5, -0.5, size=(n, dim))
    return source, target


def test_identical_distributions_score_low():
    rng = np.random.default_rng(0)
    source = gaussian_cloud(rng, 80)
    target = gaussian_cloud(rng, 80)
    result = estimate_hdh_repeated(source, target, repeats=8)
    assert result.mean < 0.4
    assert all(0.0 <= v <= 2.0 for v in result.values)


def test_orthant_separated_scores_high():
    rng = np.random.default_rng(1)
    source, target = orthant_pair(rng, 60)
    result = estimate_hdh_repeated(source, target, repeats=8)
    assert result.mean > 1.8
    assert all(v > 1.8 for v in result.values)


def test_estimate_fields_are_consistent():
    rng = np.random.default_rng(2)
    source = gaussian_cloud(rng, 30)
    target = gaussian_cloud(rng, 20, shift=0.5)
    estimate = estimate_hdh(source, target, split_fraction=0.6, rng_seed=7)
    assert 0.0 <= estimate.value <= 2.0
    expected = min(2.0, max(0.0, 2.0 * (1.0 - 2.0 * estimate.classifier_test_error)))
    assert estimate.value == pytest.approx(expected, abs=1e-12)
    assert estimate.n_train + estimate.n_test == 50
    assert estimate.rng_seed == 7


def test_estimate_value_error_consistency_enforced():
    with pytest.raises(ConfigurationError):
        DivergenceEstimate(value=1.0, classifier_test_error=0.5,
                           n_train=10, n_test=10, rng_seed=0)
    with pytest.raises(ConfigurationError):
        DivergenceEstimate(value=0.0, classifier_test_error=1.5,
                           n_train=10, n_test=10, rng_seed=0)


def test_deterministic_given_seed():
    rng = np.random.default_rng(3)
    source = gaussian_cloud(rng, 25)
    target = gaussian_cloud(rng, 25, shift=1.0)
    a = estimate_hdh(source, target, rng_seed=11)
    b = estimate_hdh(source, target, rng_seed=11)
    assert a == b


def test_repeated_aggregates_match_values():
    rng = np.random.default_rng(4)
    source = gaussian_cloud(rng, 30)
    target = gaussian_cloud(rng, 30, shift=0.8)
    result = estimate_hdh_repeated(source, target, base_seed=5, repeats=6)
    assert result.repeats == 6
    values = np.asarray(result.values)
    assert result.mean == pytest.approx(values.mean())
    assert result.std == pytest.approx(values.std())
    seeds = derive_seeds(5, 6)
    assert [e.rng_seed for e in result.estimates] == seeds
    assert len(set(seeds)) == 6


def test_subspace_variant_equals_manual_projection():
    rng = np.random.default_rng(5)
    source = gaussian_cloud(rng, 40, dim=10)
    target = gaussian_cloud(rng, 40, dim=10, shift=2.0)
    z_s = pca_fit(source, 3)
    z_t = pca_fit(target, 3)
    m = align(z_s, z_t)
    direct = estimate_hdh_in_subspaces(source, target, z_s, z_t, m, rng_seed=3)
    manual = estimate_hdh(z_s.project(source) @ m.m, z_t.project(target), rng_seed=3)
    assert direct == manual


def test_repeated_subspace_arguments_all_or_none():
    rng = np.random.default_rng(6)
    source = gaussian_cloud(rng, 20, dim=8)
    target = gaussian_cloud(rng, 20, dim=8)
    z_s = pca_fit(source, 2)
    with pytest.raises(ConfigurationError):
        estimate_hdh_repeated(source, target, source_z=z_s)


def test_input_validation():
    rng = np.random.default_rng(7)
    source = gaussian_cloud(rng, 10)
    target = gaussian_cloud(rng, 10)
    for fraction in (0.0, 1.0, -0.5):
        with pytest.raises(ConfigurationError):
            estimate_hdh(source, target, split_fraction=fraction)
    with pytest.raises(ConfigurationError):
        estimate_hdh_repeated(source, target, repeats=0)
    with pytest.raises(InsufficientDataError):
        estimate_hdh(source[:1], target)
    with pytest.raises(ConfigurationError):
        estimate_hdh(source, gaussian_cloud(rng, 10, dim=5))
