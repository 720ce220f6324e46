"""Functional PCA under the weighted grid measure."""

import numpy as np
import pytest

from arhgof import Grid, FunctionalSample, center, fpca, ev_cutoff, project, reconstruct
from arhgof.errors import DegenerateSampleError, DimensionError, PreconditionError
from arhgof.grids import inner_product


def _centered_sample(rng, n, grid):
    sample = FunctionalSample(rng.standard_normal((n, grid.m)), grid)
    return center(sample)[0]


def test_rank_one_sample_recovers_direction():
    grid = Grid.uniform(1.0, 41)
    psi = np.sin(np.pi * grid.points)
    coeffs = np.array([1.0, -2.0, 0.5, 0.5])  # sums to zero: already centered
    sample = FunctionalSample(np.outer(coeffs, psi), grid, mean_removed=True)
    basis, scores = fpca(sample)
    psi_normalized = psi / np.sqrt(inner_product(psi, psi, grid))
    lead = basis.eigenfunctions[:, 0]
    agreement = abs(inner_product(lead, psi_normalized, grid))
    assert agreement == pytest.approx(1.0, abs=1e-10)
    assert np.all(basis.eigenvalues[1:] < 1e-12)


def test_two_curve_sample_matches_gram_oracle():
    grid = Grid.uniform(1.0, 31, endpoint_atom=1.0)
    rng = np.random.default_rng(2)
    sample = _centered_sample(rng, 2, grid)
    basis, _ = fpca(sample)
    # oracle: eigenvalues of the 2x2 weighted Gram matrix divided by n
    w = grid.total_weights
    gram = (sample.values * w) @ sample.values.T
    oracle = np.sort(np.linalg.eigvalsh(gram / 2))[::-1]
    assert basis.eigenvalues[:2] == pytest.approx(oracle, abs=1e-12)


def test_all_zero_sample_has_zero_eigenvalues():
    grid = Grid.uniform(1.0, 11)
    sample = FunctionalSample(np.zeros((4, 11)), grid, mean_removed=True)
    basis, _ = fpca(sample)
    assert np.all(basis.eigenvalues == 0.0)


def test_orthonormality_under_atom_measure():
    grid = Grid.uniform(1.0, 51, endpoint_atom=1.0)
    sample = _centered_sample(np.random.default_rng(4), 30, grid)
    basis, _ = fpca(sample)
    w = grid.total_weights
    gram = basis.eigenfunctions.T @ (basis.eigenfunctions * w[:, None])
    assert np.abs(gram - np.eye(basis.p)).max() < 1e-8


def test_score_variance_matches_eigenvalues():
    grid = Grid.uniform(1.0, 41)
    sample = _centered_sample(np.random.default_rng(8), 25, grid)
    basis, scores = fpca(sample)
    variances = (scores.scores**2).mean(axis=0)
    positive = basis.eigenvalues > 1e-12
    rel = np.abs(variances[positive] - basis.eigenvalues[positive])
    assert np.all(rel <= 1e-6 * basis.eigenvalues[positive])


def test_parseval_reconstruction_error_monotone():
    grid = Grid.uniform(1.0, 31)
    sample = _centered_sample(np.random.default_rng(11), 12, grid)
    basis, scores = fpca(sample)
    errors = []
    for p in range(1, basis.p + 1):
        truncated = basis.truncate(p)
        approx = reconstruct(scores.scores[:, :p], truncated)
        diff = FunctionalSample(sample.values - approx.values, grid)
        errors.append(diff.sq_norms().sum())
    assert all(e1 >= e2 - 1e-10 for e1, e2 in zip(errors, errors[1:]))
    assert errors[-1] < 1e-16


def test_projection_identity_for_in_span_curve():
    grid = Grid.uniform(1.0, 21)
    sample = _centered_sample(np.random.default_rng(14), 10, grid)
    basis, _ = fpca(sample, max_components=5)
    curve = basis.eigenfunctions[:, 1] * 2.0 - basis.eigenfunctions[:, 3]
    one = FunctionalSample(curve[None, :], grid)
    back = reconstruct(project(one, basis))
    assert np.abs(back.values[0] - curve).max() < 1e-8


def test_full_rank_reconstruction():
    grid = Grid.uniform(1.0, 16)
    sample = _centered_sample(np.random.default_rng(15), 20, grid)
    basis, scores = fpca(sample)
    back = reconstruct(scores)
    assert np.abs(back.values - sample.values).max() < 1e-8


def test_empty_basis_rejected():
    grid = Grid.uniform(1.0, 11)
    from arhgof.fpca import FPCBasis

    with pytest.raises(DimensionError):
        FPCBasis(np.empty((11, 0)), np.empty(0), np.zeros(11), grid)


def test_fpca_requires_centered_input():
    grid = Grid.uniform(1.0, 11)
    sample = FunctionalSample(np.ones((3, 11)), grid)
    with pytest.raises(PreconditionError):
        fpca(sample)


def test_fpca_sign_convention_deterministic():
    grid = Grid.uniform(1.0, 21)
    sample = _centered_sample(np.random.default_rng(21), 9, grid)
    basis, _ = fpca(sample)
    peaks = np.abs(basis.eigenfunctions).argmax(axis=0)
    assert np.all(basis.eigenfunctions[peaks, np.arange(basis.p)] > 0)


@pytest.mark.parametrize("threshold,expected", [(0.95, 2), (0.995, 3)])
def test_ev_cutoff_examples(threshold, expected):
    assert ev_cutoff([0.90, 0.08, 0.02], threshold) == expected


def test_ev_cutoff_single_eigenvalue():
    assert ev_cutoff([0.42], 0.3) == 1
    assert ev_cutoff([0.42], 1.0) == 1


def test_ev_cutoff_degenerate():
    with pytest.raises(DegenerateSampleError):
        ev_cutoff([0.0, 0.0], 0.9)


def test_ev_cutoff_threshold_validation():
    with pytest.raises(ValueError):
        ev_cutoff([1.0], 0.0)
    with pytest.raises(ValueError):
        ev_cutoff([1.0], 1.5)


def test_project_grid_mismatch():
    grid_a = Grid.uniform(1.0, 21)
    grid_b = Grid.uniform(1.0, 21, endpoint_atom=1.0)
    sample = _centered_sample(np.random.default_rng(0), 5, grid_a)
    basis, _ = fpca(sample)
    other = FunctionalSample(np.ones((2, 21)), grid_b)
    with pytest.raises(DimensionError):
        project(other, basis)
