"""Functional principal components under the weighted grid measure.

The empirical covariance operator of a centered sample is diagonalized
in symmetrized coordinates: with W the diagonal matrix of quadrature
weights (endpoint atom included), the eigenproblem of C W is solved as a
symmetric eigendecomposition of W^{1/2} C W^{1/2} and eigenvectors are
mapped back by W^{-1/2}.  Orthonormality in the weighted inner product
is then exact by construction.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateSampleError, DimensionError, PreconditionError
from .grids import FunctionalSample

__all__ = ["FPCBasis", "ScoreMatrix", "fpca", "ev_cutoff", "project", "reconstruct"]

# eigenvalues in (-1e-12, 0) are floating-point noise from near-singular
# covariance and get clamped to zero
_EIG_CLAMP = 1e-12


class FPCBasis:
    """Eigenfunctions of an empirical covariance operator on a grid.

    Attributes
    ----------
    eigenfunctions : ndarray, shape (m, p)
        Column j holds the j-th eigenfunction on the grid; orthonormal
        under the grid's weighted inner product.
    eigenvalues : ndarray, shape (p,)
        Nonincreasing, nonnegative.
    mean_curve : ndarray, shape (m,)
        Mean removed from the fitting sample (zeros when unknown).
    grid : Grid
    """

    __slots__ = ("eigenfunctions", "eigenvalues", "mean_curve", "grid")

    def __init__(self, eigenfunctions, eigenvalues, mean_curve, grid):
        eigenfunctions = np.asarray(eigenfunctions, dtype=float).copy()
        eigenvalues = np.asarray(eigenvalues, dtype=float).copy()
        mean_curve = np.asarray(mean_curve, dtype=float).copy()
        if eigenfunctions.ndim != 2 or eigenfunctions.shape[0] != grid.m:
            raise DimensionError("eigenfunctions must be an (m, p) matrix")
        if eigenfunctions.shape[1] < 1:
            raise DimensionError("basis needs at least one component (p=0 disallowed)")
        if eigenvalues.shape != (eigenfunctions.shape[1],):
            raise DimensionError("one eigenvalue per eigenfunction required")
        if np.any(np.diff(eigenvalues) > 1e-12):
            raise ValueError("eigenvalues must be nonincreasing")
        if np.any(eigenvalues < -_EIG_CLAMP):
            raise ValueError("eigenvalues must be >= -1e-12")
        eigenvalues = np.maximum(eigenvalues, 0.0)
        for arr in (eigenfunctions, eigenvalues, mean_curve):
            arr.setflags(write=False)
        self.eigenfunctions = eigenfunctions
        self.eigenvalues = eigenvalues
        self.mean_curve = mean_curve
        self.grid = grid

    @property
    def p(self):
        return self.eigenfunctions.shape[1]

    def truncate(self, p):
        """First p components as a new basis."""
        if not 1 <= p <= self.p:
            raise DimensionError(f"cannot truncate basis of size {self.p} to {p}")
        return FPCBasis(
            self.eigenfunctions[:, :p], self.eigenvalues[:p], self.mean_curve, self.grid
        )

    def __repr__(self):
        return f"FPCBasis(p={self.p}, m={self.grid.m})"


class ScoreMatrix:
    """Per-curve coefficients on an FPC basis; entry (i, j) = <X_i, psi_j>."""

    __slots__ = ("scores", "basis")

    def __init__(self, scores, basis):
        scores = np.atleast_2d(np.asarray(scores, dtype=float)).copy()
        if scores.shape[1] != basis.p:
            raise DimensionError("score columns must match basis size")
        scores.setflags(write=False)
        self.scores = scores
        self.basis = basis

    @property
    def n(self):
        return self.scores.shape[0]

    @property
    def p(self):
        return self.scores.shape[1]

    def __repr__(self):
        return f"ScoreMatrix(n={self.n}, p={self.p})"


def fpca(sample, max_components=None):
    """Functional PCA of a centered sample.

    Parameters
    ----------
    sample : FunctionalSample
        Must be centered (``mean_removed=True``).
    max_components : int, optional
        Number of leading eigenpairs to keep; defaults to min(n, m).

    Returns
    -------
    (FPCBasis, ScoreMatrix)
        Eigenpairs of the weighted empirical covariance operator and the
        sample scores.  The empirical variance (1/n) sum_i s_ij^2 of score
        column j equals eigenvalue j by construction.
    """
    if not sample.mean_removed:
        raise PreconditionError("fpca requires a centered sample")
    n, m = sample.values.shape
    if max_components is None:
        max_components = min(n, m)
    if not 1 <= max_components <= min(n, m):
        raise DimensionError(
            f"max_components must be in [1, {min(n, m)}], got {max_components}"
        )
    w = sample.grid.total_weights
    sw = np.sqrt(w)
    z = sample.values * sw  # curves in symmetrized coordinates
    cov_sym = (z.T @ z) / n
    evals, evecs = np.linalg.eigh(cov_sym)
    order = np.argsort(evals)[::-1][:max_components]
    evals = evals[order]
    evecs = evecs[:, order]
    evals[(evals < 0) & (evals > -_EIG_CLAMP)] = 0.0
    evals = np.maximum(evals, 0.0)
    # sign convention: largest-magnitude entry of each eigenfunction positive
    eigenfunctions = evecs / sw[:, None]
    flip = eigenfunctions[np.argmax(np.abs(eigenfunctions), axis=0),
                          np.arange(eigenfunctions.shape[1])] < 0
    eigenfunctions[:, flip] *= -1.0
    evecs = evecs.copy()
    evecs[:, flip] *= -1.0
    scores = z @ evecs
    basis = FPCBasis(eigenfunctions, evals, np.zeros(m), sample.grid)
    return basis, ScoreMatrix(scores, basis)


def ev_cutoff(eigenvalues, threshold):
    """Smallest p whose leading eigenvalues explain >= threshold of variance."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if eigenvalues.size == 0 or np.all(eigenvalues <= 0):
        raise DegenerateSampleError("all eigenvalues are zero")
    cum = np.cumsum(eigenvalues)
    total = cum[-1]
    # 1e-12 slack so threshold=1.0 is reachable despite rounding
    reached = np.nonzero(cum / total >= threshold - 1e-12)[0]
    return int(reached[0]) + 1


def project(sample, basis):
    """Scores of every curve of ``sample`` on ``basis``."""
    if sample.grid != basis.grid:
        raise DimensionError("sample and basis live on different grids")
    scores = sample.inner_products(basis.eigenfunctions)
    return ScoreMatrix(scores, basis)


def reconstruct(scores, basis=None):
    """Curves from scores: X_hat = sum_j s_j psi_j.

    ``scores`` may be a ScoreMatrix (basis optional) or a plain (n, p)
    array with an explicit basis.
    """
    if isinstance(scores, ScoreMatrix):
        basis = basis or scores.basis
        score_values = scores.scores
    else:
        if basis is None:
            raise DimensionError("reconstruct needs a basis for raw score arrays")
        score_values = np.atleast_2d(np.asarray(scores, dtype=float))
    if score_values.shape[1] != basis.p:
        raise DimensionError("score columns must match basis size")
    values = score_values @ basis.eigenfunctions.T
    return FunctionalSample(values, basis.grid)
