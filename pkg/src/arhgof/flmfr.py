"""Function-on-function linear regression via FPC scores.

The estimator runs in four steps: FPCA on predictor and response
samples, explained-variance cutoffs (p, q), group-LASSO selection of
predictor directions at a cross-validated penalty, and an unpenalized
least-squares refit on the selected directions.  The refit hat matrix
and residual scores drive the bootstrap calibration downstream.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, PreconditionError
from .fpca import FPCBasis, fpca, ev_cutoff, reconstruct
from .glasso import group_lasso, select_lambda
from .grids import FunctionalSample

__all__ = ["FitResult", "fpcr_l1s_fit", "fit_score_regression", "residual_curves"]

# FPC directions whose eigenvalue is this small relative to the leading one
# carry no variation and are dropped before regression
_RANK_RTOL = 1e-10


class FitResult:
    """Fitted score regression with selection metadata.

    Attributes
    ----------
    coef : ndarray, shape (p, q)
        Coefficients in original row indices; unselected rows are zero.
    selected : ndarray of int
        Indices of the predictor directions kept by the group LASSO.
    lambda_ : float
        Penalty used for selection.
    hat_matrix : ndarray, shape (n, n)
        Projection onto the selected score columns (zero when nothing
        was selected).
    residual_scores : ndarray, shape (n, q)
        Y_q - X_selected @ coef[selected].
    x_basis, y_basis : FPCBasis
    x_scores, y_scores : ndarray
        The (n, p) and (n, q) score matrices the fit ran on.
    """

    __slots__ = ("coef", "selected", "lambda_", "hat_matrix", "residual_scores",
                 "x_basis", "y_basis", "x_scores", "y_scores")

    def __init__(self, coef, selected, lambda_, hat_matrix, residual_scores,
                 x_basis, y_basis, x_scores, y_scores):
        self.coef = coef
        self.selected = np.asarray(selected, dtype=int)
        self.lambda_ = float(lambda_)
        self.hat_matrix = hat_matrix
        self.residual_scores = residual_scores
        self.x_basis = x_basis
        self.y_basis = y_basis
        self.x_scores = x_scores
        self.y_scores = y_scores

    @property
    def n(self):
        return self.residual_scores.shape[0]

    @property
    def p(self):
        return self.x_scores.shape[1]

    @property
    def q(self):
        return self.y_scores.shape[1]

    @property
    def fitted_scores(self):
        if self.selected.size == 0:
            return np.zeros_like(self.y_scores)
        return self.x_scores[:, self.selected] @ self.coef[self.selected]

    def to_dict(self):
        """JSON-friendly diagnostics (large matrices summarized)."""
        return {
            "p": int(self.p),
            "q": int(self.q),
            "selected": [int(j) for j in self.selected],
            "lambda": self.lambda_,
            "coef": [[float(v) for v in row] for row in self.coef],
            "hat_trace": float(np.trace(self.hat_matrix)),
            "residual_sq_norm": float(np.sum(self.residual_scores**2)),
        }

    def __repr__(self):
        return (f"FitResult(n={self.n}, p={self.p}, q={self.q}, "
                f"selected={list(self.selected)}, lambda={self.lambda_:.4g})")


def _usable_components(basis, scores):
    """Drop zero-variance FPC directions (relative eigenvalue cutoff)."""
    lam = basis.eigenvalues
    keep = int(np.sum(lam > _RANK_RTOL * max(lam[0], np.finfo(float).tiny)))
    keep = max(keep, 1)
    return basis.truncate(keep), scores[:, :keep]


def fit_score_regression(X, Y, rule="one_se", seed=0, n_lambdas=20, folds=10,
                         tol=1e-8, max_iter=10000, forced_lambda=None):
    """Group-LASSO selection plus unpenalized refit on raw score matrices.

    Returns ``(coef, selected, lambda_, hat_matrix, residual_scores)``
    with ``coef`` already embedded at the original row indices.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, p = X.shape
    q = Y.shape[1]
    if forced_lambda is None:
        lam = select_lambda(X, Y, rule=rule, folds=folds, seed=seed,
                            n_lambdas=n_lambdas, tol=tol, max_iter=max_iter)
    else:
        lam = float(forced_lambda)
    sel_fit = group_lasso(X, Y, lam, tol=tol, max_iter=max_iter)
    selected = sel_fit.selected_rows
    coef = np.zeros((p, q))
    if selected.size == 0:
        # no linear effect retained
        hat = np.zeros((n, n))
        residual = Y.copy()
    else:
        Xs = X[:, selected]
        qmat, _ = np.linalg.qr(Xs)
        hat = qmat @ qmat.T
        beta, *_ = np.linalg.lstsq(Xs, Y, rcond=None)
        coef[selected] = beta
        residual = Y - Xs @ beta
    return coef, selected, lam, hat, residual


def fpcr_l1s_fit(x_sample, y_sample, ev_threshold=0.995, rule="one_se", seed=0,
                 n_lambdas=20, folds=10, tol=1e-8, max_iter=10000):
    """FPCR-L1S fit of a functional response on a functional predictor.

    Both samples must be centered and of equal size.  Returns a
    FitResult whose hat matrix is idempotent and whose residual scores
    are exactly Y_q minus the refitted values.
    """
    if x_sample.n != y_sample.n:
        raise DimensionError("predictor and response samples must have equal n")
    if not (x_sample.mean_removed and y_sample.mean_removed):
        raise PreconditionError("fpcr_l1s_fit requires centered samples")
    x_basis_full, x_scores_full = fpca(x_sample)
    y_basis_full, y_scores_full = fpca(y_sample)
    x_basis_full, x_scores = _usable_components(x_basis_full, x_scores_full.scores)
    y_basis_full, y_scores = _usable_components(y_basis_full, y_scores_full.scores)
    p = ev_cutoff(x_basis_full.eigenvalues, ev_threshold)
    q = ev_cutoff(y_basis_full.eigenvalues, ev_threshold)
    X = x_scores[:, :p]
    Y = y_scores[:, :q]
    coef, selected, lam, hat, residual = fit_score_regression(
        X, Y, rule=rule, seed=seed, n_lambdas=n_lambdas, folds=folds,
        tol=tol, max_iter=max_iter)
    return FitResult(coef, selected, lam, hat, residual,
                     x_basis_full.truncate(p), y_basis_full.truncate(q), X, Y)


def residual_curves(fit):
    """Residual scores pushed back through the response basis."""
    return reconstruct(fit.residual_scores, fit.y_basis)
