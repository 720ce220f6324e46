"""Two-stage specification test for Ornstein-Uhlenbeck diffusions.

Stage 1 splits the observed path into daily curves in the atom-weighted
space and runs the ARH(1) goodness-of-fit test.  If linearity is not
rejected at alpha/2, stage 2 compares the parametric autocorrelation
form Gamma_kappa(X)(t) = exp(-kappa t) X(h) against the unrestricted
score regression through a functional F-statistic, calibrated by a
parametric bootstrap that re-simulates OU paths at the fitted
(kappa, sigma) and re-estimates kappa per replicate.  The two stages
are combined with a Bonferroni rule at alpha/2.
"""

from __future__ import annotations

import numpy as np

from .errors import BlowUpError, DegenerateSampleError
from .fpca import ev_cutoff, fpca
from .flmfr import fit_score_regression, _usable_components
from .gof import _gof_with_context, lag_embed
from .grids import FunctionalSample, center
from .sde import (_kappa_from_values, _ou_recursion, _split_values,
                  _window_grid, split_path, _check_finite,
                  estimate_kappa, estimate_sigma, PathRecord)

__all__ = [
    "REJECT_STAGE1", "REJECT_STAGE2", "NOT_REJECTED",
    "SpecTestResult", "ou_residuals", "rssn", "f_statistic",
    "two_stage_test", "parametric_bootstrap_f",
]

REJECT_STAGE1 = "REJECT_STAGE1"
REJECT_STAGE2 = "REJECT_STAGE2"
NOT_REJECTED = "NOT_REJECTED"


class SpecTestResult:
    """Two-stage outcome; p2 and f_statistic are present iff stage 2 ran."""

    __slots__ = ("p1", "p2", "f_statistic", "kappa_hat", "sigma_hat",
                 "decision", "alpha", "B", "seed")

    def __init__(self, p1, p2, f_statistic, kappa_hat, sigma_hat, decision,
                 alpha, B, seed):
        self.p1 = float(p1)
        self.p2 = None if p2 is None else float(p2)
        self.f_statistic = None if f_statistic is None else float(f_statistic)
        self.kappa_hat = float(kappa_hat)
        self.sigma_hat = float(sigma_hat)
        self.decision = decision
        self.alpha = float(alpha)
        self.B = int(B)
        self.seed = int(seed)
        if (self.p2 is None) != (self.p1 < self.alpha / 2):
            raise AssertionError("stage 2 must run exactly when stage 1 passes")

    @property
    def rejected(self):
        return self.decision != NOT_REJECTED

    def to_dict(self):
        return {
            "p1": self.p1,
            "p2": self.p2,
            "f_statistic": self.f_statistic,
            "kappa_hat": self.kappa_hat,
            "sigma_hat": self.sigma_hat,
            "decision": self.decision,
            "alpha": self.alpha,
            "B": self.B,
            "seed": self.seed,
        }

    def __repr__(self):
        p2 = "None" if self.p2 is None else f"{self.p2:.4f}"
        return (f"SpecTestResult(p1={self.p1:.4f}, p2={p2}, "
                f"decision={self.decision})")


def ou_residuals(x_sample, y_sample, kappa):
    """Residuals r_i(t) = Y_i(t) - exp(-kappa t) X_i(h) of the OU form."""
    if not np.isfinite(kappa):
        raise ValueError("kappa must be finite")
    grid = y_sample.grid
    decay = np.exp(-kappa * grid.points)
    residual = y_sample.values - np.outer(x_sample.values[:, -1], decay)
    return FunctionalSample(residual, grid)


def rssn(residuals):
    """Residual sum of squared norms, sum_i ||r_i||^2 under the grid measure."""
    return float(residuals.sq_norms().sum())


def f_statistic(rssn_ou, rssn_flmfr):
    """(RSSN_OU - RSSN_FLMFR) / RSSN_FLMFR; negative when the OU fit wins."""
    if rssn_flmfr == 0.0:
        raise ValueError("unrestricted fit is perfect; F-statistic undefined")
    return (rssn_ou - rssn_flmfr) / rssn_flmfr


def _rssn_values(value_matrix, grid):
    return float(np.sum((value_matrix**2) @ grid.total_weights))


def _f_from_fit(x_centered, y_centered, fitted_curves, kappa):
    grid = y_centered.grid
    decay = np.exp(-kappa * grid.points)
    ou_resid = y_centered.values - np.outer(x_centered.values[:, -1], decay)
    flm_resid = y_centered.values - fitted_curves
    return f_statistic(_rssn_values(ou_resid, grid), _rssn_values(flm_resid, grid))


def _fresh_fit_f(sample, kappa, ev_threshold, rule, cv_seed, n_lambdas, folds,
                 tol, max_iter):
    """Fresh FPCR-L1S fit on a curve sample, then the F-statistic at kappa."""
    centered_raw, _ = center(sample)
    x_raw, y_raw = lag_embed(centered_raw, 1)
    x_c, _ = center(x_raw)
    y_c, _ = center(y_raw)
    x_basis, x_scoremat = fpca(x_c)
    y_basis, y_scoremat = fpca(y_c)
    x_basis, x_scores = _usable_components(x_basis, x_scoremat.scores)
    y_basis, y_scores = _usable_components(y_basis, y_scoremat.scores)
    p = ev_cutoff(x_basis.eigenvalues, ev_threshold)
    q = ev_cutoff(y_basis.eigenvalues, ev_threshold)
    X = x_scores[:, :p]
    Y = y_scores[:, :q]
    coef, selected, _, _, _ = fit_score_regression(
        X, Y, rule=rule, seed=cv_seed, n_lambdas=n_lambdas, folds=folds,
        tol=tol, max_iter=max_iter)
    if selected.size == 0:
        fitted_curves = np.zeros_like(y_c.values)
    else:
        fitted_scores = X[:, selected] @ coef[selected]
        fitted_curves = fitted_scores @ y_basis.truncate(q).eigenfunctions.T
    return _f_from_fit(x_c, y_c, fitted_curves, kappa)


def parametric_bootstrap_f(kappa_hat, sigma_hat, n, h, delta, B,
                           ev_threshold=0.995, seed=0, rule="one_se",
                           n_lambdas=20, folds=10, tol=1e-8, max_iter=10000):
    """B bootstrap F-statistics from freshly simulated OU paths.

    Each replicate simulates d xi* = -kappa_hat xi* dt + sigma_hat dW*
    from xi*_0 = 0 on [0, n h] at step delta, centers and splits it like
    the data, re-estimates kappa and refits the score regression.  A
    degenerate replicate is retried once on a fresh substream.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    steps_per = round(h / delta)
    n_steps = steps_per * n
    grid = _window_grid(delta, steps_per)
    children = np.random.SeedSequence(seed).spawn(2 * B)
    out = np.empty(B)
    for b in range(B):
        try:
            out[b] = _bootstrap_replicate(
                children[b], kappa_hat, sigma_hat, n_steps, steps_per, grid,
                delta, ev_threshold, rule, n_lambdas, folds, tol, max_iter)
        except (BlowUpError, DegenerateSampleError):
            out[b] = _bootstrap_replicate(
                children[B + b], kappa_hat, sigma_hat, n_steps, steps_per, grid,
                delta, ev_threshold, rule, n_lambdas, folds, tol, max_iter)
    return out


def _bootstrap_replicate(seed_seq, kappa_hat, sigma_hat, n_steps, steps_per,
                         grid, delta, ev_threshold, rule, n_lambdas, folds,
                         tol, max_iter):
    sim_seq, cv_seq = seed_seq.spawn(2)
    rng = np.random.default_rng(sim_seq)
    values = _ou_recursion(kappa_hat, sigma_hat, 0.0, delta,
                           rng.standard_normal(n_steps))
    _check_finite(values)
    values = values - values.mean()
    sample = _split_values(values, steps_per, grid)
    kappa_b = _kappa_from_values(values, delta)
    return _fresh_fit_f(sample, kappa_b, ev_threshold, rule,
                        int(cv_seq.generate_state(1)[0]), n_lambdas, folds,
                        tol, max_iter)


def two_stage_test(path, h=1.0, B=500, alpha=0.05, ev_threshold=0.995, seed=0,
                   rule="one_se", n_lambdas=20, folds=10, tol=1e-8,
                   max_iter=10000):
    """Run the two-stage OU specification test on a discretized path.

    The path's empirical mean is removed first (the null is a centered
    OU process).  Stage 1 tests the ARH(1) relation of the split daily
    curves at level alpha/2; stage 2, run only when stage 1 does not
    reject, bootstraps the functional F-statistic.
    """
    centered = PathRecord(path.times, path.values - path.values.mean())
    sample = split_path(centered, h)
    return _two_stage_core(sample, centered.values, centered.delta, h, B,
                           alpha, ev_threshold, seed, rule, n_lambdas, folds,
                           tol, max_iter)


def _two_stage_core(sample, centered_values, delta, h, B, alpha, ev_threshold,
                    seed, rule="one_se", n_lambdas=20, folds=10, tol=1e-8,
                    max_iter=10000):
    """Shared body for path- and tick-based entry points.

    ``sample`` holds the n split curves on the atom-weighted grid;
    ``centered_values`` is the centered scalar series the estimators of
    kappa and sigma run on.
    """
    stage1_seq, stage2_seq = np.random.SeedSequence(seed).spawn(2)
    gof_result, ctx = _gof_with_context(
        sample, 1, B=B, ev_threshold=ev_threshold,
        seed=int(stage1_seq.generate_state(1)[0]), rule=rule,
        n_lambdas=n_lambdas, folds=folds, tol=tol, max_iter=max_iter)
    p1 = gof_result.p_value
    kappa_hat = _kappa_from_values(centered_values, delta)
    increments = np.diff(centered_values)
    sigma_hat = float(np.sqrt(np.dot(increments, increments)
                              / (increments.size * delta)))
    if p1 < alpha / 2:
        return SpecTestResult(p1, None, None, kappa_hat, sigma_hat,
                              REJECT_STAGE1, alpha, B, seed)
    f_n = _f_from_fit(ctx.x_centered, ctx.y_centered, ctx.fitted_curves(),
                      kappa_hat)
    boot_f = parametric_bootstrap_f(
        kappa_hat, sigma_hat, sample.n, h, delta, B,
        ev_threshold=ev_threshold, seed=int(stage2_seq.generate_state(1)[0]),
        rule=rule, n_lambdas=n_lambdas, folds=folds, tol=tol,
        max_iter=max_iter)
    p2 = float(np.count_nonzero(f_n <= boot_f)) / B
    decision = REJECT_STAGE2 if p2 < alpha / 2 else NOT_REJECTED
    return SpecTestResult(p1, p2, f_n, kappa_hat, sigma_hat, decision,
                          alpha, B, seed)
