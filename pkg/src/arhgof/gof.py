"""Goodness-of-fit test for autoregressive Hilbertian processes.

Pipeline: lag-embed the curve series into functional predictor/response
pairs, fit the score regression, and measure the residual-marked
empirical process through its projected Cramér-von Mises norm, which
reduces to the quadratic form

    stat = (1/n^2) * 2 pi^(pt/2 + q/2 - 1) / (q Gamma(pt/2) Gamma(q/2))
           * Tr[E^T A. E],

where A. accumulates surface areas of spherical regions determined by
the pairwise geometry of the projected regressor scores.  The test
evaluates the form on studentized marks (residual directions scaled by
their empirical dispersion, which amounts to a covariance-adapted
projection measure on the response sphere); without this, response
directions with small eigenvalues are swamped and power against thinly
spread alternatives collapses.  Calibration is a wild bootstrap with
two-point golden-ratio multipliers, each replicate studentized by its
own dispersions; A. and the fitted design are reused across replicates.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateSampleError, DimensionError
from .fpca import fpca, ev_cutoff
from .flmfr import fit_score_regression, _usable_components
from .grids import FunctionalSample, Grid, center

__all__ = [
    "AdotMatrix",
    "GofResult",
    "OrderScanResult",
    "lag_embed",
    "adot",
    "pcvm_statistic",
    "wild_multipliers",
    "arh_gof_test",
    "arh_order_scan",
]

# coincidence test on squared score distances
_COINCIDENCE_TOL = 1e-12

# two-point golden-ratio distribution: zero mean, unit variance
_GOLDEN_LOW = (1.0 - math.sqrt(5.0)) / 2.0
_GOLDEN_HIGH = (1.0 + math.sqrt(5.0)) / 2.0
_GOLDEN_P_LOW = (5.0 + math.sqrt(5.0)) / 10.0


class AdotMatrix:
    """Pairwise spherical-area matrix built from projected regressor scores."""

    __slots__ = ("entries", "p_tilde")

    def __init__(self, entries, p_tilde):
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError("A-dot matrix must be square")
        self.entries = entries
        self.p_tilde = int(p_tilde)

    @property
    def n(self):
        return self.entries.shape[0]

    def __repr__(self):
        return f"AdotMatrix(n={self.n}, p_tilde={self.p_tilde})"


class GofResult:
    """Outcome of one goodness-of-fit test run."""

    __slots__ = ("statistic", "boot_statistics", "p_value", "p", "q",
                 "p_tilde_set", "lambda_", "seed", "B", "z", "small_b_warning")

    def __init__(self, statistic, boot_statistics, p_value, p, q, p_tilde_set,
                 lambda_, seed, z, small_b_warning=False):
        self.statistic = float(statistic)
        self.boot_statistics = np.asarray(boot_statistics, dtype=float)
        self.p_value = float(p_value)
        self.p = int(p)
        self.q = int(q)
        self.p_tilde_set = [int(j) for j in p_tilde_set]
        self.lambda_ = float(lambda_)
        self.seed = int(seed)
        self.B = int(self.boot_statistics.size)
        self.z = int(z)
        self.small_b_warning = bool(small_b_warning)

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "B": self.B,
            "p": self.p,
            "q": self.q,
            "p_tilde_set": self.p_tilde_set,
            "lambda": self.lambda_,
            "seed": self.seed,
        }

    def __repr__(self):
        return (f"GofResult(z={self.z}, statistic={self.statistic:.6g}, "
                f"p_value={self.p_value:.4f}, B={self.B})")


class OrderScanResult:
    """Sequential order scan output: first non-rejected order and all p-values."""

    __slots__ = ("order", "p_values", "alpha", "z_max")

    def __init__(self, order, p_values, alpha, z_max):
        self.order = order  # None when every order up to z_max was rejected
        self.p_values = [float(p) for p in p_values]
        self.alpha = float(alpha)
        self.z_max = int(z_max)

    def to_dict(self):
        return {
            "order": self.order,
            "p_values": self.p_values,
            "alpha": self.alpha,
            "z_max": self.z_max,
        }

    def __repr__(self):
        return f"OrderScanResult(order={self.order}, p_values={self.p_values})"


def lag_embed(sample, z):
    """Stack z lagged curves into single predictor curves.

    Given curves X_0, ..., X_{N-1} on an m-point grid over [0, h], pair
    i (0-based, i = 0..N-z-1) gets

      predictor block r (r = 1..z): curve X_{z-r+i} compressed onto
        [(r-1)h/z, rh/z], quadrature mass scaled by 1/z,
      response: curve X_{i+z} on the original grid,

    so the predictor's squared norm is the average of the stacked
    curves' squared norms.  For z = 1 this is the identity embedding.
    """
    if z < 1:
        raise ValueError("lag order z must be >= 1 for embedding")
    total = sample.n
    n = total - z
    if n < 1:
        raise ValueError(
            f"insufficient lags: need more than {z} curves, got {total}"
        )
    grid = sample.grid
    m = grid.m
    h = grid.h
    values = sample.values
    x_values = np.empty((n, z * m))
    for r in range(1, z + 1):
        x_values[:, (r - 1) * m:r * m] = values[z - r:z - r + n]
    y_values = values[z:]
    if z == 1:
        x_grid = grid
    else:
        pts = np.concatenate([((r - 1) * h + grid.points) / z for r in range(1, z + 1)])
        wts = np.tile(grid.weights / z, z)
        # junction masses (including the atom's copies) keep the block norms
        # averaging exactly: ||X~||^2 = (1/z) sum_r ||X_{.}||^2
        atom = grid.endpoint_atom / z
        for r in range(1, z):
            wts[r * m - 1] += atom
        x_grid = Grid(pts, wts, endpoint_atom=atom, _allow_repeated=True)
    x_sample = FunctionalSample(x_values, x_grid)
    y_sample = FunctionalSample(y_values, grid)
    return x_sample, y_sample


def _adot_angle_factor(p_tilde):
    return math.exp((p_tilde / 2.0 - 1.0) * math.log(math.pi)
                    - math.lgamma(p_tilde / 2.0))


def adot(x_scores):
    """Accumulated spherical-area matrix of an (n, p_tilde) score matrix.

    Entry (i, j) sums over r the angular measures of the sphere regions
    where both x_i and x_j project below x_r, scaled by
    pi^(pt/2-1)/Gamma(pt/2): 2*pi when all three points coincide, pi
    when exactly the r-point matches one of i, j, and otherwise
    pi - arccos of the normalized scalar product of (x_i - x_r) and
    (x_j - x_r).
    """
    X = np.atleast_2d(np.asarray(x_scores, dtype=float))
    n, p_tilde = X.shape
    if p_tilde < 1:
        raise DimensionError("adot needs at least one score column")
    gram = X @ X.T
    sq = np.diag(gram)[:, None] + np.diag(gram)[None, :] - 2.0 * gram
    np.fill_diagonal(sq, 0.0)
    np.maximum(sq, 0.0, out=sq)
    asum = np.zeros((n, n))
    for r in range(n):
        d = X - X[r]
        g = d @ d.T
        nr = sq[:, r]
        denom = np.sqrt(np.outer(nr, nr))
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = g / denom
        np.clip(cosang, -1.0, 1.0, out=cosang)
        ang = math.pi - np.arccos(cosang)
        eq = nr <= _COINCIDENCE_TOL
        if eq.any():
            neq = ~eq
            ang[np.ix_(eq, neq)] = math.pi
            ang[np.ix_(neq, eq)] = math.pi
            ang[np.ix_(eq, eq)] = 2.0 * math.pi
        asum += ang
    entries = asum * _adot_angle_factor(p_tilde)
    entries = 0.5 * (entries + entries.T)
    return AdotMatrix(entries, p_tilde)


def _pcvm_log_constant(n, p_tilde, q):
    return (math.log(2.0)
            + (p_tilde / 2.0 + q / 2.0 - 1.0) * math.log(math.pi)
            - math.log(q)
            - math.lgamma(p_tilde / 2.0)
            - math.lgamma(q / 2.0)
            - 2.0 * math.log(n))


def pcvm_statistic(residual_scores, adot_matrix, p_tilde=None, q=None):
    """Projected Cramér-von Mises statistic from residual scores and A-dot."""
    E = np.atleast_2d(np.asarray(residual_scores, dtype=float))
    if E.shape[0] != adot_matrix.n:
        raise DimensionError("residual rows must match the A-dot dimension")
    n = E.shape[0]
    if p_tilde is None:
        p_tilde = adot_matrix.p_tilde
    if q is None:
        q = E.shape[1]
    tr = float(np.sum((adot_matrix.entries @ E) * E))
    value = math.exp(_pcvm_log_constant(n, p_tilde, q)) * tr
    if value < 0.0:
        # A-dot is positive semidefinite in practice; tolerate rounding only
        if value < -1e-10 * max(1.0, abs(tr)):
            raise AssertionError(f"PCvM statistic came out negative: {value}")
        value = 0.0
    return value


def wild_multipliers(n, seed):
    """n i.i.d. draws from the two-point golden-ratio distribution."""
    rng = np.random.default_rng(seed)
    return _golden_draws(rng, int(n))


def _golden_draws(rng, size):
    return np.where(rng.random(size) < _GOLDEN_P_LOW, _GOLDEN_LOW, _GOLDEN_HIGH)


def _studentize(scores):
    """Scale each column by its dispersion; zero columns stay zero."""
    scale = scores.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return scores / scale


class _GofContext:
    """Internal fit context shared with the two-stage specification test."""

    __slots__ = ("x_centered", "y_centered", "x_basis", "y_basis", "x_scores",
                 "y_scores", "coef", "selected", "hat", "residual_scores",
                 "lambda_", "p", "q")

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw[name])

    @property
    def fitted_scores(self):
        if self.selected.size == 0:
            return np.zeros_like(self.y_scores)
        return self.x_scores[:, self.selected] @ self.coef[self.selected]

    def fitted_curves(self):
        return self.fitted_scores @ self.y_basis.eigenfunctions.T


def _gof_with_context(raw_sample, z, B=500, ev_threshold=0.995, seed=0,
                      rule="one_se", n_lambdas=20, folds=10, tol=1e-8,
                      max_iter=10000, boot_chunk=128):
    if z < 0:
        raise ValueError("order z must be >= 0")
    z_embed = max(z, 1)
    if raw_sample.n < z_embed + 1 or raw_sample.n < z + 2:
        raise ValueError(
            f"need at least {max(z + 2, z_embed + 1)} curves to test order {z}"
        )
    if not np.any(raw_sample.values):
        raise DegenerateSampleError("sample is identically zero")
    small_b_warning = B < 100

    root = np.random.SeedSequence(seed)
    cv_seq, boot_seq = root.spawn(2)

    centered_raw, _ = center(raw_sample)
    x_raw, y_raw = lag_embed(centered_raw, z_embed)
    x_c, _ = center(x_raw)
    y_c, _ = center(y_raw)
    n = x_c.n

    x_basis, x_scoremat = fpca(x_c)
    y_basis, y_scoremat = fpca(y_c)
    x_basis, x_scores_all = _usable_components(x_basis, x_scoremat.scores)
    y_basis, y_scores_all = _usable_components(y_basis, y_scoremat.scores)
    p = ev_cutoff(x_basis.eigenvalues, ev_threshold)
    q = ev_cutoff(y_basis.eigenvalues, ev_threshold)
    X = x_scores_all[:, :p]
    Y = y_scores_all[:, :q]

    if z == 0:
        # no-effect null: beta = 0, residuals are the centered responses
        coef = np.zeros((p, q))
        selected = np.array([], dtype=int)
        hat = np.zeros((n, n))
        residual = Y.copy()
        lam = 0.0
    else:
        cv_seed = int(cv_seq.generate_state(1)[0])
        coef, selected, lam, hat, residual = fit_score_regression(
            X, Y, rule=rule, seed=cv_seed, n_lambdas=n_lambdas, folds=folds,
            tol=tol, max_iter=max_iter)

    # A-dot depends only on regressor scores: use the selected directions,
    # falling back to all p when the penalty retained none
    if selected.size > 0:
        adot_cols = selected
    else:
        adot_cols = np.arange(p)
    a_matrix = adot(X[:, adot_cols])
    p_tilde = a_matrix.p_tilde
    statistic = pcvm_statistic(_studentize(residual), a_matrix, p_tilde, q)

    fitted = hat @ Y if selected.size > 0 else np.zeros_like(Y)
    log_const = _pcvm_log_constant(n, p_tilde, q)
    const = math.exp(log_const)
    boot_children = boot_seq.spawn(B)
    boot_stats = np.empty(B)
    refit = selected.size > 0
    for start in range(0, B, boot_chunk):
        idx = range(start, min(start + boot_chunk, B))
        V = np.stack([_golden_draws(np.random.default_rng(boot_children[b]), n)
                      for b in idx])
        y_star = fitted[None, :, :] + V[:, :, None] * residual[None, :, :]
        y_star -= y_star.mean(axis=1, keepdims=True)
        resid_star = y_star - hat @ y_star if refit else y_star
        scale = resid_star.std(axis=1, keepdims=True)
        np.copyto(scale, 1.0, where=scale == 0.0)
        resid_star /= scale
        trs = np.sum((a_matrix.entries @ resid_star) * resid_star, axis=(1, 2))
        boot_stats[list(idx)] = const * trs
    np.maximum(boot_stats, 0.0, out=boot_stats)

    p_value = float(np.count_nonzero(boot_stats >= statistic)) / B
    result = GofResult(statistic, boot_stats, p_value, p, q,
                       adot_cols if selected.size > 0 else [],
                       lam, seed, z, small_b_warning)
    context = _GofContext(
        x_centered=x_c, y_centered=y_c, x_basis=x_basis.truncate(p),
        y_basis=y_basis.truncate(q), x_scores=X, y_scores=Y, coef=coef,
        selected=selected, hat=hat, residual_scores=residual, lambda_=lam,
        p=p, q=q)
    return result, context


def arh_gof_test(raw_sample, z, B=500, ev_threshold=0.995, seed=0,
                 rule="one_se", n_lambdas=20, folds=10, tol=1e-8,
                 max_iter=10000):
    """Wild-bootstrap GoF test of the order-z autoregressive null.

    For z >= 1 the null is that each curve is a Hilbert-Schmidt linear
    image of its z predecessors plus white noise; z = 0 tests no effect
    of the previous curve (residuals are the centered responses and the
    bootstrap resamples them directly).

    Returns a GofResult with p_value = #{boot >= statistic} / B.
    """
    result, _ = _gof_with_context(
        raw_sample, z, B=B, ev_threshold=ev_threshold, seed=seed, rule=rule,
        n_lambdas=n_lambdas, folds=folds, tol=tol, max_iter=max_iter)
    return result


def arh_order_scan(raw_sample, z_max, B=500, ev_threshold=0.995, alpha=0.05,
                   seed=0, **kwargs):
    """Test orders z = 0, 1, ..., z_max in sequence.

    Returns the smallest order whose p-value is >= alpha together with
    every p-value computed; ``order`` is None when all are rejected.
    """
    if z_max < 0:
        raise ValueError("z_max must be >= 0")
    children = np.random.SeedSequence(seed).spawn(z_max + 1)
    p_values = []
    order = None
    for z in range(z_max + 1):
        res = arh_gof_test(raw_sample, z, B=B, ev_threshold=ev_threshold,
                           seed=int(children[z].generate_state(1)[0]), **kwargs)
        p_values.append(res.p_value)
        if order is None and res.p_value >= alpha:
            order = z
            break
    return OrderScanResult(order, p_values, alpha, z_max)
