"""Simulators for ARH(z) and nonlinear functional autoregressions.

Kernels are the parabolic and Gaussian surfaces used in the simulation
scenarios, rescaled to target Hilbert-Schmidt norms; innovations and
initial curves are standard Brownian bridges; stationarity of a kernel
set is checked numerically through the companion block operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, InstabilityError
from .grids import FunctionalSample, Grid

__all__ = [
    "KernelSpec",
    "ARHSpec",
    "kernel_surface",
    "apply_kernel",
    "hs_norm",
    "brownian_bridge",
    "simulate_arh",
    "check_stationarity",
]

PARABOLIC = "parabolic"
GAUSSIAN = "gaussian"

NONLINEARITY_NONE = "none"
NONLINEARITY_SQUARE = "square"
NONLINEARITY_SQRT_ABS = "sqrt_abs"

_DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class KernelSpec:
    """Bivariate kernel on [0,1]^2.

    parabolic: rho(s,t) = c * (2 - (2s-1)^2 - (2t-1)^2)
    gaussian:  rho(s,t) = c * exp(-(t^2 + s^2)/2)

    When ``target_hs_norm`` is set the constant is rescaled so the
    quadrature Hilbert-Schmidt norm matches it.
    """

    family: str
    constant: float = 1.0
    target_hs_norm: Optional[float] = None

    def __post_init__(self):
        if self.family not in (PARABOLIC, GAUSSIAN):
            raise ValueError(f"unknown kernel family {self.family!r}")


@dataclass(frozen=True)
class ARHSpec:
    """Functional autoregression scenario: kernels, nonlinearity, grid."""

    kernels: tuple
    nonlinearity: str = NONLINEARITY_NONE
    grid: Grid = field(default_factory=lambda: Grid.uniform(1.0, 101))
    burn_in: int = 200

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if self.nonlinearity not in (NONLINEARITY_NONE, NONLINEARITY_SQUARE,
                                     NONLINEARITY_SQRT_ABS):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")

    @property
    def z(self):
        return len(self.kernels)


def _base_surface(family, s, t):
    ss, tt = np.meshgrid(s, t, indexing="ij")
    if family == PARABOLIC:
        return 2.0 - (2.0 * ss - 1.0) ** 2 - (2.0 * tt - 1.0) ** 2
    return np.exp(-(tt**2 + ss**2) / 2.0)


def hs_norm(surface, grid):
    """Quadrature Hilbert-Schmidt norm sqrt(sum_ij w_i w_j rho_ij^2)."""
    w = grid.weights  # Lebesgue part only; kernels live in plain L2
    return float(np.sqrt(np.einsum("i,j,ij->", w, w, np.asarray(surface) ** 2)))


def kernel_surface(spec, grid):
    """Kernel values on grid x grid; entry (i, j) = rho(points[i], points[j]).

    First index is the integration variable s, second the output t.
    """
    base = _base_surface(spec.family, grid.points, grid.points)
    if spec.target_hs_norm is not None:
        base_norm = hs_norm(base, grid)
        constant = spec.target_hs_norm / base_norm
    else:
        constant = spec.constant
    return constant * base


def apply_kernel(kernel, curve, grid):
    """Integral operator (Gamma X)(t) = int rho(s, t) X(s) ds by quadrature."""
    kernel = np.asarray(kernel, dtype=float)
    curve = np.asarray(curve, dtype=float)
    if kernel.shape != (grid.m, grid.m) or curve.shape[-1] != grid.m:
        raise DimensionError("kernel/curve dimensions must match the grid")
    return (curve * grid.weights) @ kernel


def _brownian_bridge_batch(grid, n, rng):
    """n standard Brownian bridges on the grid; exact Gaussian increments."""
    pts = grid.points
    dt = np.diff(pts, prepend=0.0)
    dt[0] = pts[0]  # first increment from t=0
    incr = rng.standard_normal((n, pts.size)) * np.sqrt(dt)
    w = np.cumsum(incr, axis=1)
    span = pts[-1]
    return w - (pts / span) * w[:, -1][:, None]


def brownian_bridge(grid, seed):
    """One standard Brownian bridge: B(t) = W(t) - (t/h) W(h)."""
    rng = np.random.default_rng(seed)
    return _brownian_bridge_batch(grid, 1, rng)[0]


def _pointwise_map(values, nonlinearity):
    if nonlinearity == NONLINEARITY_SQUARE:
        return values**2
    if nonlinearity == NONLINEARITY_SQRT_ABS:
        return np.sqrt(np.abs(values))
    return values


def simulate_arh(spec, n, seed):
    """Simulate an ARH(z) path and return its last n + z curves.

    Iterates X_t = sum_r Gamma_r(g(X_{t-r})) + E_t with Brownian-bridge
    errors and initial curves, discards ``spec.burn_in`` transient
    curves, and returns n + z curves so that lag-embedding at order z
    yields exactly n predictor/response pairs.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = spec.grid
    z = spec.z
    rng = np.random.default_rng(seed)
    kernels = [kernel_surface(k, grid) for k in spec.kernels]
    wk = [grid.weights[:, None] * k for k in kernels]  # fold quadrature in once
    n_iter = spec.burn_in + n + z
    curves = list(_brownian_bridge_batch(grid, z, rng)) if z else []
    errors = _brownian_bridge_batch(grid, n_iter, rng)
    for step in range(n_iter):
        new = errors[step].copy()
        for r in range(z):
            lagged = _pointwise_map(curves[-1 - r], spec.nonlinearity)
            new += lagged @ wk[r]
        if np.max(np.abs(new)) > _DIVERGENCE_LIMIT:
            raise InstabilityError(
                f"ARH recursion diverged at step {step} (|X| > {_DIVERGENCE_LIMIT:g})"
            )
        curves.append(new)
    values = np.array(curves[-(n + z):])
    return FunctionalSample(values, grid)


def check_stationarity(kernels, grid, k_max=10, power_iters=200):
    """Numerical check of the stationarity condition ||Gamma-bar^k|| < 1.

    Builds the discretized companion block operator (kernel quadrature
    matrices in the top row, identities below) and estimates the
    operator norm of its k-th powers, k = 1..k_max, by power iteration
    in the weighted geometry.  Returns (stationary, norm_estimates).
    """
    kernels = list(kernels)
    z = len(kernels)
    if z < 1:
        raise ValueError("need at least one kernel")
    m = grid.m
    w = grid.weights
    blocks = [kernel_surface(k, grid).T * w[None, :] for k in kernels]
    companion = np.zeros((z * m, z * m))
    for r, blk in enumerate(blocks):
        companion[:m, r * m:(r + 1) * m] = blk
    for r in range(1, z):
        companion[r * m:(r + 1) * m, (r - 1) * m:r * m] = np.eye(m)
    sw = np.sqrt(np.tile(w, z))
    sym = companion * (sw[:, None] / sw[None, :])
    estimates = []
    power = np.eye(z * m)
    v0 = np.ones(z * m) + 1e-3 * np.arange(z * m)
    for _ in range(k_max):
        power = power @ sym
        v = v0 / np.linalg.norm(v0)
        est = 0.0
        for _ in range(power_iters):
            u = power.T @ (power @ v)
            nrm = np.linalg.norm(u)
            if nrm == 0.0:
                break
            v = u / nrm
            est = np.sqrt(nrm)
        estimates.append(float(est))
    return bool(min(estimates) < 1.0), estimates
