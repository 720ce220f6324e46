"""Grids, weighted inner products and discretized functional samples.

Curves live on a shared grid over [0, h].  Integrals are trapezoid
quadrature in the grid weights, optionally augmented with a point mass
at the right endpoint so that the measure is Lebesgue plus a Dirac atom
at h (the space where evaluation-at-h is continuous).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

__all__ = [
    "Grid",
    "FunctionalSample",
    "trapezoid_weights",
    "inner_product",
    "center",
    "write_curves_csv",
    "read_curves_csv",
]


def trapezoid_weights(points):
    """Trapezoid quadrature weights for an increasing point sequence."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or points.size < 2:
        raise DimensionError("need at least two grid points")
    w = np.empty_like(points)
    w[0] = 0.5 * (points[1] - points[0])
    w[-1] = 0.5 * (points[-1] - points[-2])
    w[1:-1] = 0.5 * (points[2:] - points[:-2])
    return w


class Grid:
    """Discretization of [0, h] with quadrature weights and an endpoint atom.

    Parameters
    ----------
    points : array-like
        Increasing evaluation points; first >= 0, last defines h.
    weights : array-like, optional
        Nonnegative quadrature weights, same length as ``points``.
        Defaults to trapezoid weights for the given points.
    endpoint_atom : float
        Extra mass at t = h.  0 gives plain L2; 1 gives Lebesgue + Dirac(h).

    Lag-embedded grids repeat the block-junction point (two curves meet
    there with separate weights); such grids are built internally with
    ``_allow_repeated=True`` and keep weights valid for quadrature.
    """

    __slots__ = ("points", "weights", "endpoint_atom", "_total")

    def __init__(self, points, weights=None, endpoint_atom=0.0, *, _allow_repeated=False):
        points = np.asarray(points, dtype=float).copy()
        if points.ndim != 1 or points.size < 2:
            raise DimensionError("grid needs at least two points")
        diffs = np.diff(points)
        if _allow_repeated:
            if np.any(diffs < 0):
                raise ValueError("grid points must be nondecreasing")
        elif np.any(diffs <= 0):
            raise ValueError("grid points must be strictly increasing")
        if points[0] < 0:
            raise ValueError("grid must start at a nonnegative point")
        if weights is None:
            weights = trapezoid_weights(points)
        else:
            weights = np.asarray(weights, dtype=float).copy()
        if weights.shape != points.shape:
            raise DimensionError("weights length must equal points length")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        endpoint_atom = float(endpoint_atom)
        if endpoint_atom < 0:
            raise ValueError("endpoint_atom must be nonnegative")
        if weights.sum() + endpoint_atom <= 0:
            raise ValueError("total weight must be positive")
        total = weights.copy()
        total[-1] += endpoint_atom
        for arr in (points, weights, total):
            arr.setflags(write=False)
        self.points = points
        self.weights = weights
        self.endpoint_atom = endpoint_atom
        self._total = total

    @classmethod
    def uniform(cls, h, m, endpoint_atom=0.0):
        """Uniform m-point grid on [0, h] with trapezoid weights."""
        return cls(np.linspace(0.0, float(h), int(m)), endpoint_atom=endpoint_atom)

    @property
    def h(self):
        return float(self.points[-1])

    @property
    def m(self):
        return self.points.size

    @property
    def total_weights(self):
        """Quadrature weights with the endpoint atom folded into the last one."""
        return self._total

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
            and self.endpoint_atom == other.endpoint_atom
        )

    def __repr__(self):
        return (
            f"Grid(m={self.m}, h={self.h:g}, atom={self.endpoint_atom:g})"
        )


def inner_product(f, g, grid):
    """Weighted inner product <f, g> = sum w_i f_i g_i + atom * f(h) g(h)."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (grid.m,) or g.shape != (grid.m,):
        raise DimensionError(
            f"curves must have length {grid.m}, got {f.shape} and {g.shape}"
        )
    return float(np.dot(f * g, grid.total_weights))


class FunctionalSample:
    """n curves evaluated on a shared grid (rows = curves)."""

    __slots__ = ("values", "grid", "mean_removed")

    def __init__(self, values, grid, mean_removed=False):
        values = np.atleast_2d(np.asarray(values, dtype=float)).copy()
        if values.ndim != 2:
            raise DimensionError("values must be a 2-d curve matrix")
        if values.shape[1] != grid.m:
            raise DimensionError(
                f"curve length {values.shape[1]} != grid length {grid.m}"
            )
        if values.shape[0] < 1:
            raise DimensionError("sample needs at least one curve")
        if mean_removed:
            col_means = values.mean(axis=0)
            if np.max(np.abs(col_means)) > 1e-10 * max(1.0, np.max(np.abs(values), initial=1.0)):
                raise ValueError("mean_removed sample has nonzero column means")
        values.setflags(write=False)
        self.values = values
        self.grid = grid
        self.mean_removed = bool(mean_removed)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    def sq_norms(self):
        """Squared weighted norm of every curve, shape (n,)."""
        return (self.values**2) @ self.grid.total_weights

    def inner_products(self, other_values):
        """Inner products of every curve against columns of ``other_values``."""
        other = np.asarray(other_values, dtype=float)
        if other.shape[0] != self.m:
            raise DimensionError("curve length mismatch")
        return (self.values * self.grid.total_weights) @ other

    def __repr__(self):
        return f"FunctionalSample(n={self.n}, m={self.m}, centered={self.mean_removed})"


def center(sample):
    """Remove the pointwise mean curve.

    Returns the centered sample (``mean_removed=True``) and the removed
    mean curve so it can be added back later.
    """
    mean_curve = sample.values.mean(axis=0)
    centered = sample.values - mean_curve
    # guard against residual rounding so the mean_removed invariant holds
    centered = centered - centered.mean(axis=0)
    return FunctionalSample(centered, sample.grid, mean_removed=True), mean_curve


def write_curves_csv(sample, path):
    """Write a curve matrix as CSV: atom comment, grid-point row, curve rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# atom={sample.grid.endpoint_atom!r}\n")
        np.savetxt(fh, sample.values, delimiter=",", fmt="%.17g",
                   header=",".join("%.17g" % p for p in sample.grid.points),
                   comments="")


def read_curves_csv(path):
    """Read a curve matrix written by :func:`write_curves_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# atom="):
            raise ValueError(f"{path}: missing '# atom=' header line")
        atom = float(first.split("=", 1)[1])
        points = np.array([float(tok) for tok in fh.readline().split(",")])
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    repeated = bool(np.any(np.diff(points) <= 0))
    grid = Grid(points, endpoint_atom=atom, _allow_repeated=repeated)
    return FunctionalSample(values, grid)
