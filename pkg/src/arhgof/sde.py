"""Euler-Maruyama diffusion simulation, path splitting and OU estimators.

One engine covers the whole scenario zoo (OU, CKLS, inverse Feller,
Ait-Sahalia, radial OU, driftless null).  Linear-drift families (OU,
NULL) run through an equivalent vectorized recursion; the remaining
families step through an explicit loop with reflection at a small floor
so inverse and fractional-power terms stay defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import BlowUpError, DegenerateSampleError, DimensionError, DomainError
from .grids import FunctionalSample, Grid

__all__ = [
    "OU", "CKLS", "INVERSE_FELLER", "AIT_SAHALIA", "RADIAL_OU", "NULL",
    "SDEModel", "PathRecord", "drift_vol", "euler_maruyama", "split_path",
    "estimate_kappa", "estimate_sigma", "write_path_csv", "read_path_csv",
]

OU = "ou"
CKLS = "ckls"
INVERSE_FELLER = "inverse_feller"
AIT_SAHALIA = "ait_sahalia"
RADIAL_OU = "radial_ou"
NULL = "null"

_FAMILIES = {
    OU: ("kappa", "sigma"),
    CKLS: ("kappa", "mu", "sigma", "gamma"),
    INVERSE_FELLER: ("kappa", "mu", "sigma"),
    AIT_SAHALIA: ("tau_m1", "tau_0", "tau_1", "tau_2", "sigma"),
    RADIAL_OU: ("lam", "kappa", "sigma"),
    NULL: ("sigma",),
}

# reflection floor for positivity-constrained families
_POSITIVITY_EPS = 1e-8


@dataclass(frozen=True)
class SDEModel:
    """Parametric diffusion specification dXi = m(Xi) dt + s(Xi) dW."""

    family: str
    params: dict = field(default_factory=dict)
    x0: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown SDE family {self.family!r}")
        required = _FAMILIES[self.family]
        missing = [k for k in required if k not in self.params]
        if missing:
            raise ValueError(f"{self.family} model missing parameters {missing}")
        extra = [k for k in self.params if k not in required]
        if extra:
            raise ValueError(f"{self.family} model has unknown parameters {extra}")
        if self.params["sigma"] <= 0:
            raise ValueError("sigma must be positive")
        if "kappa" in required and self.params["kappa"] <= 0:
            raise ValueError("kappa must be positive")
        object.__setattr__(self, "params", dict(self.params))

    def needs_positive_state(self):
        if self.family in (INVERSE_FELLER, AIT_SAHALIA, RADIAL_OU):
            return True
        return self.family == CKLS and self.params["gamma"] != 0.0


def drift_vol(model, x):
    """Drift and volatility (m(x), s(x)) of the model at state x."""
    p = model.params
    fam = model.family
    if fam == OU:
        return -p["kappa"] * x, p["sigma"]
    if fam == NULL:
        return 0.0, p["sigma"]
    if fam == CKLS:
        if p["gamma"] == 0.0:
            return p["kappa"] * (p["mu"] - x), p["sigma"]
        if x <= 0:
            raise DomainError(f"CKLS with gamma={p['gamma']} needs x > 0, got {x}")
        return p["kappa"] * (p["mu"] - x), p["sigma"] * x ** p["gamma"]
    if x <= 0:
        raise DomainError(f"{fam} drift needs x > 0, got {x}")
    if fam == INVERSE_FELLER:
        return (x * (p["kappa"] - (p["sigma"] ** 2 - p["kappa"] * p["mu"]) * x),
                p["sigma"] * x**1.5)
    if fam == AIT_SAHALIA:
        return (p["tau_m1"] / x + p["tau_0"] + p["tau_1"] * x + p["tau_2"] * x * x,
                p["sigma"] * x**1.5)
    # radial OU
    return p["lam"] / x - p["kappa"] * x, p["sigma"]


@dataclass(frozen=True)
class PathRecord:
    """Discretized path on a uniform time grid 0..T step delta."""

    times: np.ndarray
    values: np.ndarray
    model: Optional[SDEModel] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise DimensionError("times and values must be equal-length 1-d arrays")
        diffs = np.diff(times)
        if np.max(np.abs(diffs - diffs[0])) > 1e-12 * max(1.0, abs(diffs[0])):
            raise ValueError("path times must be uniformly spaced")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def delta(self):
        return float(self.times[1] - self.times[0])

    @property
    def T(self):
        return float(self.times[-1] - self.times[0])

    @property
    def n_steps(self):
        return self.times.size - 1


def _ou_recursion(kappa, sigma, x0, delta, gaussians):
    """x_{i+1} = x_i + (-kappa x_i) delta + sigma sqrt(delta) Z_i, vectorized."""
    u = sigma * np.sqrt(delta) * gaussians
    a = 1.0 - kappa * delta
    out = np.empty(gaussians.size + 1)
    out[0] = x0
    out[1:] = lfilter([1.0], [1.0, -a], u, zi=np.array([a * x0]))[0]
    return out


def _check_finite(values):
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        raise BlowUpError(f"path became non-finite at step {bad[0]}", step=int(bad[0]))


def euler_maruyama(model, T, delta, seed):
    """Simulate the model on [0, T] with step delta.

    T/delta must be integral.  Positivity-constrained families reflect
    at a floor of 1e-8; a non-finite state raises BlowUpError with the
    step index.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n_steps = round(T / delta)
    if abs(n_steps * delta - T) > 1e-9 * max(1.0, abs(T)) or n_steps < 1:
        raise ValueError(f"T={T} is not an integral multiple of delta={delta}")
    rng = np.random.default_rng(seed)
    gaussians = rng.standard_normal(n_steps)
    p = model.params
    if model.family == OU:
        values = _ou_recursion(p["kappa"], p["sigma"], model.x0, delta, gaussians)
        _check_finite(values)
    elif model.family == NULL:
        values = np.empty(n_steps + 1)
        values[0] = model.x0
        values[1:] = model.x0 + np.cumsum(p["sigma"] * np.sqrt(delta) * gaussians)
        _check_finite(values)
    else:
        values = np.empty(n_steps + 1)
        x = float(model.x0)
        values[0] = x
        sqrt_dt = np.sqrt(delta)
        reflect = model.needs_positive_state()
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(n_steps):
                m, s = drift_vol(model, x)
                x = x + m * delta + s * sqrt_dt * gaussians[i]
                if not np.isfinite(x):
                    raise BlowUpError(f"path became non-finite at step {i}",
                                      step=i)
                if reflect and x < _POSITIVITY_EPS:
                    x = max(abs(x), _POSITIVITY_EPS)
                values[i + 1] = x
    times = np.arange(n_steps + 1) * delta
    return PathRecord(times, values, model)


def _window_grid(delta, steps_per_window, endpoint_atom=1.0):
    return Grid(np.arange(steps_per_window + 1) * delta, endpoint_atom=endpoint_atom)


def _split_values(values, steps_per_window, grid):
    n = (values.size - 1) // steps_per_window
    idx = (np.arange(n)[:, None] * steps_per_window
           + np.arange(steps_per_window + 1)[None, :])
    return FunctionalSample(values[idx], grid)


def split_path(path, h, m=None):
    """Cut a path into consecutive curves over [0, h].

    Windows share their boundary point: curve i covers [ih, (i+1)h]
    inclusive, so curve i's last value equals curve i+1's first.  Curves
    live on a grid with a unit endpoint atom (Lebesgue + Dirac at h).
    """
    delta = path.delta
    steps = round(h / delta)
    if steps < 1 or abs(steps * delta - h) > 1e-9 * max(1.0, h):
        raise ValueError(f"h={h} is not an integral multiple of delta={delta}")
    if m is not None and m != steps + 1:
        raise ValueError(
            f"window of length h={h} holds {steps + 1} points, not m={m}"
        )
    n_windows = path.n_steps / steps
    if abs(n_windows - round(n_windows)) > 1e-9:
        raise ValueError(f"path length T={path.T} is not a multiple of h={h}")
    grid = _window_grid(delta, steps)
    return _split_values(path.values, steps, grid)


def _kappa_from_values(values, delta):
    head = values[:-1]
    increments = np.diff(values)
    denominator = float(np.dot(head, head)) * delta
    if denominator <= 0:
        raise DegenerateSampleError("path has zero energy; kappa undefined")
    return float(-np.dot(head, increments) / denominator)


def estimate_kappa(path):
    """Drift estimator kappa_hat = -sum xi (xi_{+1} - xi) / (sum xi^2 delta)."""
    return _kappa_from_values(path.values, path.delta)


def _sigma_from_values(values, delta):
    increments = np.diff(values)
    n = increments.size
    return float(np.sqrt(np.dot(increments, increments) / (n * delta)))


def estimate_sigma(path):
    """Volatility from realized quadratic variation: sqrt(QV / T)."""
    if path.n_steps < 2:
        raise ValueError("need at least two increments to estimate sigma")
    return _sigma_from_values(path.values, path.delta)


def write_path_csv(path_record, file_path):
    """Two-column time,value CSV with model provenance in a header comment."""
    if path_record.model is not None:
        meta = {"family": path_record.model.family,
                "params": path_record.model.params,
                "x0": path_record.model.x0}
    else:
        meta = None
    with open(file_path, "w", encoding="utf-8") as fh:
        fh.write(f"# model={json.dumps(meta, sort_keys=True)}\n")
        fh.write("time,value\n")
        np.savetxt(fh, np.column_stack([path_record.times, path_record.values]),
                   delimiter=",", fmt="%.17g")


def read_path_csv(file_path):
    """Read a path written by :func:`write_path_csv`."""
    with open(file_path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        model = None
        if first.startswith("# model="):
            meta = json.loads(first.split("=", 1)[1])
            if meta is not None:
                model = SDEModel(meta["family"], meta["params"], meta["x0"])
            header = fh.readline()
        else:
            header = first
        if not header.strip().startswith("time"):
            raise ValueError(f"{file_path}: expected 'time,value' header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return PathRecord(data[:, 0], data[:, 1], model)
