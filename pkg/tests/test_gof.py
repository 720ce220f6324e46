"""Lag embedding, A-dot geometry, PCvM statistic and the bootstrap test."""

import math

import numpy as np
import pytest

from arhgof import (Grid, FunctionalSample, adot, arh_gof_test, arh_order_scan,
                    center, lag_embed, pcvm_statistic, wild_multipliers)
from arhgof.arhsim import simulate_arh, KernelSpec, ARHSpec, PARABOLIC
from arhgof.errors import DegenerateSampleError
from arhgof.experiments import build_arh_spec


def _curves(seed, n, m=21, h=1.0):
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(h, m)
    return FunctionalSample(rng.standard_normal((n, m)), grid)


# ---------------------------------------------------------------- lag_embed

def test_lag_embed_identity_for_order_one():
    sample = _curves(0, 6)
    x, y = lag_embed(sample, 1)
    assert x.n == y.n == 5
    assert np.array_equal(x.values, sample.values[:-1])
    assert np.array_equal(y.values, sample.values[1:])
    assert x.grid == sample.grid


def test_lag_embed_order_two_block_layout():
    sample = _curves(1, 5, m=11)
    x, y = lag_embed(sample, 2)
    assert x.n == 3 and x.m == 22
    # pair i=0 (paper's i=1): first block lag-1 curve, second block lag-2
    assert np.array_equal(x.values[0, :11], sample.values[1])
    assert np.array_equal(x.values[0, 11:], sample.values[0])
    assert np.array_equal(y.values[0], sample.values[2])
    # embedded grid compresses blocks onto [0, 1/2] and [1/2, 1]
    assert x.grid.points[0] == 0.0
    assert x.grid.points[10] == pytest.approx(0.5)
    assert x.grid.points[11] == pytest.approx(0.5)
    assert x.grid.points[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("z,atom", [(2, 0.0), (3, 0.0), (2, 1.0)])
def test_lag_embed_norm_identity(z, atom):
    rng = np.random.default_rng(z)
    grid = Grid.uniform(1.0, 41, endpoint_atom=atom)
    sample = FunctionalSample(rng.standard_normal((z + 4, 41)), grid)
    x, _ = lag_embed(sample, z)
    for i in range(x.n):
        stacked = [sample.values[z - r + i] for r in range(1, z + 1)]
        expected = sum(
            FunctionalSample(c[None, :], grid).sq_norms()[0] for c in stacked
        ) / z
        assert x.sq_norms()[i] == pytest.approx(expected, rel=1e-10)


def test_lag_embed_insufficient_curves():
    sample = _curves(2, 3)
    with pytest.raises(ValueError):
        lag_embed(sample, 3)


# --------------------------------------------------------------------- adot

def test_adot_single_point():
    a = adot(np.zeros((1, 1)))
    # all-equal case: 2*pi * pi^(-1/2) / Gamma(1/2) = 2
    assert a.entries[0, 0] == pytest.approx(2.0, rel=1e-12)
    a3 = adot(np.zeros((1, 3)))
    expected = 2 * math.pi * math.pi ** (3 / 2 - 1) / math.gamma(3 / 2)
    assert a3.entries[0, 0] == pytest.approx(expected, rel=1e-12)


def test_adot_collinear_scalar_scores():
    # p=1 scores {0,1,2}: r outside the (i,j) segment contributes pi,
    # r strictly inside contributes 0, coincident r contributes pi
    a = adot(np.array([[0.0], [1.0], [2.0]]))
    factor = math.pi ** (1 / 2 - 1) / math.gamma(0.5)  # = 1/pi
    assert a.entries[0, 1] == pytest.approx((math.pi + math.pi + math.pi) * factor)
    assert a.entries[0, 2] == pytest.approx((math.pi + 0.0 + math.pi) * factor)
    assert a.entries[0, 0] == pytest.approx((2 * math.pi + math.pi + math.pi) * factor)


def _adot_oracle(X):
    """Naive triple loop over (i, j, r) with the three-case angle formula."""
    n, pt = X.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            total = 0.0
            for r in range(n):
                di = X[i] - X[r]
                dj = X[j] - X[r]
                ni, nj = di @ di, dj @ dj
                if ni <= 1e-12 and nj <= 1e-12:
                    ang = 2 * math.pi
                elif ni <= 1e-12 or nj <= 1e-12:
                    ang = math.pi
                else:
                    cosv = min(1.0, max(-1.0, (di @ dj) / math.sqrt(ni * nj)))
                    ang = math.pi - math.acos(cosv)
                total += ang
            out[i, j] = total * math.pi ** (pt / 2 - 1) / math.gamma(pt / 2)
    return out


@pytest.mark.parametrize("n,pt", [(4, 1), (5, 2), (6, 3)])
def test_adot_matches_triple_loop_oracle(n, pt):
    rng = np.random.default_rng(10 * n + pt)
    X = rng.standard_normal((n, pt))
    a = adot(X)
    assert np.abs(a.entries - _adot_oracle(X)).max() < 1e-10


def test_adot_symmetry_and_bounds():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((12, 3))
    a = adot(X)
    assert np.array_equal(a.entries, a.entries.T)
    factor = math.pi ** (3 / 2 - 1) / math.gamma(1.5)
    assert np.all(a.entries >= 0)
    assert np.all(a.entries <= 12 * 2 * math.pi * factor + 1e-12)
    assert np.all(np.diag(a.entries) >= a.entries.max(axis=1) - 1e-10)


def test_adot_rotation_invariance():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((10, 3))
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a1 = adot(X)
    a2 = adot(X @ q)
    assert np.abs(a1.entries - a2.entries).max() < 1e-8


def test_adot_monte_carlo_sphere_oracle_smoke():
    rng = np.random.default_rng(17)
    X = rng.standard_normal((4, 2))
    a = adot(X)
    dirs = rng.standard_normal((200_000, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    proj = dirs @ X.T
    sphere = 2 * math.pi  # circumference of S^1
    est = np.zeros((4, 4))
    for r in range(4):
        below = proj <= proj[:, [r]] + 1e-12
        est += (below.T.astype(float) @ below) / len(dirs) * sphere
    assert np.abs(est - a.entries).max() / a.entries.max() < 0.02


# ----------------------------------------------------------- pcvm statistic

def test_pcvm_zero_residuals():
    a = adot(np.random.default_rng(0).standard_normal((5, 2)))
    assert pcvm_statistic(np.zeros((5, 3)), a) == 0.0


def test_pcvm_single_pair_hand_value():
    a = adot(np.zeros((1, 1)))
    e = 3.0
    assert pcvm_statistic(np.array([[e]]), a) == pytest.approx(4 * e**2 / math.pi, rel=1e-12)


def test_pcvm_sign_flip_invariance_and_scale():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((7, 2))
    E = rng.standard_normal((7, 3))
    a = adot(X)
    base = pcvm_statistic(E, a)
    assert pcvm_statistic(-E, a) == pytest.approx(base, rel=1e-12)
    assert pcvm_statistic(2.5 * E, a) == pytest.approx(2.5**2 * base, rel=1e-12)


# ------------------------------------------------------------ the full test

def test_gof_zero_noise_linear_model_accepts():
    # deterministic ARH(1) with tiny noise: residuals ~ 0, statistic ~ 0
    grid = Grid.uniform(1.0, 31)
    rng = np.random.default_rng(5)
    kernel = np.outer(np.sin(np.pi * grid.points), np.cos(grid.points)) * 0.5
    curves = [rng.standard_normal(31)]
    for _ in range(40):
        nxt = (curves[-1] * grid.weights) @ kernel
        curves.append(nxt + 1e-8 * rng.standard_normal(31))
    sample = FunctionalSample(np.array(curves[1:]), grid)
    res = arh_gof_test(sample, 1, B=120, seed=0)
    assert res.p_value > 0.2


def test_gof_degenerate_sample():
    grid = Grid.uniform(1.0, 11)
    sample = FunctionalSample(np.zeros((10, 11)), grid)
    with pytest.raises(DegenerateSampleError):
        arh_gof_test(sample, 1, B=100, seed=0)


def test_gof_small_b_warning_flag():
    sample = simulate_arh(build_arh_spec('ARH0'), 30, seed=0)
    res = arh_gof_test(sample, 0, B=50, seed=1)
    assert res.small_b_warning
    res2 = arh_gof_test(sample, 0, B=100, seed=1)
    assert not res2.small_b_warning


def test_gof_p_value_matches_boot_count():
    sample = simulate_arh(build_arh_spec('ARH1'), 40, seed=3)
    res = arh_gof_test(sample, 1, B=150, seed=2)
    assert res.p_value == np.count_nonzero(res.boot_statistics >= res.statistic) / 150
    assert res.B == 150


def test_gof_deterministic_under_seed():
    sample = simulate_arh(build_arh_spec('ARH0'), 40, seed=4)
    a = arh_gof_test(sample, 1, B=100, seed=11)
    b = arh_gof_test(sample, 1, B=100, seed=11)
    assert a.statistic == b.statistic
    assert a.p_value == b.p_value
    assert np.array_equal(a.boot_statistics, b.boot_statistics)


def test_gof_rejects_strong_dependence_z0():
    sample = simulate_arh(build_arh_spec('ARH1'), 100, seed=6)
    res = arh_gof_test(sample, 0, B=200, seed=7)
    assert res.p_value < 0.01


def test_wild_multipliers_two_point_golden():
    draws = wild_multipliers(10**6, seed=0)
    lo = (1 - math.sqrt(5)) / 2
    hi = (1 + math.sqrt(5)) / 2
    assert set(np.unique(draws)) == {lo, hi}
    assert abs(draws.mean()) < 0.01
    assert abs(draws.var() - 1.0) < 0.01
    assert np.array_equal(draws[:100], wild_multipliers(100, seed=0))


def test_gof_result_json_fields():
    sample = simulate_arh(build_arh_spec('ARH0'), 30, seed=8)
    res = arh_gof_test(sample, 1, B=100, seed=3)
    payload = res.to_dict()
    assert set(payload) == {"statistic", "p_value", "B", "p", "q",
                            "p_tilde_set", "lambda", "seed"}


# ----------------------------------------------------------------- the scan

def test_order_scan_white_noise_mostly_zero():
    hits = 0
    for seed in range(8):
        sample = simulate_arh(build_arh_spec('ARH0'), 60, seed=seed)
        res = arh_order_scan(sample, 2, B=150, seed=seed)
        hits += res.order == 0
    assert hits >= 6


def test_order_scan_arh1_finds_one():
    spec = ARHSpec((KernelSpec(PARABOLIC, target_hs_norm=0.7),),
                   grid=Grid.uniform(1.0, 51))
    hits = 0
    for seed in range(7):
        sample = simulate_arh(spec, 250, seed=seed)
        res = arh_order_scan(sample, 2, B=150, seed=100 + seed)
        hits += res.order == 1
    assert hits >= 4


def test_order_scan_all_rejected_marker():
    spec = ARHSpec((KernelSpec(PARABOLIC, target_hs_norm=0.7),),
                   grid=Grid.uniform(1.0, 51))
    hits = 0
    for seed in range(5):
        sample = simulate_arh(spec, 250, seed=seed)
        res = arh_order_scan(sample, 0, B=150, seed=seed)
        hits += res.order is None
    assert hits >= 4
