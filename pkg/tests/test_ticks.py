"""Tick ingestion into daily curves."""

import numpy as np
import pytest

from arhgof import SDEModel, euler_maruyama, ingest_ticks, split_path
from arhgof.errors import IngestionError
from arhgof.sde import OU
from arhgof.ticks import TickSeries, read_ticks_csv


def _write_ticks(path, times, values):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("timestamp,value\n")
        for t, v in zip(times, values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def test_two_complete_days_one_partial(tmp_path):
    # exchange-feed layout: 288 ticks per day in [k, k+1)
    rng = np.random.default_rng(0)
    times = np.concatenate([np.arange(288) / 288,
                            1.0 + np.arange(288) / 288,
                            2.0 + np.arange(100) / 288])
    values = rng.standard_normal(times.size)
    f = tmp_path / "ticks.csv"
    _write_ticks(f, times, values)
    result = ingest_ticks(f, day_length=288)
    assert result.sample.n == 2
    assert result.n_dropped == 1
    assert result.dropped_days == (2,)
    assert result.mode == "half-open"
    assert result.sample.m == 288
    assert result.sample.grid.endpoint_atom == 1.0


def test_constant_series_centers_to_zero(tmp_path):
    times = np.concatenate([np.arange(10) / 10, 1 + np.arange(10) / 10])
    values = np.full(times.size, 7.5)
    f = tmp_path / "flat.csv"
    _write_ticks(f, times, values)
    result = ingest_ticks(f, day_length=10)
    assert result.mean_value == pytest.approx(7.5)
    assert np.abs(result.sample.values).max() < 1e-12
    assert np.allclose(result.sample.values[0], result.sample.values[1])


def test_round_trip_matches_split_path(tmp_path):
    model = SDEModel(OU, {"kappa": 0.5, "sigma": np.sqrt(0.05)})
    path = euler_maruyama(model, 5.0, 0.01, seed=1)
    f = tmp_path / "path_ticks.csv"
    _write_ticks(f, path.times, path.values)
    result = ingest_ticks(f, day_length=101)
    assert result.mode == "shared"
    assert result.sample.n == 5
    from arhgof.sde import PathRecord

    centered = PathRecord(path.times, path.values - path.values.mean())
    expected = split_path(centered, 1.0)
    assert np.abs(result.sample.values - expected.values).max() < 1e-12
    # retained tick series reproduces the centered path
    assert np.abs(result.values - centered.values).max() < 1e-12


def test_day_length_inference_shared_mode(tmp_path):
    model = SDEModel(OU, {"kappa": 0.5, "sigma": 0.2})
    path = euler_maruyama(model, 3.0, 0.05, seed=2)
    f = tmp_path / "p.csv"
    _write_ticks(f, path.times, path.values)
    result = ingest_ticks(f)  # inferred
    assert result.sample.n == 3
    assert result.sample.m == 21


def test_no_complete_day_raises(tmp_path):
    times = np.arange(50) / 288
    f = tmp_path / "short.csv"
    _write_ticks(f, times, np.zeros(50))
    with pytest.raises(IngestionError):
        ingest_ticks(f, day_length=288)


def test_datetime_timestamps(tmp_path):
    stamps = [f"2019-01-0{d}T{h:02d}:00:00" for d in (1, 2) for h in range(24)]
    values = np.arange(48.0)
    f = tmp_path / "dt.csv"
    with open(f, "w", encoding="utf-8") as fh:
        fh.write("timestamp,value\n")
        for s, v in zip(stamps, values):
            fh.write(f"{s},{v}\n")
    result = ingest_ticks(f, day_length=24)
    assert result.sample.n == 2
    assert result.mode == "half-open"


def test_tick_series_validation():
    with pytest.raises(IngestionError):
        TickSeries(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(IngestionError):
        TickSeries(np.array([0.0, 1.0]), np.zeros(3))


def test_misaligned_day_dropped(tmp_path):
    base = np.arange(10) / 10
    times = np.concatenate([base, 1 + base, 2 + base + 0.003, 3 + base])
    f = tmp_path / "mis.csv"
    _write_ticks(f, times, np.arange(times.size, dtype=float))
    result = ingest_ticks(f, day_length=10)
    assert result.sample.n == 3
    assert 2 in result.dropped_days
