"""Record containers and their CSV round trips."""

import numpy as np
import pytest

from conftest import RECEIVER_RADIUS, synthetic_record
from mowave.errors import ConfigError
from mowave.records import (
    DensityHistory,
    NoiseSpec,
    WaveRecord,
    load_record,
    save_record,
)
from mowave.scene import TimeGrid, make_receivers


def test_scattered_round_trip(tmp_path):
    receivers = make_receivers("circle", RECEIVER_RADIUS, 5)
    grid = TimeGrid(2.0, 16)
    rng = np.random.default_rng(13)
    rec = synthetic_record(rng.standard_normal((5, 17)), receivers, grid)
    path = tmp_path / "rec.csv"
    save_record(rec, path)
    back = load_record(path)
    assert back.kind == "scattered"
    np.testing.assert_array_equal(back.values, rec.values)
    np.testing.assert_array_equal(back.point_coordinates(), receivers.points)
    assert back.grid.steps == 16
    assert back.grid.dt == pytest.approx(grid.dt, rel=1e-15)
    assert back.wave_speed == rec.wave_speed
    assert back.seed is None
    # Uniform ring weights are reconstructed exactly from the radius.
    np.testing.assert_allclose(back.receivers.weights, receivers.weights,
                               rtol=1e-12)


def test_noisy_round_trip_keeps_noise_metadata(tmp_path):
    receivers = make_receivers("sphere", RECEIVER_RADIUS, 7)
    grid = TimeGrid(1.0, 8)
    rng = np.random.default_rng(14)
    rec = synthetic_record(rng.standard_normal((7, 9)), receivers, grid,
                           kind="noisy_scattered", sigma=0.05, seed=42)
    path = tmp_path / "rec.csv"
    save_record(rec, path)
    back = load_record(path)
    assert back.kind == "noisy_scattered"
    assert back.sigma == 0.05
    assert back.seed == 42
    np.testing.assert_array_equal(back.values, rec.values)
    np.testing.assert_allclose(back.receivers.weights, receivers.weights,
                               rtol=1e-12)
    assert back.receivers.layout == "sphere"


def test_load_rejects_foreign_and_malformed_files(tmp_path):
    junk = tmp_path / "junk.csv"
    junk.write_text("time,value\n0,1\n")
    with pytest.raises(ConfigError, match="not a mowave record"):
        load_record(junk)

    truncated = tmp_path / "short.csv"
    receivers = make_receivers("circle", RECEIVER_RADIUS, 3)
    rec = synthetic_record(np.ones((3, 5)), receivers, TimeGrid(1.0, 4))
    save_record(rec, truncated)
    lines = truncated.read_text().splitlines()
    truncated.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(ConfigError, match="expected"):
        load_record(truncated)


def test_record_validation():
    receivers = make_receivers("circle", RECEIVER_RADIUS, 3)
    grid = TimeGrid(1.0, 4)
    with pytest.raises(ConfigError, match="unknown record kind"):
        WaveRecord(kind="mystery", values=np.zeros((3, 5)), grid=grid,
                   receivers=receivers, wave_speed=340.0)
    with pytest.raises(ConfigError, match="shaped"):
        WaveRecord(kind="scattered", values=np.zeros((3, 4)), grid=grid,
                   receivers=receivers, wave_speed=340.0)


def test_noise_spec_validation():
    assert NoiseSpec(0.0, 1).sigma == 0.0
    with pytest.raises(ConfigError, match=">= 0"):
        NoiseSpec(-0.1, 1)


def test_density_history_sampling():
    from conftest import single_panel_mesh

    grid = TimeGrid(1.0, 4)  # dt = 0.25
    vals = np.array([[0.0], [1.0], [2.0], [3.0], [4.0]])
    hist = DensityHistory(values=vals, grid=grid, mesh=single_panel_mesh([0.0, 0.0], 1.0))
    t = np.array([-0.5, 0.0, 0.125, 0.625, 1.0, 2.0])
    out = hist.sample(t)[:, 0]
    np.testing.assert_allclose(out, [0.0, 0.0, 0.5, 2.5, 4.0, 4.0])
