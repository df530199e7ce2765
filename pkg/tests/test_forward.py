"""Boundary march, field radiation, fast model, and noise."""

import numpy as np
import pytest

from conftest import BASE_PERIOD, C, EMITTER_RADIUS, OMEGA0, single_panel_mesh
from mowave.errors import ConfigError, SingularFieldError
from mowave.forward import (
    add_noise,
    approx_scattered,
    evaluate_scattered,
    march_density,
    marching_residual,
)
from mowave.incident import incident_field, incident_on_mesh
from mowave.records import DensityHistory, NoiseSpec, WaveRecord
from mowave.scene import (
    CirclePath,
    GaussianPulse,
    Medium,
    PulseTrain,
    ShapeSpec,
    StationaryPath,
    TimeGrid,
    ZeroSignal,
    build_boundary_mesh,
    make_receivers,
)


class _Doubled:
    """Wrap a signal and emit twice its amplitude."""

    def __init__(self, base):
        self.base = base

    def __call__(self, t):
        return 2.0 * self.base(t)


# ---------------------------------------------------------------------------
# Density march
# ---------------------------------------------------------------------------


def _disc_problem(medium, steps=320):
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 0.0], 10.0), 32)
    traj = CirclePath(EMITTER_RADIUS, OMEGA0)
    sig = PulseTrain(1, BASE_PERIOD)
    grid = TimeGrid(BASE_PERIOD, steps)
    inc = incident_on_mesh(traj, sig, medium, mesh, grid)
    return mesh, inc


def test_zero_incident_marches_to_zero(medium):
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 0.0], 10.0), 16)
    traj = CirclePath(EMITTER_RADIUS, OMEGA0)
    inc = incident_on_mesh(traj, ZeroSignal(), medium, mesh, TimeGrid(7.0, 64))
    density = march_density(mesh, inc, medium)
    assert not np.any(density.values)
    assert not density.filtered
    rec = evaluate_scattered(mesh, density,
                             make_receivers("circle", 72.0, 4),
                             inc.grid, medium)
    assert not np.any(rec.values)


def test_march_satisfies_collocation_equations(medium):
    mesh, inc = _disc_problem(medium)
    density = march_density(mesh, inc, medium)
    assert not density.filtered
    worst = marching_residual(mesh, density, inc, medium)
    assert worst < 1e-8 * np.max(np.abs(inc.values))


def test_march_is_linear_in_the_data(medium):
    mesh, inc = _disc_problem(medium, steps=160)
    doubled = WaveRecord(kind="incident", values=2.0 * inc.values,
                         grid=inc.grid, receivers=mesh, wave_speed=C)
    g1 = march_density(mesh, inc, medium)
    g2 = march_density(mesh, doubled, medium)
    # Doubling the data doubles every solve exactly (power-of-two scaling
    # commutes with the LU substitutions), so this holds bit for bit.
    np.testing.assert_array_equal(g2.values, 2.0 * g1.values)


def test_march_commutes_with_time_shift(medium):
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 0.0], 10.0), 24)
    traj = StationaryPath([40.0, 0.0])
    grid = TimeGrid(10.0, 400)
    m = 5
    shift = m * grid.dt
    inc_a = incident_on_mesh(traj, GaussianPulse(2.0, 0.2), medium, mesh, grid)
    inc_b = incident_on_mesh(traj, GaussianPulse(2.0 + shift, 0.2), medium,
                             mesh, grid)
    ga = march_density(mesh, inc_a, medium)
    gb = march_density(mesh, inc_b, medium)
    scale = np.max(np.abs(ga.values))
    np.testing.assert_allclose(gb.values[m:], ga.values[:-m],
                               atol=1e-9 * scale, rtol=0.0)


def test_march_is_causal(medium):
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 0.0], 10.0), 24)
    traj = StationaryPath([40.0, 0.0])
    grid = TimeGrid(10.0, 400)
    inc = incident_on_mesh(traj, GaussianPulse(2.0, 0.2), medium, mesh, grid)
    density = march_density(mesh, inc, medium)
    early = grid.times() <= 0.25  # pulse tail ~ 1e-19 there
    assert np.max(np.abs(density.values[early])) <= \
        1e-12 * np.max(np.abs(density.values))


def test_small_sphere_fast_model_tracks_the_march(medium):
    # The point-obstacle regime behind the fast model: for a sphere tiny
    # against every travel distance the closed form and the full boundary
    # solve radiate the same record.
    mesh = build_boundary_mesh(ShapeSpec("sphere", [8.0, -16.0, 4.0], 0.01), 1)
    traj = StationaryPath([0.0, 0.0, 60.0])
    sig = PulseTrain(1, BASE_PERIOD)
    grid = TimeGrid(BASE_PERIOD, 512)
    receivers = make_receivers("sphere", 72.0, 4)
    inc = incident_on_mesh(traj, sig, medium, mesh, grid)
    full = evaluate_scattered(mesh, march_density(mesh, inc, medium),
                              receivers, grid, medium)
    fast = approx_scattered(mesh, traj, sig, medium, receivers, grid)
    scale = np.max(np.abs(full.values))
    assert np.max(np.abs(fast.values - full.values)) < 0.02 * scale


def test_march_rejects_foreign_records(medium):
    mesh, inc = _disc_problem(medium, steps=32)
    other = build_boundary_mesh(ShapeSpec("circle", [0.0, 0.0], 10.0), 24)
    with pytest.raises(ConfigError, match="not collocated"):
        march_density(other, inc, medium)
    bad_kind = WaveRecord(kind="scattered", values=inc.values, grid=inc.grid,
                          receivers=mesh, wave_speed=C)
    with pytest.raises(ConfigError, match="incident record"):
        march_density(mesh, bad_kind, medium)


# ---------------------------------------------------------------------------
# Radiating a density
# ---------------------------------------------------------------------------


def _prescribed_single_panel(medium):
    mesh = single_panel_mesh([0.0, 0.0], 0.3)
    grid = TimeGrid(10.0, 400)
    density = DensityHistory(values=np.sin(grid.times())[:, None], grid=grid,
                             mesh=mesh)
    return mesh, density


def _radiated_oracle(mesh, density, receivers, grid):
    r = np.linalg.norm(receivers.points - mesh.centroids[0], axis=-1)  # (M,)
    out = np.empty((receivers.count, grid.steps + 1))
    for i in range(receivers.count):
        out[i] = mesh.measures[0] / (4.0 * np.pi * r[i]) * \
            density.sample(grid.times() - r[i] / C)[:, 0]
    return out


def test_radiation_matches_interpolated_quadrature(medium):
    # Prescribed density, one panel: the record must equal the retarded
    # quadrature built by hand from the density's own interpolant.
    mesh, density = _prescribed_single_panel(medium)
    receivers = make_receivers("circle", 5.0, 4)
    rec = evaluate_scattered(mesh, density, receivers, density.grid, medium)
    expected = _radiated_oracle(mesh, density, receivers, density.grid)
    np.testing.assert_allclose(rec.values, expected, rtol=1e-12, atol=1e-300)
    assert rec.kind == "scattered"


def test_radiation_off_grid_times(medium):
    # A target grid with a different step forces the per-time gather path;
    # same oracle, clamping never reached.
    mesh, density = _prescribed_single_panel(medium)
    receivers = make_receivers("circle", 5.0, 3)
    grid = TimeGrid(9.0, 450)
    rec = evaluate_scattered(mesh, density, receivers, grid, medium)
    expected = _radiated_oracle(mesh, density, receivers, grid)
    np.testing.assert_allclose(rec.values, expected, rtol=1e-12, atol=1e-300)


def test_radiation_guards(medium):
    mesh, density = _prescribed_single_panel(medium)
    near = make_receivers("circle", 0.2, 4)  # inside the panel extent
    with pytest.raises(SingularFieldError, match="obstacle boundary"):
        evaluate_scattered(mesh, density, near, density.grid, medium)
    other = build_boundary_mesh(ShapeSpec("circle", [0.0, 0.0], 10.0), 16)
    with pytest.raises(ConfigError, match="different mesh"):
        evaluate_scattered(other, density, make_receivers("circle", 30.0, 4),
                           density.grid, medium)


# ---------------------------------------------------------------------------
# Fast point-obstacle model
# ---------------------------------------------------------------------------


def test_fast_model_converges_to_the_classical_monopole(medium):
    # A sphere of radius a re-emits -a u_inc / r: under mesh refinement the
    # record must approach that closed form, and at every level its time
    # shape must already be an exact multiple of it.
    a = 0.01
    y0 = np.array([8.0, -16.0, 4.0])
    traj = StationaryPath([0.0, 0.0, 60.0])
    sig = GaussianPulse(1.0, 0.2)
    receivers = make_receivers("sphere", 72.0, 6)
    grid = TimeGrid(2.0, 128)
    d = np.linalg.norm(receivers.points - y0, axis=-1)  # (M,)
    times = grid.times()
    monopole = np.stack([
        -a * incident_field(traj, sig, medium, y0, times - d[i] / C) / d[i]
        for i in range(receivers.count)
    ])
    scale = np.max(np.abs(monopole))
    deficits = []
    for level in (0, 1, 2, 3):
        shape = ShapeSpec("sphere", y0, a, resolution=level)
        rec = approx_scattered(build_boundary_mesh(shape, None), traj, sig,
                               medium, receivers, grid)
        gamma = float(np.sum(rec.values * monopole) / np.sum(monopole**2))
        assert np.max(np.abs(rec.values - gamma * monopole)) < 1e-9 * scale
        deficits.append(abs(gamma - 1.0))
    assert deficits == sorted(deficits, reverse=True)
    assert deficits[-1] < 2e-3


def test_fast_model_stationary_doppler_toggle(medium):
    mesh = build_boundary_mesh(ShapeSpec("sphere", [8.0, -16.0, 4.0], 0.01), 1)
    traj = StationaryPath([0.0, 0.0, 60.0])
    sig = GaussianPulse(1.0, 0.2)
    receivers = make_receivers("sphere", 72.0, 5)
    grid = TimeGrid(2.0, 64)
    with_d = approx_scattered(mesh, traj, sig, medium, receivers, grid,
                              doppler=True)
    without = approx_scattered(mesh, traj, sig, medium, receivers, grid,
                               doppler=False)
    np.testing.assert_array_equal(with_d.values, without.values)


def test_fast_model_scales_with_the_signal(medium):
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 20.0], 0.01), 16)
    traj = CirclePath(EMITTER_RADIUS, OMEGA0)
    sig = PulseTrain(1, BASE_PERIOD)
    receivers = make_receivers("circle", 72.0, 8)
    grid = TimeGrid(BASE_PERIOD, 128)
    one = approx_scattered(mesh, traj, sig, medium, receivers, grid)
    two = approx_scattered(mesh, traj, _Doubled(sig), medium, receivers, grid)
    # Doubling is exact except one ulp at the subnormal floor (onset tail).
    np.testing.assert_allclose(two.values, 2.0 * one.values, rtol=0.0,
                               atol=1e-320)


def test_fast_model_components_superpose(medium):
    from mowave.scene import BoundaryMesh

    a = build_boundary_mesh(ShapeSpec("circle", [-24.0, -24.0], 0.01), 16)
    b = build_boundary_mesh(ShapeSpec("circle", [0.0, 20.0], 0.01), 16)
    traj = CirclePath(EMITTER_RADIUS, OMEGA0)
    sig = PulseTrain(1, BASE_PERIOD)
    receivers = make_receivers("circle", 72.0, 8)
    grid = TimeGrid(BASE_PERIOD, 128)
    both = approx_scattered(BoundaryMesh.combine([a, b]), traj, sig, medium,
                            receivers, grid)
    ua = approx_scattered(a, traj, sig, medium, receivers, grid)
    ub = approx_scattered(b, traj, sig, medium, receivers, grid)
    np.testing.assert_array_equal(both.values, ua.values + ub.values)


def test_fast_model_against_full_march(medium):
    # The closed form must track the full boundary solve once the obstacle
    # is small: a 2 percent envelope covers the mesh truncation.
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 20.0], 0.04), 16)
    traj = CirclePath(EMITTER_RADIUS, OMEGA0)
    sig = PulseTrain(1, BASE_PERIOD)
    receivers = make_receivers("circle", 72.0, 4)
    grid = TimeGrid(BASE_PERIOD, 2048)
    inc = incident_on_mesh(traj, sig, medium, mesh, grid)
    full = evaluate_scattered(mesh, march_density(mesh, inc, medium),
                              receivers, grid, medium)
    fast = approx_scattered(mesh, traj, sig, medium, receivers, grid)
    scale = np.max(np.abs(full.values))
    assert np.max(np.abs(fast.values - full.values)) < 0.02 * scale


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


def _clean_record(medium):
    mesh = build_boundary_mesh(ShapeSpec("circle", [0.0, 20.0], 0.01), 16)
    traj = CirclePath(EMITTER_RADIUS, OMEGA0)
    return approx_scattered(mesh, traj, PulseTrain(1, BASE_PERIOD), medium,
                            make_receivers("circle", 72.0, 6),
                            TimeGrid(BASE_PERIOD, 128))


def test_noise_bound_and_reproducibility(medium):
    clean = _clean_record(medium)
    noisy = add_noise(clean, NoiseSpec(0.05, 7))
    assert noisy.kind == "noisy_scattered"
    assert noisy.sigma == 0.05 and noisy.seed == 7
    assert np.all(np.abs(noisy.values - clean.values)
                  <= 0.05 * np.abs(clean.values) * (1.0 + 1e-12))
    again = add_noise(clean, NoiseSpec(0.05, 7))
    np.testing.assert_array_equal(noisy.values, again.values)
    other = add_noise(clean, NoiseSpec(0.05, 8))
    assert np.any(other.values != noisy.values)


def test_zero_noise_is_the_identity(medium):
    clean = _clean_record(medium)
    noisy = add_noise(clean, NoiseSpec(0.0, 3))
    np.testing.assert_array_equal(noisy.values, clean.values)
    assert noisy.kind == "noisy_scattered"


def test_noise_requires_a_clean_record(medium):
    clean = _clean_record(medium)
    noisy = add_noise(clean, NoiseSpec(0.05, 7))
    with pytest.raises(ConfigError, match="clean scattered"):
        add_noise(noisy, NoiseSpec(0.05, 7))
