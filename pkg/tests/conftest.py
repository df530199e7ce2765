"""Shared constants and independent oracles for the test suite.

The oracles here deliberately avoid the library's own solvers: emission
times come from plain bracketed bisection and convolutions from literal
nested sums, so agreement is evidence rather than tautology.
"""

import numpy as np
import pytest

from mowave.records import WaveRecord
from mowave.scene import (
    BoundaryMesh,
    MeasurementArray,
    Medium,
    TimeGrid,
)

# Stage shared by most experiments: sound speed, burst base period, emitter
# ring radius, receiver ring radius.
C = 340.0
BASE_PERIOD = 14.0
OMEGA0 = 2.0 * np.pi / BASE_PERIOD
EMITTER_RADIUS = 60.0
RECEIVER_RADIUS = 72.0


@pytest.fixture
def medium():
    return Medium(C)


def bisection_tau(traj, c, x, t, iters=200):
    """Emission instants by pure bracketed bisection (batch over x, t).

    The residual f(tau) = t - tau - |x - s(tau)| / c is positive at the
    lower bracket end (emitter unreachably far in the past) and negative
    at tau = t, so plain halving converges without any smoothness
    assumptions on the path.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lo = t - (np.linalg.norm(x, axis=-1) + traj.radial_bound()) / c - 1.0
    hi = t.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f = t - mid - np.linalg.norm(x - traj.position(mid), axis=-1) / c
        take = f <= 0.0
        hi = np.where(take, mid, hi)
        lo = np.where(take, lo, mid)
    return 0.5 * (lo + hi)


def single_panel_mesh(point, measure, dim=2):
    """One flat panel at ``point`` with the given measure."""
    point = np.asarray(point, dtype=float)
    normal = np.zeros(dim)
    normal[0] = 1.0
    return BoundaryMesh(
        dim=dim,
        centroids=point[None, :],
        measures=np.array([measure]),
        normals=normal[None, :],
        component=np.zeros(1, dtype=int),
    )


def receiver_ring(radius, count, dim=2):
    """Uniform receiver ring/sphere used by the small imaging cases."""
    from mowave.scene import make_receivers

    return make_receivers("circle" if dim == 2 else "sphere", radius, count)


def synthetic_record(values, receivers, grid, kind="scattered", c=C,
                     sigma=0.0, seed=None):
    return WaveRecord(kind=kind, values=np.asarray(values, dtype=float),
                      grid=grid, receivers=receivers, wave_speed=c,
                      sigma=sigma, seed=seed)


def random_record(rng, receivers, grid, scale=1.0):
    vals = scale * rng.standard_normal((receivers.count, grid.steps + 1))
    return synthetic_record(vals, receivers, grid)


def conv_energy_oracle(record, sig, medium, grid):
    """Literal triple-sum convolution energy, one value per sampling point.

    Follows the discrete definition index by index: for each z and each
    output step k, sum over receivers i and offsets j <= k of
    u[i][k - j] * G_z(x_i, t_j) * dt * ds_i, then the time energy of that
    receiver sum. Slow on purpose; keep the cases small.
    """
    from mowave.imaging import kernel_Gz

    n_t = record.grid.steps
    u = record.values[:, :n_t]
    times = record.grid.times()[:n_t]
    dt = record.grid.dt
    w = record.receivers.weights
    pts = record.receivers.points
    out = np.empty(grid.point_count)
    for zi, z in enumerate(grid.points()):
        table = np.stack([
            kernel_Gz(sig, medium, z, pts[i], times)
            for i in range(record.receivers.count)
        ])  # (M, N_t)
        conv = np.zeros(n_t)
        for k in range(n_t):
            acc = 0.0
            for i in range(record.receivers.count):
                acc += np.dot(table[i, :k + 1], u[i, k::-1]) * dt * w[i]
            conv[k] = acc
        out[zi] = np.sum(conv * conv) * dt
    return out


def small_time_grid(total=2.0, steps=64):
    return TimeGrid(total, steps)


def assert_rel_close(a, b, rtol, context=""):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
    worst = float(np.max(np.abs(a - b))) / scale
    assert worst <= rtol, f"{context}: relative deviation {worst:.3e} > {rtol:g}"
