"""Forward scattering from sound-soft obstacles.

The scattered field is carried by a single-layer boundary density ``g``
that cancels the incident field on the obstacle: at every collocation
centroid ``y_i`` and grid time ``t_k``,

    sum_j A_ij g(t_k - r_ij / c; y_j) = -u_inc(y_i, t_k),

with ``A_ij`` the panel quadrature of ``1 / (4 pi r)`` and ``g`` linear
between grid times. No step-size rule is imposed: pairs closer than
``c dt`` couple implicitly and sit in a per-step solve matrix (factorized
once), everything farther back enters an explicit history sum grouped by
whole-step lag, one matrix-vector product per occupied lag per step.

Once marched, the same retarded sums evaluate the field anywhere, and a
one-term re-emitter formula provides the fast model for obstacles that are
small against the travel distances.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from . import incident as _incident
from .errors import AssemblyError, ConfigError, SingularFieldError
from .records import DensityHistory, NoiseSpec, WaveRecord
from .scene import (
    BoundaryMesh,
    MeasurementArray,
    Medium,
    Signal,
    TimeGrid,
    Trajectory,
)

# Flat-segment self integral of 1/(4 pi r) with geometric offset delta =
# panel length / 10; scale-invariant, so one constant serves every panel.
_SELF_TERM_2D = float(np.arcsinh(5.0) / (2.0 * np.pi))

# Late-time growth beyond this ratio (final tenth of the march against the
# rest) triggers the single smoothing pass.
_FILTER_GROWTH_RATIO = 10.0


def panel_self_terms(mesh: BoundaryMesh) -> np.ndarray:
    """Quadrature of ``1/(4 pi |y_i - y|)`` over panel ``i`` itself.

    2-D panels use the regularized flat-segment integral; 3-D panels the
    exact flat-triangle integral observed at the centroid.
    """
    if mesh.dim == 2:
        return np.full(mesh.panel_count, _SELF_TERM_2D)
    if mesh.corners is None:
        raise AssemblyError("3-D mesh lacks triangle corners for self terms")
    corners = mesh.corners  # (P, 3, 3)
    centroid = mesh.centroids  # (P, 3)
    total = np.zeros(mesh.panel_count)
    for a in range(3):
        va = corners[:, a] - centroid
        vb = corners[:, (a + 1) % 3] - centroid
        edge = vb - va
        elen = np.linalg.norm(edge, axis=-1)
        ehat = edge / elen[:, None]
        s1 = np.sum(va * ehat, axis=-1)
        s2 = np.sum(vb * ehat, axis=-1)
        perp = va - s1[:, None] * ehat
        dist = np.linalg.norm(perp, axis=-1)
        r1 = np.linalg.norm(va, axis=-1)
        r2 = np.linalg.norm(vb, axis=-1)
        total += dist * np.log((r2 + s2) / (r1 + s1))
    return total / (4.0 * np.pi)


class _RetardedOperator:
    """Discrete single-layer operator split into implicit and lagged parts."""

    def __init__(self, mesh: BoundaryMesh, medium: Medium, dt: float):
        y = mesh.centroids
        diff = y[:, None, :] - y[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=-1))  # (P, P)
        if not np.array_equal(r, r.T):
            raise AssemblyError("pairwise distances lost symmetry")
        p = mesh.panel_count
        eye = np.eye(p, dtype=bool)
        with np.errstate(divide="ignore"):
            coef = mesh.measures[None, :] / (4.0 * np.pi * r)
        coef[eye] = panel_self_terms(mesh)
        if not np.all(np.isfinite(coef)):
            raise AssemblyError("coincident panels produce a singular operator")

        delay = r / (medium.wave_speed * dt)
        whole = np.floor(delay).astype(int)
        frac = delay - whole

        implicit = np.where(whole == 0, coef * (1.0 - frac), 0.0)
        try:
            self.lu = lu_factor(implicit)
        except LinAlgError as exc:
            raise AssemblyError("implicit coupling matrix is singular") from exc
        self.implicit = implicit

        lag_mats = {}
        for lag in range(1, int(np.max(whole)) + 2):
            mat = coef * ((1.0 - frac) * (whole == lag) + frac * (whole == lag - 1))
            if np.any(mat != 0.0):
                lag_mats[lag] = mat
        self.lags = np.array(sorted(lag_mats), dtype=int)  # (L,)
        if self.lags.size:
            # (P, L * P) so one GEMV folds the whole history window.
            self.lag_matrix = np.concatenate(
                [lag_mats[lag] for lag in self.lags], axis=1
            )
        else:
            self.lag_matrix = np.zeros((p, 0))
        self.max_lag = int(self.lags.max()) if self.lags.size else 1

    def history(self, padded: np.ndarray, row: int) -> np.ndarray:
        if not self.lags.size:
            return 0.0
        window = padded[row - self.lags].reshape(-1)  # (L * P,)
        return self.lag_matrix @ window


def _check_collocation(incident: WaveRecord, mesh: BoundaryMesh) -> None:
    if incident.kind != "incident":
        raise ConfigError(f"need an incident record, got kind={incident.kind!r}")
    coords = incident.point_coordinates()
    if coords.shape != mesh.centroids.shape or \
            not np.array_equal(coords, mesh.centroids):
        raise ConfigError("incident record is not collocated with this mesh")


def march_density(mesh: BoundaryMesh, incident: WaveRecord,
                  medium: Medium) -> DensityHistory:
    """Time-march the boundary density that cancels ``incident`` on the mesh.

    A mild ``(1, 2, 1)/4`` temporal smoothing pass is applied afterwards
    only if the density energy grows more than tenfold over the final tenth
    of the march; the ``filtered`` flag records whether it ran.
    """
    _check_collocation(incident, mesh)
    grid = incident.grid
    op = _RetardedOperator(mesh, medium, grid.dt)

    p = mesh.panel_count
    steps = grid.steps
    pad = op.max_lag
    g = np.zeros((pad + steps + 1, p))
    inc = incident.values  # (P, K)
    for k in range(steps + 1):
        rhs = -inc[:, k] - op.history(g, pad + k)
        g[pad + k] = lu_solve(op.lu, rhs, check_finite=False)

    values = g[pad:]
    filtered = False
    energy = np.sum(values * values, axis=1)  # (K,)
    tail = max(1, (steps + 1) // 10)
    if np.max(energy[-tail:]) > _FILTER_GROWTH_RATIO * np.max(energy[:-tail]):
        padded = np.pad(values, ((1, 1), (0, 0)), mode="edge")
        values = 0.25 * (padded[:-2] + 2.0 * padded[1:-1] + padded[2:])
        filtered = True

    return DensityHistory(values=values, grid=grid, mesh=mesh, filtered=filtered)


def marching_residual(mesh: BoundaryMesh, history: DensityHistory,
                      incident: WaveRecord, medium: Medium) -> float:
    """Max collocation-equation residual of a marched (unfiltered) density."""
    _check_collocation(incident, mesh)
    grid = history.grid
    op = _RetardedOperator(mesh, medium, grid.dt)
    pad = op.max_lag
    g = np.zeros((pad + grid.steps + 1, mesh.panel_count))
    g[pad:] = history.values
    worst = 0.0
    for k in range(grid.steps + 1):
        resid = op.implicit @ g[pad + k] + op.history(g, pad + k) \
            + incident.values[:, k]
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def evaluate_scattered(mesh: BoundaryMesh, density: DensityHistory,
                       receivers: MeasurementArray, grid: TimeGrid,
                       medium: Medium) -> WaveRecord:
    """Radiate a marched density to receiver positions.

    Same retarded quadrature as the march, evaluated off-surface. When the
    output grid shares the density's step, one GEMM per occupied whole-step
    lag covers all receivers and times at once; otherwise each output time
    interpolates the density individually.
    """
    if mesh is not density.mesh and \
            not np.array_equal(mesh.centroids, density.mesh.centroids):
        raise ConfigError("density was marched on a different mesh")
    diff = receivers.points[:, None, :] - mesh.centroids[None, :, :]
    r = np.linalg.norm(diff, axis=-1)  # (M, P)
    if np.min(r) < mesh.panel_extent:
        raise SingularFieldError("receiver sits on the obstacle boundary")
    coef = mesh.measures[None, :] / (4.0 * np.pi * r)

    k = grid.steps + 1
    dt = density.grid.dt
    u = np.zeros((receivers.count, k))
    if abs(grid.dt - dt) <= 1e-12 * dt:
        delay = r / (medium.wave_speed * dt)
        whole = np.floor(delay).astype(int)
        frac = delay - whole
        vt = np.ascontiguousarray(density.values.T)  # (P, Kd)
        kd = vt.shape[1]
        for lag in range(int(np.min(whole)), int(np.max(whole)) + 2):
            mat = coef * ((1.0 - frac) * (whole == lag)
                          + frac * (whole == lag - 1))
            if lag >= k or not np.any(mat != 0.0):
                continue
            n = min(k - lag, kd)
            u[:, lag:lag + n] += mat @ vt[:, :n]
    else:
        kd = density.grid.steps
        cols = np.arange(mesh.panel_count)[None, :]
        for step, t in enumerate(grid.times()):
            tt = t - r / medium.wave_speed  # (M, P)
            pos = tt / dt
            kk = np.floor(pos).astype(int)
            frac = pos - kk
            k0 = np.clip(kk, 0, kd)
            k1 = np.clip(kk + 1, 0, kd)
            g = (1.0 - frac) * density.values[k0, cols] \
                + frac * density.values[k1, cols]
            u[:, step] = np.sum(coef * np.where(tt >= 0.0, g, 0.0), axis=1)
    return WaveRecord(kind="scattered", values=u, grid=grid,
                      receivers=receivers, wave_speed=medium.wave_speed)


def approx_scattered(mesh: BoundaryMesh, traj: Trajectory, sig: Signal,
                     medium: Medium, receivers: MeasurementArray,
                     grid: TimeGrid, *, doppler: bool = True) -> WaveRecord:
    """Small-obstacle closed form of the scattered record.

    Each mesh component is collapsed to a point re-emitter at its center:
    the record gains ``-C u_inc(center, t - r/c) / (4 pi r)`` per receiver,
    with ``C = A / E``, ``A`` the component measure and ``E`` the
    single-layer quadrature row evaluated at the panel nearest the center.
    A sphere of radius ``a`` has ``C = 4 pi a``, so the static limit is the
    classical monopole ``-a u_inc / r``.  Components superpose linearly
    (declared approximation for multiple obstacles). ``doppler=False``
    additionally drops the motion factor of the re-emission.
    """
    times = grid.times()
    self_terms = panel_self_terms(mesh)
    u = np.zeros((receivers.count, times.shape[0]))
    for cid in np.unique(mesh.component):
        mask = mesh.component == cid
        pts = mesh.centroids[mask]
        w = mesh.measures[mask]
        center = (w / w.sum()) @ pts
        amplitude = float(np.sum(w))
        near = int(np.argmin(np.linalg.norm(pts - center, axis=-1)))
        r_row = np.linalg.norm(pts - pts[near], axis=-1)
        with np.errstate(divide="ignore"):
            row = w / (4.0 * np.pi * r_row)
        row[near] = self_terms[mask][near]
        strength = amplitude / float(np.sum(row)) / (4.0 * np.pi)
        u += strength * _incident.point_probe_field(
            traj, sig, medium, center,
            receivers.points[:, None, :], times[None, :], doppler=doppler,
        )
    return WaveRecord(kind="scattered", values=u, grid=grid,
                      receivers=receivers, wave_speed=medium.wave_speed)


def add_noise(record: WaveRecord, noise: NoiseSpec) -> WaveRecord:
    """Multiplicative uniform noise ``u -> (1 + sigma r) u``, ``r ~ U[-1, 1]``.

    The generator is seeded, so a given ``(record, noise)`` pair is
    reproducible bit for bit.
    """
    if record.kind != "scattered":
        raise ConfigError(f"can only perturb a clean scattered record, "
                          f"got kind={record.kind!r}")
    rng = np.random.default_rng(noise.seed)
    draw = rng.uniform(-1.0, 1.0, size=record.values.shape)
    return WaveRecord(
        kind="noisy_scattered",
        values=record.values * (1.0 + noise.sigma * draw),
        grid=record.grid,
        receivers=record.receivers,
        wave_speed=record.wave_speed,
        sigma=noise.sigma,
        seed=noise.seed,
    )
