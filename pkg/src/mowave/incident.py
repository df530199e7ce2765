"""Field emitted by a moving point source.

A pulse leaving the emitter at instant ``tau`` reaches ``(x, t)`` when

    t = tau + |x - s(tau)| / c.

For subsonic motion the emission instant is unique and the received field is

    u(x, t) = lam(tau) / (4 pi |x - s(tau)| (1 - v(tau).rhat / c)),

the motion factor amplifying approach and damping recession. The solver
below inverts the emission-time relation for arbitrary query batches; the
probe variant chains two emission-time solves to evaluate the field a
virtual point re-emitter would produce, which both the fast forward model
and the imaging indicators reuse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularFieldError, SolverError
from .records import WaveRecord
from .scene import (
    BoundaryMesh,
    GeometryError,
    Medium,
    Signal,
    TimeGrid,
    Trajectory,
    ZeroSignal,
)

# Iteration budget measured in applications of the retarded map.
MAX_RETARDED_EVALS = 200
RETARDED_TOL_FACTOR = 1e-12
_BISECTION_STEPS = 200

# The emission-time map contracts at rate |v|/c, so acceleration is guarded:
# an extrapolated step is kept only if it beats the plain step's residual.
_AITKEN_FLOOR = 1e-300

# Speed fraction used when forming Doppler denominators. Trajectories are
# audited subsonic on their sample grids, but the spiral path's analytic
# speed is unbounded at its poles; the cap turns a would-be division by zero
# at those isolated instants into a bounded (and signal-suppressed) value.
DOPPLER_SPEED_FRACTION_CAP = 0.995


@dataclass
class RetardedSolve:
    """Solved emission instants for a batch of space-time queries.

    ``tau`` satisfies ``t = tau + |x - s(tau)| / c`` with
    ``|residual| <= 1e-12 * max(1, |t|)`` entrywise.
    """

    x: np.ndarray         # (..., d)
    t: np.ndarray         # (...)
    tau: np.ndarray       # (...)
    residual: np.ndarray  # (...)


def _flatten_queries(traj: Trajectory, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    d = traj.dim
    if x.shape[-1:] != (d,):
        raise GeometryError(f"query points must end in a {d}-vector")
    batch = np.broadcast_shapes(x.shape[:-1], t.shape)
    xb = np.broadcast_to(x, batch + (d,)).reshape(-1, d)
    tb = np.broadcast_to(t, batch).reshape(-1).copy()
    return xb, tb, batch


def solve_retarded_time(traj: Trajectory, medium: Medium, x, t, *,
                        accelerate: bool = True,
                        max_evals: int = MAX_RETARDED_EVALS,
                        tol_factor: float = RETARDED_TOL_FACTOR,
                        tau0=None,
                        residual_log: list | None = None) -> RetardedSolve:
    """Solve ``t = tau + |x - s(tau)| / c`` for the emission instant.

    The contraction map ``tau <- t - |x - s(tau)| / c`` is iterated from
    ``tau = t`` (or ``tau0`` when given) until the residual drops below
    ``tol_factor * max(1, |t|)``; queries still unresolved after
    ``max_evals`` map applications fall back to bisection on the bracket
    ``[t - (|x| + sup|s|) / c - 1, t]``.

    Parameters
    ----------
    x, t : array_like
        Broadcast-compatible query batch, ``x`` shaped ``(..., d)``.
    accelerate : bool
        Apply guarded Aitken extrapolation to the same map (default). The
        plain iteration is kept for diagnosis; both paths meet the identical
        residual contract.
    tau0 : array_like, optional
        Warm-start emission instants (same batch shape as ``t``).
    residual_log : list, optional
        If given, the max-norm residual after each map application is
        appended (plain path only).

    Returns
    -------
    RetardedSolve
    """
    xq, tq, batch = _flatten_queries(traj, x, t)
    c = medium.wave_speed
    tol = tol_factor * np.maximum(1.0, np.abs(tq))

    def fmap(tau):
        return tq - np.linalg.norm(xq - traj.position(tau), axis=-1) / c

    if tau0 is not None:
        tau = np.broadcast_to(np.asarray(tau0, dtype=float), batch).reshape(-1).copy()
    else:
        tau = tq.copy()

    if accelerate and residual_log is None:
        tau, resid, converged = _steffensen(fmap, tau, tol, max_evals)
    else:
        tau, resid, converged = _plain_fixed_point(fmap, tau, tol, max_evals,
                                                   residual_log)

    if not np.all(converged):
        bad = ~converged
        tau[bad] = _bisection(traj, c, xq[bad], tq[bad])
        resid[bad] = fmap(tau)[bad] - tau[bad]
        if np.any(np.abs(resid[bad]) > tol[bad]):
            worst = float(np.max(np.abs(resid[bad])))
            raise SolverError(
                f"retarded-time bisection fallback left residual {worst:.3e}"
            )

    return RetardedSolve(
        x=xq.reshape(batch + (traj.dim,)),
        t=tq.reshape(batch),
        tau=tau.reshape(batch),
        residual=resid.reshape(batch),
    )


def _plain_fixed_point(fmap, tau, tol, max_evals, residual_log):
    resid = fmap(tau) - tau
    evals = 1
    if residual_log is not None:
        residual_log.append(float(np.max(np.abs(resid))))
    while evals < max_evals and np.any(np.abs(resid) > tol):
        tau = tau + resid
        resid = fmap(tau) - tau
        evals += 1
        if residual_log is not None:
            residual_log.append(float(np.max(np.abs(resid))))
    return tau, resid, np.abs(resid) <= tol


def _steffensen(fmap, tau, tol, max_evals):
    resid = np.zeros_like(tau)
    conv = np.zeros(tau.shape, dtype=bool)
    evals = 0
    while evals + 3 <= max_evals:
        a = fmap(tau)
        evals += 1
        r0 = a - tau
        resid = np.where(conv, resid, r0)
        conv = conv | (np.abs(r0) <= tol)
        if np.all(conv):
            return tau, resid, conv
        b = fmap(a)
        evals += 1
        r1 = b - a
        denom = r1 - r0
        safe = np.abs(denom) > _AITKEN_FLOOR
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.where(safe, tau - r0 * r0 / denom, b)
        fc = fmap(cand)
        evals += 1
        rc = fc - cand
        ok = np.abs(rc) <= np.abs(r1)
        tau = np.where(conv, tau, np.where(ok, fc, b))
    # Final residual audit for whatever the budget left behind.
    r = fmap(tau) - tau
    resid = np.where(conv, resid, r)
    conv = np.abs(resid) <= tol
    return tau, resid, conv


def _bisection(traj: Trajectory, c: float, xq, tq):
    """Bracketed solve on ``[t - (|x| + sup|s|)/c - 1, t]``."""
    reach = (np.linalg.norm(xq, axis=-1) + traj.radial_bound()) / c
    lo = tq - reach - 1.0
    hi = tq.copy()
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        fm = tq - mid - np.linalg.norm(xq - traj.position(mid), axis=-1) / c
        take = fm <= 0.0
        hi = np.where(take, mid, hi)
        lo = np.where(take, lo, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Field evaluation
# ---------------------------------------------------------------------------

def _doppler_factor(traj: Trajectory, medium: Medium, tau, toward, dist):
    """``1 - v.rhat / c`` with the speed magnitude capped (see module note)."""
    v = traj.velocity(tau)
    speed = np.linalg.norm(v, axis=-1)
    cap = DOPPLER_SPEED_FRACTION_CAP * medium.wave_speed
    scale = np.where(speed > cap, cap / np.maximum(speed, 1e-300), 1.0)
    vdot = np.sum(v * toward, axis=-1) * scale
    return 1.0 - vdot / (medium.wave_speed * dist)


def incident_field(traj: Trajectory, sig: Signal, medium: Medium, x, t):
    """Incident field ``u(x, t)`` of the moving emitter.

    Queries that a cheap reach bound proves to precede the (causal) signal
    are returned as zero without running the emission-time solve.

    Raises
    ------
    SingularFieldError
        If a query point coincides with the emitter position.
    """
    xq = np.asarray(x, dtype=float)
    tq = np.asarray(t, dtype=float)
    batch = np.broadcast_shapes(xq.shape[:-1], tq.shape)
    out = np.zeros(batch)
    if isinstance(sig, ZeroSignal):
        return out
    xb = np.broadcast_to(xq, batch + (traj.dim,)).reshape(-1, traj.dim)
    tb = np.broadcast_to(tq, batch).reshape(-1)

    # tau <= t - min_range/c, so these queries emit before the signal starts.
    min_range = np.maximum(np.linalg.norm(xb, axis=-1) - traj.radial_bound(), 0.0)
    active = tb >= min_range / medium.wave_speed
    if not np.any(active):
        return out
    xa, ta = xb[active], tb[active]

    sol = solve_retarded_time(traj, medium, xa, ta)
    s_tau = traj.position(sol.tau)
    offset = xa - s_tau
    r = np.linalg.norm(offset, axis=-1)
    if np.any(r < 1e-12 * (1.0 + np.abs(ta))):
        raise SingularFieldError("field query on top of the emitter")
    dopp = _doppler_factor(traj, medium, sol.tau, offset, r)
    vals = sig(sol.tau) / (4.0 * np.pi * r * dopp)

    flat = out.reshape(-1)
    flat[active] = vals
    return out


def point_probe_field(traj: Trajectory, sig: Signal, medium: Medium,
                      center, x, t, *, doppler: bool = True):
    """Field of a virtual point re-emitter at ``center``.

    The emitter's signal reaches ``center``, is re-radiated, and arrives at
    ``(x, t)``; two chained emission-time reductions give

        -lam(t~ - |s(tau~) - z| / c)
        / (4 pi |x - z| |s(tau~) - z| (1 - v.rhat / c)),

    with ``t~ = t - |x - z| / c`` and ``tau~`` the emission instant for the
    query ``(z, t~)``. With ``doppler=False`` the motion factor is dropped.
    """
    z = np.asarray(center, dtype=float)
    xq = np.asarray(x, dtype=float)
    tq = np.asarray(t, dtype=float)
    c = medium.wave_speed
    batch = np.broadcast_shapes(xq.shape[:-1], tq.shape)
    out = np.zeros(batch)
    if isinstance(sig, ZeroSignal):
        return out
    xb = np.broadcast_to(xq, batch + (traj.dim,)).reshape(-1, traj.dim)
    tb = np.broadcast_to(tq, batch).reshape(-1)

    spread = np.linalg.norm(xb - z, axis=-1)
    if np.any(spread < 1e-12 * (1.0 + np.linalg.norm(z))):
        raise SingularFieldError("probe evaluated at its own center")
    t_tilde = tb - spread / c

    min_range = max(float(np.linalg.norm(z)) - traj.radial_bound(), 0.0)
    active = t_tilde >= min_range / c
    if not np.any(active):
        return out

    sol = solve_retarded_time(traj, medium, z, t_tilde[active])
    s_tau = traj.position(sol.tau)
    rho = np.linalg.norm(z - s_tau, axis=-1)
    if np.any(rho < 1e-12 * (1.0 + np.abs(t_tilde[active]))):
        raise SingularFieldError("emitter path passes through the probe center")
    if doppler:
        dopp = _doppler_factor(traj, medium, sol.tau, z - s_tau, rho)
    else:
        dopp = 1.0
    lam = sig(t_tilde[active] - rho / c)
    vals = -lam / (4.0 * np.pi * spread[active] * rho * dopp)

    flat = out.reshape(-1)
    flat[active] = vals
    return out


def incident_on_mesh(traj: Trajectory, sig: Signal, medium: Medium,
                     mesh: BoundaryMesh, grid: TimeGrid) -> WaveRecord:
    """Incident field sampled at every panel centroid and grid time.

    Raises
    ------
    GeometryError
        If the sampled emitter path comes within one panel extent of the
        boundary (the surface operators assume source/obstacle separation).
    """
    times = grid.times()  # (K,)
    s = traj.position(times)  # (K, d)
    gap = np.min(np.linalg.norm(mesh.centroids[:, None, :] - s[None], axis=-1))
    if gap <= mesh.panel_extent:
        raise GeometryError(
            f"emitter path comes within {gap:.3g} of the boundary "
            f"(panel extent {mesh.panel_extent:.3g})"
        )
    u = incident_field(traj, sig, medium,
                       mesh.centroids[:, None, :], times[None, :])  # (P, K)
    return WaveRecord(kind="incident", values=u, grid=grid, receivers=mesh,
                      wave_speed=medium.wave_speed)
