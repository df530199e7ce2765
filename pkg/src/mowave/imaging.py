"""Direct sampling reconstruction from receiver recordings.

Each sampling point ``z`` is scored against the recorded data without ever
solving an inverse problem. Two scores are computed:

* ``I1``: normalized correlation between the data and the field a point
  re-emitter at ``z`` would produce (the probe function ``U``). Lies in
  ``[0, 1]`` by Cauchy-Schwarz and peaks when ``z`` sits inside a
  scatterer.
* ``I2tilde``: the time energy of the receiver-integrated convolution of
  the data with the advanced kernel ``G_z``, which refocuses every
  recording onto ``z``. Nonnegative; needs no trajectory information.

Discrete sums follow the rectangle rule over ``k = 0 .. N_t - 1`` with the
receiver control measures as surface weights. The convolution has a direct
triple-sum form and an FFT form (length ``2 N_t`` zero-padded transforms);
the two are exact rearrangements of each other and are required to agree
to ``1e-10`` relative on every image.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, rfft

from .errors import ConfigError, EmptyDataError, GeometryError, SolverError
from .incident import _doppler_factor, point_probe_field, solve_retarded_time
from .records import WaveRecord
from .scene import (
    MeasurementArray,
    Medium,
    PulseTrain,
    SamplingGrid,
    Signal,
    Trajectory,
)

IMAGE_KINDS = ("I1", "I2tilde")

# Cauchy-Schwarz can only be exceeded by floating-point roundoff; anything
# past this margin is a genuine defect and raises instead of clamping.
_I1_OVERSHOOT = 1e-12

# Kernel tables are built in z chunks of roughly this many scalars so the
# direct convolution runs as large GEMMs without exhausting memory.
_CHUNK_SCALARS = 24_000_000


@dataclass
class IndicatorImage:
    """One indicator value per sampling point, flat in the grid's C order."""

    kind: str
    grid: SamplingGrid
    values: np.ndarray  # (Nz,)
    norm_bounds: tuple[float, float] | None = None
    degenerate: bool = False
    flagged: np.ndarray | None = None  # z with an undefined probe score

    def __post_init__(self) -> None:
        if self.kind not in IMAGE_KINDS:
            raise ConfigError(f"unknown indicator kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.shape[0] != self.grid.point_count:
            raise ConfigError(
                f"{self.values.shape[0]} values for a "
                f"{self.grid.point_count}-point grid"
            )

    def argmax_point(self) -> np.ndarray:
        """Grid point of the largest value; ties break to the lowest index."""
        return self.grid.points()[int(np.argmax(self.values))]


def normalize_image(img: IndicatorImage) -> IndicatorImage:
    """Affine rescale of the values onto ``[0, 1]``.

    The original ``(min, max)`` is recorded on the result; a constant image
    maps to all ``0.5`` with the ``degenerate`` flag set. The argmax index
    is unchanged either way.
    """
    vals = img.values
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise ConfigError("image must have finite values to normalize")
    lo = float(np.min(vals))
    hi = float(np.max(vals))
    if hi == lo:
        scaled = np.full_like(vals, 0.5)
    else:
        scaled = (vals - lo) / (hi - lo)
    return IndicatorImage(kind=img.kind, grid=img.grid, values=scaled,
                          norm_bounds=(lo, hi), degenerate=hi == lo,
                          flagged=img.flagged)


# ---------------------------------------------------------------------------
# Probe test function
# ---------------------------------------------------------------------------

def probe_U(traj: Trajectory, sig: Signal, medium: Medium, z, x, t):
    """Probe test function ``U(x, t; z)``: a sign-flipped re-emission.

    The emitter's signal arrives at ``z`` and is re-radiated toward ``x``;
    equivalently ``U(x, t; z) = -u_inc(z, t - |x - z| / c) / |x - z|``.
    """
    return point_probe_field(traj, sig, medium, z, x, t)


@dataclass
class ProbePrecomp:
    """Chained emission-time quantities for one sampling point.

    Everything that is signal-independent in ``U(x_i, t_k; z)`` over a full
    receiver-by-time table: the spreading distances, the shifted times
    ``t~ = t - |x - z| / c``, the emission instants solved from them, and
    the Doppler factors. ``live`` masks entries whose ``t~`` precedes any
    possible emission (their probe value is zero by causality). Built per
    ``z`` and meant to be discarded once the point is scored.
    """

    z: np.ndarray
    spread: np.ndarray   # (M,)   |x_i - z|
    t_tilde: np.ndarray  # (M, K)
    tau: np.ndarray      # (M, K)
    range_ret: np.ndarray  # (M, K)   |z - s(tau)|
    doppler: np.ndarray  # (M, K)
    live: np.ndarray     # (M, K) bool

    @classmethod
    def build(cls, traj: Trajectory, medium: Medium, z, points: np.ndarray,
              times: np.ndarray) -> "ProbePrecomp":
        z = np.asarray(z, dtype=float)
        c = medium.wave_speed
        spread = np.linalg.norm(points - z, axis=-1)  # (M,)
        if np.min(spread) < 1e-9:
            raise GeometryError("sampling point sits on a receiver")
        t_tilde = times[None, :] - spread[:, None] / c  # (M, K)

        min_range = max(float(np.linalg.norm(z)) - traj.radial_bound(), 0.0)
        live = t_tilde >= min_range / c
        tau = np.where(live, t_tilde, 0.0)
        range_ret = np.ones_like(t_tilde)
        doppler = np.ones_like(t_tilde)
        if np.any(live):
            sol = solve_retarded_time(traj, medium, z, t_tilde[live])
            s_tau = traj.position(sol.tau)
            rho = np.linalg.norm(z - s_tau, axis=-1)
            if np.min(rho) < 1e-9:
                raise GeometryError("emitter path passes through the "
                                    "sampling point")
            tau[live] = sol.tau
            range_ret[live] = rho
            doppler[live] = _doppler_factor(traj, medium, sol.tau,
                                            z - s_tau, rho)
        return cls(z=z, spread=spread, t_tilde=t_tilde, tau=tau,
                   range_ret=range_ret, doppler=doppler, live=live)

    def values(self, sig: Signal, medium: Medium) -> np.ndarray:
        """The ``U`` table for this point, shaped ``(M, K)``."""
        lam = sig(self.t_tilde - self.range_ret / medium.wave_speed)
        table = -lam / (4.0 * np.pi * self.spread[:, None]
                        * self.range_ret * self.doppler)
        return np.where(self.live, table, 0.0)


# ---------------------------------------------------------------------------
# Indicator I1
# ---------------------------------------------------------------------------

def _quadrature_parts(data: WaveRecord):
    if data.kind not in ("scattered", "noisy_scattered"):
        raise ConfigError(f"imaging needs receiver data, got kind={data.kind!r}")
    if not isinstance(data.receivers, MeasurementArray):
        raise ConfigError("imaging needs a receiver array with weights")
    n_t = data.grid.steps
    u = data.values[:, :n_t]  # rectangle rule: k = 0 .. N_t - 1
    return u, data.receivers, data.grid.times()[:n_t], data.grid.dt


def indicator_I1(data: WaveRecord, traj: Trajectory, sig: Signal,
                 medium: Medium, grid: SamplingGrid) -> IndicatorImage:
    """Correlation indicator: ``|<u, U(z)>| / (||u|| ||U(z)||)`` per point.

    Inner product and norms share the quadrature ``sum_{i,k} (.)
    ds_i dt``. Points whose probe table is identically zero on the data
    window score 0 and are marked in ``flagged`` (one summary warning is
    emitted). Values may exceed 1 by at most floating-point roundoff; such
    overshoot is clamped.
    """
    u, receivers, times, dt = _quadrature_parts(data)
    if not np.any(u):
        raise EmptyDataError("data record is identically zero")
    root_w = np.sqrt(receivers.weights * dt)  # (M,)
    uw = u * root_w[:, None]
    u_norm = float(np.linalg.norm(uw))

    pts = grid.points()
    values = np.empty(pts.shape[0])
    flagged = np.zeros(pts.shape[0], dtype=bool)
    for idx, z in enumerate(pts):
        pre = ProbePrecomp.build(traj, medium, z, receivers.points, times)
        tw = pre.values(sig, medium) * root_w[:, None]
        t_norm = float(np.linalg.norm(tw))
        if t_norm == 0.0:
            flagged[idx] = True
            values[idx] = 0.0
            continue
        score = abs(float(np.vdot(uw, tw))) / (u_norm * t_norm)
        if score > 1.0 + _I1_OVERSHOOT:
            raise SolverError(
                f"correlation {score!r} exceeds the Cauchy-Schwarz bound"
            )
        values[idx] = min(score, 1.0)
    if np.any(flagged):
        warnings.warn(
            f"probe function vanishes on the data window at "
            f"{int(np.sum(flagged))} sampling points; scored 0 there",
            stacklevel=2,
        )
    return IndicatorImage(kind="I1", grid=grid, values=values, flagged=flagged)


# ---------------------------------------------------------------------------
# Indicator I2tilde
# ---------------------------------------------------------------------------

def kernel_Gz(sig: Signal, medium: Medium, z, x, t):
    """Refocusing kernel ``G_z(x, t) = lam(t + |x - z| / c) / (4 pi sqrt|x - z|)``.

    Note the advanced time argument and the square-root spreading.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    rho = np.linalg.norm(x - z, axis=-1)
    if np.any(rho < 1e-9):
        raise GeometryError("kernel evaluated at its own sampling point")
    return sig(np.asarray(t, dtype=float) + rho / medium.wave_speed) \
        / (4.0 * np.pi * np.sqrt(rho))


def _kernel_tables(sig: Signal, medium: Medium, z_chunk: np.ndarray,
                   points: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``G_z`` sampled for a chunk of points: ``(Zc, M, len(times))``."""
    rho = np.linalg.norm(points[None, :, :] - z_chunk[:, None, :], axis=-1)
    if np.any(rho < 1e-9):
        raise GeometryError("sampling chunk touches a receiver")
    lam = sig(times[None, None, :] + rho[:, :, None] / medium.wave_speed)
    return lam / (4.0 * np.pi * np.sqrt(rho))[:, :, None]


def _pulse_period_steps(sig: Signal, dt: float, n_t: int) -> int | None:
    """Pulse-train period in whole grid steps, when commensurate.

    The train repeats exactly from ``t = 0`` on, so whenever its period
    lands on the step lattice the kernel table is periodic in the lag
    index and both convolution methods can reuse one period of columns.
    Returns ``None`` for other signals, incommensurate grids, or windows
    shorter than one period.
    """
    if not isinstance(sig, PulseTrain):
        return None
    per = sig.base_period / sig.periods / dt
    steps = int(round(per))
    if steps < 1 or n_t <= steps:
        return None
    if abs(per - steps) > 1e-9 * max(1.0, per):
        return None
    return steps


def indicator_I2tilde(data: WaveRecord, sig: Signal, medium: Medium,
                      grid: SamplingGrid, method: str = "fft") -> IndicatorImage:
    """Convolution-energy indicator.

    Per point: ``sum_k |sum_i sum_{j<=k} u[i][k-j] G_z(x_i, t_j) dt ds_i|^2
    dt``. ``method="direct"`` evaluates that triple sum as written (one
    GEMM per convolution offset); ``method="fft"`` computes the identical
    causal convolutions via length-``2 N_t`` zero-padded transforms. For a
    step-commensurate pulse train the kernel table is exactly periodic in
    the lag index, so one period of columns serves every lag: the direct
    sum regroups lags by residue (period-folded data partial sums, same
    addends), and the FFT path tiles the period block.
    """
    if method not in ("fft", "direct"):
        raise ConfigError(f"unknown convolution method {method!r}")
    u, receivers, times, dt = _quadrature_parts(data)
    n_t = u.shape[1]
    uw = u * (receivers.weights * dt)[:, None]  # (M, N_t)

    pts = grid.points()
    values = np.empty(pts.shape[0])
    pad = 2 * n_t
    uf = rfft(uw, pad, axis=-1) if method == "fft" else None

    fold = _pulse_period_steps(sig, dt, n_t)
    shifted = None
    if fold is not None and method == "direct":
        # Folded partial sums F[i, q] = sum_m uw[i, q - m * fold]; each
        # period block adds the previous, already-accumulated block.
        folded = uw.copy()
        for lo in range(fold, n_t, fold):
            hi = min(lo + fold, n_t)
            folded[:, lo:hi] += folded[:, lo - fold:hi - fold]
        # shifted[i * fold + r, k] = F[i, k - r], so a chunk's whole triple
        # sum is one GEMM against the (i, r)-flattened kernel block.
        shifted = np.zeros((receivers.count * fold, n_t))
        for r in range(fold):
            shifted[r::fold, r:] = folded[:, :n_t - r]

    chunk = max(1, _CHUNK_SCALARS // (3 * receivers.count * n_t))
    for start in range(0, pts.shape[0], chunk):
        zc = pts[start:start + chunk]
        if fold is not None:
            block = _kernel_tables(sig, medium, zc, receivers.points,
                                   times[:fold])
            tables = None
        else:
            block = None
            tables = _kernel_tables(sig, medium, zc, receivers.points, times)
        if method == "fft":
            if fold is not None:
                reps = -(-n_t // fold)
                tables = np.tile(block, (1, 1, reps))[:, :, :n_t]
            gf = rfft(tables, pad, axis=-1)  # (Zc, M, pad/2+1)
            conv = irfft(np.sum(uf[None] * gf, axis=1), pad, axis=-1)
            conv = conv[:, :n_t]
        elif fold is not None:
            conv = block.reshape(zc.shape[0], -1) @ shifted
        else:
            conv = np.zeros((zc.shape[0], n_t))
            for j in range(n_t):
                conv[:, j:] += tables[:, :, j] @ uw[:, :n_t - j]
        values[start:start + chunk] = np.sum(conv * conv, axis=-1) * dt
    return IndicatorImage(kind="I2tilde", grid=grid, values=values)


def indicator_I2_weighted(data: WaveRecord, sig: Signal, medium: Medium,
                          grid: SamplingGrid, y0, method: str = "fft"
                          ) -> IndicatorImage:
    """Study variant of the convolution indicator with the center weight.

    Multiplies each recording by ``sqrt(|x_i - y0|)`` before the
    convolution energy, which requires knowing the scatterer center ``y0``;
    useful only for localization studies, hence kept out of the pipeline.
    The result shares the ``I2tilde`` kind.
    """
    if not isinstance(data.receivers, MeasurementArray):
        raise ConfigError("imaging needs a receiver array with weights")
    y0 = np.asarray(y0, dtype=float)
    scale = np.sqrt(np.linalg.norm(data.receivers.points - y0, axis=-1))
    weighted = WaveRecord(
        kind=data.kind,
        values=data.values * scale[:, None],
        grid=data.grid,
        receivers=data.receivers,
        wave_speed=data.wave_speed,
        sigma=data.sigma,
        seed=data.seed,
    )
    return indicator_I2tilde(weighted, sig, medium, grid, method)


# ---------------------------------------------------------------------------
# On-disk form
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def save_image(img: IndicatorImage, path) -> None:
    """Write ``z1,z2[,z3],value`` rows under the fixed header."""
    grid = img.grid
    dims = ",".join(str(int(n)) for n in grid.counts)
    box = ",".join(
        f"{_FMT % lo}..{_FMT % hi}" for lo, hi in zip(grid.lower, grid.upper)
    )
    header = f"# mowave-image v1, kind={img.kind}, dims={dims}, box={box}"
    rows = np.column_stack([grid.points(), img.values])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, rows, fmt=_FMT, delimiter=",")


def load_image(path) -> IndicatorImage:
    """Read an image written by :func:`save_image`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# mowave-image v1,"):
            raise ConfigError(f"{path}: not a mowave image")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    fields = {}
    for item in header.split(",", 1)[1].split(", "):
        key, _, val = item.partition("=")
        fields[key.strip()] = val
    kind = fields["kind"]
    counts = [int(n) for n in fields["dims"].split(",")]
    spans = [tuple(map(float, b.split(".."))) for b in fields["box"].split(",")]
    if len(spans) != len(counts):
        raise ConfigError(f"{path}: {len(counts)} dims but {len(spans)} spans")
    grid = SamplingGrid(
        lower=[s[0] for s in spans],
        upper=[s[1] for s in spans],
        counts=counts,
    )
    if data.shape != (grid.point_count, grid.dim + 1):
        raise ConfigError(f"{path}: body shape {data.shape} does not match "
                          f"the declared grid")
    return IndicatorImage(kind=kind, grid=grid, values=data[:, -1])
