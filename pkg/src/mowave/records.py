"""Time-sampled data records and their on-disk CSV form.

A :class:`WaveRecord` holds one field quantity sampled on a shared time
grid: the incident field on mesh panels, or the scattered field (clean or
noisy) at receivers. :class:`DensityHistory` is the boundary density the
time-marching solver produces. The CSV layout is fixed:

    # mowave-record v1, kind=<kind>, c=<c>, Nt=<Nt>, dt=<dt>, Nm=<Nm>, sigma=<sigma>, seed=<seed>
    <receiver coordinates, flattened, one line>
    <Nt + 1 rows of Nm comma-separated samples, 17 significant digits>

Records with ``kind=incident`` store panel centroids on the coordinate
line. Reloading reconstructs uniform quadrature weights from the mean point
radius; that is exact for the circle and Fibonacci-sphere layouts shipped
here (arc layouts reload with full-circle weights, a pure rescaling of the
indicator images).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .scene import BoundaryMesh, MeasurementArray, TimeGrid

RECORD_KINDS = ("incident", "scattered", "noisy_scattered")
_FMT = "%.17g"


@dataclass
class WaveRecord:
    """Field samples ``values[i][k]`` at point ``i``, time ``k * dt``."""

    kind: str
    values: np.ndarray                          # (M, steps + 1)
    grid: TimeGrid
    receivers: MeasurementArray | BoundaryMesh  # mesh when kind=incident
    wave_speed: float
    sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in RECORD_KINDS:
            raise ConfigError(f"unknown record kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        expect = (self.point_coordinates().shape[0], self.grid.steps + 1)
        if self.values.shape != expect:
            raise ConfigError(
                f"record values shaped {self.values.shape}, expected {expect}"
            )

    def point_coordinates(self) -> np.ndarray:
        if isinstance(self.receivers, BoundaryMesh):
            return self.receivers.centroids
        return self.receivers.points


@dataclass
class DensityHistory:
    """Boundary density ``values[k][j]`` at time ``k * dt``, panel ``j``.

    Between grid times the density is linear; before ``t = 0`` it is zero.
    """

    values: np.ndarray  # (steps + 1, P)
    grid: TimeGrid
    mesh: BoundaryMesh
    filtered: bool = False

    def sample(self, t) -> np.ndarray:
        """Density at arbitrary times ``t``; shape ``t.shape + (P,)``."""
        t = np.asarray(t, dtype=float)
        dt = self.grid.dt
        pos = t / dt
        k = np.floor(pos).astype(int)
        frac = (pos - k)[..., None]
        k0 = np.clip(k, 0, self.grid.steps)
        k1 = np.clip(k + 1, 0, self.grid.steps)
        out = (1.0 - frac) * self.values[k0] + frac * self.values[k1]
        return np.where((t >= 0.0)[..., None], out, 0.0)


@dataclass
class NoiseSpec:
    """Multiplicative uniform noise ``u -> (1 + sigma r) u``, seeded."""

    sigma: float
    seed: int

    def __post_init__(self) -> None:
        self.sigma = float(self.sigma)
        self.seed = int(self.seed)
        if self.sigma < 0.0:
            raise ConfigError(f"noise level must be >= 0, got {self.sigma}")


def save_record(record: WaveRecord, path) -> None:
    """Write a record in the fixed CSV layout."""
    coords = record.point_coordinates()
    m = coords.shape[0]
    seed = 0 if record.seed is None else record.seed
    header = (
        f"# mowave-record v1, kind={record.kind}, c={_FMT % record.wave_speed}, "
        f"Nt={record.grid.steps}, dt={_FMT % record.grid.dt}, Nm={m}, "
        f"sigma={_FMT % record.sigma}, seed={seed}"
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        fh.write(",".join(_FMT % v for v in coords.reshape(-1)) + "\n")
        np.savetxt(fh, record.values.T, fmt=_FMT, delimiter=",")


def load_record(path) -> WaveRecord:
    """Read a record written by :func:`save_record`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# mowave-record v1,"):
            raise ConfigError(f"{path}: not a mowave record")
        coord_line = fh.readline().strip()
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    fields = dict(
        item.strip().split("=", 1)
        for item in header.split(",", 1)[1].split(",")
    )
    kind = fields["kind"]
    steps = int(fields["Nt"])
    dt = float(fields["dt"])
    m = int(fields["Nm"])
    sigma = float(fields["sigma"])
    seed = int(fields["seed"])
    coords = np.fromstring(coord_line, sep=",")
    if coords.size % m != 0:
        raise ConfigError(f"{path}: coordinate line does not split into {m} points")
    dim = coords.size // m
    if dim not in (2, 3):
        raise ConfigError(f"{path}: points are {dim}-dimensional")
    pts = coords.reshape(m, dim)
    radius = float(np.mean(np.linalg.norm(pts, axis=-1)))
    if dim == 2:
        weights = np.full(m, 2.0 * np.pi * radius / m)
        layout = "circle"
    else:
        weights = np.full(m, 4.0 * np.pi * radius**2 / m)
        layout = "sphere"
    array = MeasurementArray(pts, weights, radius, layout)
    if data.shape != (steps + 1, m):
        raise ConfigError(
            f"{path}: {data.shape[0]} rows of {data.shape[1]}, "
            f"expected {steps + 1} of {m}"
        )
    return WaveRecord(
        kind=kind,
        values=np.ascontiguousarray(data.T),
        grid=TimeGrid(steps * dt, steps),
        receivers=array,
        wave_speed=float(fields["c"]),
        sigma=sigma,
        seed=seed if kind == "noisy_scattered" else None,
    )
