"""Scene assembly for moving-emitter scattering experiments.

Everything geometric and kinematic lives here: the propagation medium, the
emitter path and its pulse shape, sound-soft obstacle boundaries discretized
into panels, receiver arrays with quadrature weights, and the time/sampling
grids shared by the forward and imaging stages.

Conventions
-----------
* Positions are float64 arrays of length ``d`` (2 or 3); batched queries use
  arrays of shape ``(..., d)``.
* Panel quadrature is midpoint rule: a panel is a centroid, a measure
  (arc length in 2-D, flat area in 3-D) and an outward orientation tag.
* All randomness is injected by callers; nothing here draws random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, GeometryError, SupersonicError

# Default panelizations. Point-like obstacles get a coarse ring because the
# panel count only has to resolve the (tiny) boundary, not the wavelength.
DEFAULT_CURVE_PANELS = 256
POINTLIKE_CURVE_PANELS = 16
DEFAULT_SPHERE_SUBDIVISIONS = 3
DEFAULT_CUBE_FACE_DIVISIONS = 8

# Sub-sampling factor used when measuring arc length of curved panels.
_ARCLEN_REFINE = 8

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


# ---------------------------------------------------------------------------
# Medium
# ---------------------------------------------------------------------------

@dataclass
class Medium:
    """Homogeneous propagation medium with wave speed ``c > 0``."""

    wave_speed: float

    def __post_init__(self) -> None:
        self.wave_speed = float(self.wave_speed)
        if not self.wave_speed > 0.0:
            raise ConfigError(f"wave speed must be positive, got {self.wave_speed}")


# ---------------------------------------------------------------------------
# Emitter trajectories
# ---------------------------------------------------------------------------

@dataclass
class StationaryPath:
    """Emitter fixed at ``point`` for all times."""

    point: np.ndarray

    def __post_init__(self) -> None:
        self.point = np.asarray(self.point, dtype=float)
        if self.point.ndim != 1 or self.point.shape[0] not in (2, 3):
            raise ConfigError("stationary point must be a 2- or 3-vector")

    @property
    def dim(self) -> int:
        return self.point.shape[0]

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.point, t.shape + (self.dim,)).copy()

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (self.dim,))

    def radial_bound(self) -> float:
        return float(np.linalg.norm(self.point))


@dataclass
class CirclePath:
    """Uniform circular motion in the plane, centered at the origin.

    Position is ``radius * (cos(w t + phase), sin(w t + phase))``; the speed
    is ``|w| * radius`` for all times.

    Parameters
    ----------
    radius : float
        Circle radius, > 0.
    angular_speed : float
        Angular rate ``w`` in radians per unit time.
    phase : float
        Angle at ``t = 0``.
    """

    radius: float
    angular_speed: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        self.radius = float(self.radius)
        self.angular_speed = float(self.angular_speed)
        self.phase = float(self.phase)
        if not self.radius > 0.0:
            raise ConfigError(f"circle radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return 2

    def position(self, t):
        t = np.asarray(t, dtype=float)
        a = self.angular_speed * t + self.phase
        return np.stack([self.radius * np.cos(a), self.radius * np.sin(a)], axis=-1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        a = self.angular_speed * t + self.phase
        rw = self.radius * self.angular_speed
        return np.stack([-rw * np.sin(a), rw * np.cos(a)], axis=-1)

    def radial_bound(self) -> float:
        return self.radius


@dataclass
class SpiralPath:
    """Spherical spiral sweeping pole to pole over ``[0, total_time]``.

    With normalized time ``p = t / total_time`` the emitter sits at radius
    ``radius`` on the sphere, polar angle ``arccos(1 - 2p)`` and azimuth
    ``2 pi turns p``. Outside ``[0, total_time]`` the path is clamped to the
    poles (zero velocity).

    The analytic speed behaves like ``radius / (total_time * sqrt(p))`` near
    the poles and is therefore unbounded there; consumers that need a speed
    must sample it on their own time grid (see :func:`max_sampled_speed`).
    """

    radius: float
    turns: float
    total_time: float

    def __post_init__(self) -> None:
        self.radius = float(self.radius)
        self.turns = float(self.turns)
        self.total_time = float(self.total_time)
        if not self.radius > 0.0:
            raise ConfigError(f"spiral radius must be positive, got {self.radius}")
        if not self.total_time > 0.0:
            raise ConfigError("spiral total_time must be positive")

    @property
    def dim(self) -> int:
        return 3

    def position(self, t):
        t = np.asarray(t, dtype=float)
        p = np.clip(t / self.total_time, 0.0, 1.0)
        cos_pol = 1.0 - 2.0 * p
        sin_pol = 2.0 * np.sqrt(p * (1.0 - p))
        az = 2.0 * np.pi * self.turns * p
        return self.radius * np.stack(
            [sin_pol * np.cos(az), sin_pol * np.sin(az), cos_pol], axis=-1
        )

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        p = t / self.total_time
        inside = (p > 0.0) & (p < 1.0)
        ps = np.where(inside, p, 0.5)  # placeholder keeps the sqrt finite
        cos_pol = 1.0 - 2.0 * ps
        sin_pol = 2.0 * np.sqrt(ps * (1.0 - ps))
        az = 2.0 * np.pi * self.turns * ps
        cos_az, sin_az = np.cos(az), np.sin(az)
        # d(polar)/dt and d(azimuth)/dt; the polar rate diverges at the poles.
        pol_rate = 1.0 / (self.total_time * np.sqrt(ps * (1.0 - ps)))
        az_rate = 2.0 * np.pi * self.turns / self.total_time
        vx = pol_rate * cos_pol * cos_az - az_rate * sin_pol * sin_az
        vy = pol_rate * cos_pol * sin_az + az_rate * sin_pol * cos_az
        vz = -pol_rate * sin_pol
        v = self.radius * np.stack([vx, vy, vz], axis=-1)
        return np.where(inside[..., None], v, 0.0)

    def radial_bound(self) -> float:
        return self.radius


@dataclass
class PolylinePath:
    """Piecewise-linear path through ``points`` at the given knot ``times``.

    Queries outside ``[times[0], times[-1]]`` raise :class:`DomainError`;
    callers must supply knots covering every retarded time they will probe.
    Velocity is the slope of the active segment (piecewise constant).
    """

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.times.ndim != 1 or self.times.shape[0] < 2:
            raise ConfigError("polyline needs at least two knot times")
        if np.any(np.diff(self.times) <= 0.0):
            raise ConfigError("polyline knot times must be strictly increasing")
        if self.points.shape != (self.times.shape[0], self.points.shape[-1]) or \
                self.points.shape[-1] not in (2, 3):
            raise ConfigError("polyline points must be (K, 2) or (K, 3)")

    @property
    def dim(self) -> int:
        return self.points.shape[-1]

    def time_range(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def _segment_index(self, t: np.ndarray) -> np.ndarray:
        lo, hi = self.times[0], self.times[-1]
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(
                f"polyline queried at t outside [{lo}, {hi}]"
            )
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.clip(idx, 0, self.times.shape[0] - 2)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        idx = self._segment_index(t)
        t0 = self.times[idx]
        t1 = self.times[idx + 1]
        w = ((t - t0) / (t1 - t0))[..., None]
        return (1.0 - w) * self.points[idx] + w * self.points[idx + 1]

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        idx = self._segment_index(t)
        dt = (self.times[idx + 1] - self.times[idx])[..., None]
        return (self.points[idx + 1] - self.points[idx]) / dt

    def radial_bound(self) -> float:
        return float(np.max(np.linalg.norm(self.points, axis=-1)))


Trajectory = StationaryPath | CirclePath | SpiralPath | PolylinePath


def trajectory_position(traj: Trajectory, t):
    """Emitter position ``s(t)``; ``t`` may be any array shape."""
    return traj.position(t)


def trajectory_velocity(traj: Trajectory, t):
    """Emitter velocity ``ds/dt``; ``t`` may be any array shape."""
    return traj.velocity(t)


def max_sampled_speed(traj: Trajectory, times) -> float:
    """Largest ``|velocity|`` over the sample ``times``."""
    v = traj.velocity(np.asarray(times, dtype=float))
    return float(np.max(np.linalg.norm(v, axis=-1)))


def check_subsonic(traj: Trajectory, medium: Medium, times) -> float:
    """Verify ``max |v| < c`` on ``times`` and return the sampled maximum.

    Raises
    ------
    SupersonicError
        If any sampled speed reaches the wave speed.
    """
    vmax = max_sampled_speed(traj, times)
    if vmax >= medium.wave_speed:
        raise SupersonicError(
            f"sampled emitter speed {vmax:.6g} reaches wave speed "
            f"{medium.wave_speed:.6g}"
        )
    return vmax


# ---------------------------------------------------------------------------
# Emitted signals
# ---------------------------------------------------------------------------

@dataclass
class PulseTrain:
    """Periodic burst signal: ``periods`` sine-modulated Gaussian bursts.

    On one period ``[0, base_period / periods)`` the amplitude is

        sin(10 * periods * t) * exp(-15 * periods**2 * (t - base_period / (3 periods))**2)

    repeated periodically for ``t >= 0`` and identically zero for ``t < 0``.
    ``|value| <= 1`` everywhere.
    """

    periods: int
    base_period: float

    def __post_init__(self) -> None:
        self.periods = int(self.periods)
        self.base_period = float(self.base_period)
        if self.periods < 1:
            raise ConfigError(f"periods must be >= 1, got {self.periods}")
        if not self.base_period > 0.0:
            raise ConfigError("base_period must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        n = self.periods
        period = self.base_period / n
        tf = np.mod(t, period)
        peak = self.base_period / (3.0 * n)
        val = np.sin(10.0 * n * tf) * np.exp(-15.0 * n**2 * (tf - peak) ** 2)
        return np.where(t >= 0.0, val, 0.0)


@dataclass
class GaussianPulse:
    """Single causal Gaussian bump ``exp(-(t - center)^2 / (2 width^2))``.

    Zero for ``t < 0``; choose ``center >= 4 * width`` to keep the causal
    truncation negligible.
    """

    center: float
    width: float

    def __post_init__(self) -> None:
        self.center = float(self.center)
        self.width = float(self.width)
        if not self.width > 0.0:
            raise ConfigError("pulse width must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = np.exp(-((t - self.center) ** 2) / (2.0 * self.width**2))
        return np.where(t >= 0.0, val, 0.0)


@dataclass
class ZeroSignal:
    """Identically zero emission (null experiments)."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape)


Signal = PulseTrain | GaussianPulse | ZeroSignal


def signal_eval(signal: Signal, t):
    """Evaluate the emitted amplitude at ``t`` (any array shape)."""
    return signal(t)


# ---------------------------------------------------------------------------
# Obstacle boundaries
# ---------------------------------------------------------------------------

_CURVE_KINDS = ("circle", "acorn", "square", "kite")
_SURFACE_KINDS = ("sphere", "cube")


@dataclass
class ShapeSpec:
    """Parametric obstacle shape.

    ``size`` is the radius for ``circle`` and ``sphere``, the scale factor of
    the parameterization for ``acorn``/``square``/``kite``, and the half edge
    length for ``cube``.
    """

    kind: str
    center: np.ndarray
    size: float
    resolution: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _CURVE_KINDS + _SURFACE_KINDS:
            raise GeometryError(f"unknown shape kind {self.kind!r}")
        self.center = np.asarray(self.center, dtype=float)
        self.size = float(self.size)
        if self.center.shape != (self.dim,):
            raise GeometryError(
                f"{self.kind} center must be a {self.dim}-vector, "
                f"got shape {self.center.shape}"
            )
        if not self.size > 0.0:
            raise GeometryError(f"shape size must be positive, got {self.size}")
        if self.resolution is not None:
            self.resolution = int(self.resolution)
            # Floors: 8 panels for a curve, subdivision 0 (the bare
            # icosahedron) for a sphere, 1 division per cube face.
            floor = 8 if self.dim == 2 else (0 if self.kind == "sphere" else 1)
            if self.resolution < floor:
                raise GeometryError(f"resolution {self.resolution} too coarse")

    @property
    def dim(self) -> int:
        return 2 if self.kind in _CURVE_KINDS else 3


def _curve_points(shape: ShapeSpec, theta: np.ndarray) -> np.ndarray:
    """Boundary points of a 2-D shape at parameter angles ``theta``."""
    r = shape.size
    ct, st = np.cos(theta), np.sin(theta)
    if shape.kind == "circle":
        x, y = r * ct, r * st
    elif shape.kind == "acorn":
        x = r * ct * np.sqrt(17.0 / 4.0 + 2.0 * np.cos(3.0 * theta))
        y = r * st * np.sqrt(17.0 / 4.0 + 2.0 * np.sin(3.0 * theta))
    elif shape.kind == "square":
        x = r * (st**3 + st + ct**3 + ct)
        y = r * (st**3 + st - ct**3 - ct)
    elif shape.kind == "kite":
        x = r * (ct + 0.65 * np.cos(2.0 * theta) - 0.65)
        y = r * 1.5 * st
    else:  # pragma: no cover - guarded by ShapeSpec
        raise GeometryError(f"{shape.kind} is not a 2-D curve")
    return shape.center + np.stack([x, y], axis=-1)


@dataclass
class BoundaryMesh:
    """Panelized obstacle boundary (possibly several components).

    Attributes
    ----------
    centroids : ndarray, (P, d)
        Panel midpoints used as collocation and quadrature nodes.
    measures : ndarray, (P,)
        Arc length (2-D) or flat triangle area (3-D) per panel.
    normals : ndarray, (P, d)
        Unit outward orientation tags (metadata; the single-layer operators
        never differentiate through them).
    component : ndarray, (P,) int
        Component id per panel, consecutive from 0.
    corners : ndarray, (P, 3, 3), optional
        Triangle vertices for 3-D meshes (drives the analytic self-term).
    center : ndarray, (d,)
        Measure-weighted mean of the centroids.
    diameter : float
        Largest pairwise centroid distance.
    """

    dim: int
    centroids: np.ndarray
    measures: np.ndarray
    normals: np.ndarray
    component: np.ndarray
    corners: np.ndarray | None = None
    center: np.ndarray = field(init=False)
    diameter: float = field(init=False)

    def __post_init__(self) -> None:
        self.centroids = np.asarray(self.centroids, dtype=float)
        self.measures = np.asarray(self.measures, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        self.component = np.asarray(self.component, dtype=int)
        if self.centroids.ndim != 2 or self.centroids.shape[1] != self.dim:
            raise GeometryError("centroids must be (P, dim)")
        if np.any(self.measures <= 0.0):
            raise GeometryError("panel measures must be positive")
        w = self.measures / np.sum(self.measures)
        self.center = w @ self.centroids
        self.diameter = float(np.sqrt(_max_sq_dist(self.centroids)))

    @property
    def panel_count(self) -> int:
        return self.centroids.shape[0]

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.measures))

    @property
    def panel_extent(self) -> float:
        """Characteristic panel size: max arc length (2-D) or sqrt-area (3-D)."""
        m = float(np.max(self.measures))
        return m if self.dim == 2 else float(np.sqrt(m))

    def component_center(self, cid: int) -> np.ndarray:
        mask = self.component == cid
        w = self.measures[mask]
        return (w / w.sum()) @ self.centroids[mask]

    @classmethod
    def combine(cls, meshes: list["BoundaryMesh"]) -> "BoundaryMesh":
        """Concatenate meshes into one multi-component boundary."""
        if not meshes:
            raise GeometryError("cannot combine an empty mesh list")
        dims = {m.dim for m in meshes}
        if len(dims) != 1:
            raise GeometryError("cannot combine meshes of mixed dimension")
        comp, offset = [], 0
        for m in meshes:
            comp.append(m.component + offset)
            offset += int(m.component.max()) + 1
        corners = None
        if all(m.corners is not None for m in meshes):
            corners = np.concatenate([m.corners for m in meshes])
        return cls(
            dim=meshes[0].dim,
            centroids=np.concatenate([m.centroids for m in meshes]),
            measures=np.concatenate([m.measures for m in meshes]),
            normals=np.concatenate([m.normals for m in meshes]),
            component=np.concatenate(comp),
            corners=corners,
        )


def _max_sq_dist(pts: np.ndarray) -> float:
    """Largest squared pairwise distance, chunked to bound memory."""
    best = 0.0
    step = 512
    for i in range(0, pts.shape[0], step):
        d = pts[i:i + step, None, :] - pts[None, :, :]
        best = max(best, float(np.max(np.sum(d * d, axis=-1))))
    return best


def build_boundary_mesh(shape: ShapeSpec, resolution: int | None = None) -> BoundaryMesh:
    """Panelize one obstacle boundary.

    Parameters
    ----------
    shape : ShapeSpec
        Obstacle description.
    resolution : int, optional
        Overrides ``shape.resolution``. For 2-D curves this is the panel
        count; for spheres the icosahedron subdivision level; for cubes the
        per-face grid division count.

    Returns
    -------
    BoundaryMesh
        Single-component mesh with midpoint panels.
    """
    res = resolution if resolution is not None else shape.resolution
    if shape.kind in _CURVE_KINDS:
        return _mesh_curve(shape, res or DEFAULT_CURVE_PANELS)
    if shape.kind == "sphere":
        level = res if res is not None else DEFAULT_SPHERE_SUBDIVISIONS
        return _mesh_icosphere(shape.center, shape.size, level)
    return _mesh_cube(shape.center, shape.size,
                      res if res is not None else DEFAULT_CUBE_FACE_DIVISIONS)


def _mesh_curve(shape: ShapeSpec, panels: int) -> BoundaryMesh:
    edges = np.linspace(0.0, 2.0 * np.pi, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    centroids = _curve_points(shape, mids)  # (P, 2)

    # Arc length by chord refinement inside each panel.
    sub = np.linspace(0.0, 1.0, _ARCLEN_REFINE + 1)
    theta_fine = edges[:-1, None] + sub[None, :] * np.diff(edges)[:, None]
    pts_fine = _curve_points(shape, theta_fine)  # (P, refine+1, 2)
    seg = np.diff(pts_fine, axis=1)
    measures = np.sum(np.linalg.norm(seg, axis=-1), axis=1)

    # Outward normal from the (counter-clockwise) tangent direction.
    h = (edges[1] - edges[0]) / 256.0
    tang = _curve_points(shape, mids + h) - _curve_points(shape, mids - h)
    tang /= np.linalg.norm(tang, axis=-1, keepdims=True)
    normals = np.stack([tang[:, 1], -tang[:, 0]], axis=-1)

    return BoundaryMesh(2, centroids, measures, normals,
                        np.zeros(panels, dtype=int))


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=float)
_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def _mesh_icosphere(center: np.ndarray, radius: float, level: int) -> BoundaryMesh:
    """Subdivided icosahedron projected to the sphere; 20 * 4**level panels."""
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = list(_ICO_FACES)
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        faces = [
            tri
            for (a, b, c) in faces
            for tri in (
                (a, midpoint(a, b), midpoint(a, c)),
                (b, midpoint(b, c), midpoint(a, b)),
                (c, midpoint(a, c), midpoint(b, c)),
                (midpoint(a, b), midpoint(b, c), midpoint(a, c)),
            )
        ]
    v = center + radius * np.asarray(verts)  # (V, 3)
    tris = np.asarray(faces, dtype=int)  # (P, 3)
    return _triangle_mesh(v[tris[:, 0]], v[tris[:, 1]], v[tris[:, 2]], center)


def _mesh_cube(center: np.ndarray, half: float, divisions: int) -> BoundaryMesh:
    """Cube faces split into ``divisions**2`` quads, two triangles each."""
    lin = np.linspace(-half, half, divisions + 1)
    u, v = np.meshgrid(lin, lin, indexing="ij")
    corners = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            a = np.zeros(u.shape + (3,))
            a[..., axis] = sign * half
            a[..., (axis + 1) % 3] = u
            a[..., (axis + 2) % 3] = v
            q00 = a[:-1, :-1].reshape(-1, 3)
            q10 = a[1:, :-1].reshape(-1, 3)
            q01 = a[:-1, 1:].reshape(-1, 3)
            q11 = a[1:, 1:].reshape(-1, 3)
            corners.append((q00, q10, q11))
            corners.append((q00, q11, q01))
    p0 = np.concatenate([c[0] for c in corners]) + center
    p1 = np.concatenate([c[1] for c in corners]) + center
    p2 = np.concatenate([c[2] for c in corners]) + center
    return _triangle_mesh(p0, p1, p2, center)


def _triangle_mesh(p0, p1, p2, interior_point) -> BoundaryMesh:
    centroids = (p0 + p1 + p2) / 3.0
    cross = np.cross(p1 - p0, p2 - p0)
    areas = 0.5 * np.linalg.norm(cross, axis=-1)
    normals = cross / np.linalg.norm(cross, axis=-1, keepdims=True)
    # Convex bodies only: orient away from the interior reference point.
    flip = np.sum(normals * (centroids - interior_point), axis=-1) < 0.0
    normals[flip] *= -1.0
    corners = np.stack([p0, p1, p2], axis=1)  # (P, 3, 3)
    return BoundaryMesh(3, centroids, areas, normals,
                        np.zeros(centroids.shape[0], dtype=int), corners)


# ---------------------------------------------------------------------------
# Receiver arrays
# ---------------------------------------------------------------------------

@dataclass
class MeasurementArray:
    """Receiver positions with surface quadrature weights.

    ``weights`` sum to the measure of the layout (circle circumference,
    sphere area, arc length); every provided layout has uniform weights.
    """

    points: np.ndarray
    weights: np.ndarray
    radius: float | None
    layout: str

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] not in (2, 3):
            raise GeometryError("receiver points must be (M, 2) or (M, 3)")
        if self.weights.shape != (self.points.shape[0],):
            raise GeometryError("one quadrature weight per receiver required")

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def make_receivers(layout: str, radius: float, count: int, *,
                   span: float = np.pi, start: float = 0.0) -> MeasurementArray:
    """Build a receiver array.

    Parameters
    ----------
    layout : {"circle", "sphere", "arc"}
        ``circle``: ``count`` equispaced points on the full circle.
        ``sphere``: Fibonacci lattice on the sphere.
        ``arc``: midpoint-rule points on the arc ``[start, start + span]``.
    radius : float
        Array radius, centered at the origin.
    count : int
        Number of receivers.
    span, start : float
        Arc layout only: angular extent and first angle.
    """
    if count < 1:
        raise GeometryError(f"receiver count must be >= 1, got {count}")
    if not radius > 0.0:
        raise GeometryError(f"receiver radius must be positive, got {radius}")
    if layout == "circle":
        ang = 2.0 * np.pi * np.arange(count) / count
        pts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        w = np.full(count, 2.0 * np.pi * radius / count)
    elif layout == "arc":
        if not 0.0 < span <= 2.0 * np.pi:
            raise GeometryError(f"arc span must lie in (0, 2 pi], got {span}")
        ang = start + (np.arange(count) + 0.5) * span / count
        pts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        w = np.full(count, span * radius / count)
    elif layout == "sphere":
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = i * _GOLDEN_ANGLE
        pts = radius * np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
        w = np.full(count, 4.0 * np.pi * radius**2 / count)
    else:
        raise GeometryError(f"unknown receiver layout {layout!r}")
    return MeasurementArray(pts, w, radius, layout)


def surface_inverse_distance_integral(array: MeasurementArray, z) -> float:
    """Quadrature of ``1 / |x - z|`` over a spherical receiver array.

    For any ``|z| <= R`` the exact surface integral equals ``4 pi R``
    independent of ``z``; this evaluates the discrete counterpart
    ``sum_i w_i / |x_i - z|``.

    Raises
    ------
    GeometryError
        If the array is not spherical, ``|z| > R``, or ``z`` sits on top of
        a receiver (excluded point).
    """
    if array.layout != "sphere" or array.radius is None:
        raise GeometryError("inverse-distance identity needs a spherical array")
    z = np.asarray(z, dtype=float)
    if z.shape != (3,):
        raise GeometryError("z must be a 3-vector")
    if np.linalg.norm(z) > array.radius * (1.0 + 1e-12):
        raise GeometryError("z must lie inside the receiver sphere")
    d = np.linalg.norm(array.points - z, axis=-1)
    if np.min(d) < 1e-9 * array.radius:
        raise GeometryError("z coincides with a receiver (excluded point)")
    return float(np.sum(array.weights / d))


# ---------------------------------------------------------------------------
# Time and sampling grids
# ---------------------------------------------------------------------------

@dataclass
class TimeGrid:
    """Uniform time samples ``t_k = k * dt`` for ``k = 0 .. steps``."""

    total_time: float
    steps: int

    def __post_init__(self) -> None:
        self.total_time = float(self.total_time)
        self.steps = int(self.steps)
        if not self.total_time > 0.0:
            raise ConfigError("total_time must be positive")
        if self.steps < 1:
            raise ConfigError("at least one time step required")

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt  # (steps + 1,)


@dataclass
class SamplingGrid:
    """Axis-aligned box of sampling points, endpoints included.

    Points enumerate in C order (last axis fastest), matching the flat
    ``values`` layout of indicator images.
    """

    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.counts = np.asarray(self.counts, dtype=int)
        d = self.lower.shape[0]
        if d not in (2, 3) or self.upper.shape != (d,) or self.counts.shape != (d,):
            raise ConfigError("grid lower/upper/counts must share length 2 or 3")
        if np.any(self.upper <= self.lower):
            raise ConfigError("grid upper bounds must exceed lower bounds")
        if np.any(self.counts < 2):
            raise ConfigError("grid needs at least two points per axis")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def point_count(self) -> int:
        return int(np.prod(self.counts))

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(self.lower[a], self.upper[a], self.counts[a])
                for a in range(self.dim)]

    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.counts - 1)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)  # (Nz, d)
