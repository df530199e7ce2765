"""Built-in experiment configurations.

Every preset is a complete config document (a plain dict, JSON-ready).
The 2-D family shares one stage: sound speed 340, emitter circling at
radius 60 from (60, 0), receivers on the circle of radius 72, burst-train
signal with base period 14, one emitter revolution per recording, and a
36 x 36 sampling grid on [-36, 36]^2. The 3-D family swaps in the
pole-to-pole spiral (5 turns over a tripled recording window), 50
receivers on the sphere of radius 72, and a 21^3 grid on [-40, 40]^3.

Point-like obstacles are radius-0.01 circles/spheres at reduced mesh
resolution; extended obstacles use the default panelization.
"""

from __future__ import annotations

import copy
import math
from typing import Any

from .errors import ConfigError

BASE_PERIOD = 14.0
OMEGA0 = 2.0 * math.pi / BASE_PERIOD
EMITTER_RADIUS = 60.0
RECEIVER_RADIUS = 72.0

POINT_SIZE = 0.01
POINT_PANELS = 16
POINT_SUBDIV = 1

THREE_POINTS = [(-24.0, -24.0), (0.0, 20.0), (15.0, -10.0)]
FIVE_POINTS = [(-24.0, -24.0), (-24.0, 15.0), (0.0, 0.0),
               (10.0, -20.0), (24.0, 20.0)]
FIVE_POINTS_CLOSE = [(-28.0, -28.0), (-20.0, -20.0), (0.0, 0.0),
                     (8.0, 12.0), (20.0, 0.0)]

CIRCLE_BIG = {"kind": "circle", "center": [0.0, 0.0], "size": 10.0}
ACORN_BIG = {"kind": "acorn", "center": [0.0, 0.0], "size": 6.0}
SQUARE_BIG = {"kind": "square", "center": [-8.0, -8.0],
              "size": 3.0 * math.sqrt(2.0)}


def _points_2d(centers) -> list[dict[str, Any]]:
    return [
        {"kind": "circle", "center": [float(a), float(b)], "size": POINT_SIZE,
         "resolution": POINT_PANELS}
        for a, b in centers
    ]


def _points_3d(centers) -> list[dict[str, Any]]:
    return [
        {"kind": "sphere", "center": [float(a) for a in c], "size": POINT_SIZE,
         "resolution": POINT_SUBDIV}
        for c in centers
    ]


def _base_2d(name: str, *, periods: int, scatterers, omega: float = OMEGA0,
             sigma: float = 0.05, indicators=("I2tilde",)) -> dict[str, Any]:
    return {
        "name": name,
        "medium": {"wave_speed": 340.0},
        "trajectory": {"kind": "circle", "radius": EMITTER_RADIUS,
                       "angular_speed": omega, "phase": 0.0},
        "signal": {"kind": "pulse_train", "periods": periods,
                   "base_period": BASE_PERIOD},
        "scatterers": [dict(s) for s in scatterers],
        "receivers": {"layout": "circle", "radius": RECEIVER_RADIUS,
                      "count": 64},
        "time": {"total_time": BASE_PERIOD, "steps": 256 * periods},
        "sampling": {"lower": [-36.0, -36.0], "upper": [36.0, 36.0],
                     "counts": [36, 36]},
        "noise": {"sigma": sigma, "seed": 1},
        "indicators": list(indicators),
        "generator": "bie",
    }


def _base_3d(name: str, *, scatterers, sigma: float = 0.05) -> dict[str, Any]:
    total = 3.0 * BASE_PERIOD
    return {
        "name": name,
        "medium": {"wave_speed": 340.0},
        "trajectory": {"kind": "spiral", "radius": EMITTER_RADIUS,
                       "turns": 5.0, "total_time": total},
        "signal": {"kind": "pulse_train", "periods": 10,
                   "base_period": BASE_PERIOD},
        "scatterers": [dict(s) for s in scatterers],
        "receivers": {"layout": "sphere", "radius": RECEIVER_RADIUS,
                      "count": 50},
        "time": {"total_time": total, "steps": 256 * 10 * 3},
        "sampling": {"lower": [-40.0, -40.0, -40.0],
                     "upper": [40.0, 40.0, 40.0], "counts": [21, 21, 21]},
        "noise": {"sigma": sigma, "seed": 1},
        "indicators": ["I2tilde"],
        "generator": "bie",
    }


def _build() -> dict[str, dict[str, Any]]:
    out: dict[str, dict[str, Any]] = {}

    # Signal-length study: three point obstacles and one extended disk,
    # both indicators, burst counts 1 / 3 / 10.
    for n in (1, 3, 10):
        out[f"example1-points-N{n}"] = _base_2d(
            f"example1-points-N{n}", periods=n,
            scatterers=_points_2d(THREE_POINTS),
            indicators=("I1", "I2tilde"))
        out[f"example1-extended-N{n}"] = _base_2d(
            f"example1-extended-N{n}", periods=n, scatterers=[CIRCLE_BIG],
            indicators=("I1", "I2tilde"))

    # Emitter-speed study: five point obstacles, angular speed multiplied.
    for mult in (3, 7, 9):
        out[f"example2-speed-w{mult}"] = _base_2d(
            f"example2-speed-w{mult}", periods=10,
            scatterers=_points_2d(FIVE_POINTS), omega=mult * OMEGA0,
            indicators=("I1", "I2tilde"))

    # Noise study on point clusters.
    cases = {"caseA": _points_2d(THREE_POINTS),
             "caseB": _points_2d(FIVE_POINTS),
             "caseC": _points_2d(FIVE_POINTS_CLOSE)}
    for case, scat in cases.items():
        for pct in (5, 20):
            name = f"example3-{case}-sigma{pct}"
            out[name] = _base_2d(name, periods=10, scatterers=scat,
                                 sigma=pct / 100.0)

    # Noise study on single extended obstacles.
    shapes = {"circle": CIRCLE_BIG, "acorn": ACORN_BIG, "square": SQUARE_BIG}
    for label, shape in shapes.items():
        for pct in (5, 20):
            name = f"example4-{label}-sigma{pct}"
            out[name] = _base_2d(name, periods=10, scatterers=[shape],
                                 sigma=pct / 100.0)

    # Limited-aperture study: same obstacles, data reduced three ways.
    for label, shape in shapes.items():
        name = f"example5-{label}-halfcount"
        cfg = _base_2d(name, periods=10, scatterers=[shape])
        cfg["receivers"]["count"] = 32
        out[name] = cfg

        name = f"example5-{label}-halfaperture"
        cfg = _base_2d(name, periods=10, scatterers=[shape])
        cfg["receivers"] = {"layout": "arc", "radius": RECEIVER_RADIUS,
                            "count": 32, "span": math.pi, "start": 0.0}
        out[name] = cfg

        # Emitter keeps its speed but stops after half a revolution.
        name = f"example5-{label}-halfpath"
        cfg = _base_2d(name, periods=10, scatterers=[shape])
        cfg["time"] = {"total_time": BASE_PERIOD / 2.0, "steps": 1280}
        out[name] = cfg

    # Two disconnected extended obstacles.
    pairs = {
        "acornkite": [
            {"kind": "acorn", "center": [-12.0, -12.0], "size": 2.4},
            {"kind": "kite", "center": [15.0, 15.0], "size": 6.0},
        ],
        "circlesquare": [
            {"kind": "circle", "center": [-15.0, -15.0], "size": 6.0},
            {"kind": "square", "center": [10.0, 10.0],
             "size": 3.0 * math.sqrt(2.0)},
        ],
        "acorncircle": [
            {"kind": "acorn", "center": [-10.0, -10.0], "size": 3.6},
            {"kind": "circle", "center": [10.0, 10.0], "size": 2.0},
        ],
    }
    for label, scat in pairs.items():
        name = f"example6-{label}"
        out[name] = _base_2d(name, periods=10, scatterers=scat)

    # 3-D: point obstacles under the spiral emitter.
    out["example7-point"] = _base_3d(
        "example7-point", scatterers=_points_3d([(8.0, -16.0, 4.0)]))
    out["example7-twopoints"] = _base_3d(
        "example7-twopoints",
        scatterers=_points_3d([(-20.0, -16.0, -12.0), (12.0, 16.0, 20.0)]))

    # 3-D: cubes (centers and half edges from the stated corner boxes).
    out["example8-cube"] = _base_3d(
        "example8-cube",
        scatterers=[{"kind": "cube", "center": [0.0, 0.0, 0.0], "size": 11.0}])
    out["example8-twocubes"] = _base_3d(
        "example8-twocubes",
        scatterers=[
            {"kind": "cube", "center": [18.0, 18.0, 18.0], "size": 6.0},
            {"kind": "cube", "center": [-18.0, -18.0, -18.0], "size": 6.0},
        ])
    return out


_PRESETS = _build()


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_config(name: str) -> dict[str, Any]:
    """A deep copy of the named preset document."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; see `mowave presets`")
    return copy.deepcopy(_PRESETS[name])
