"""Heatmap PNGs for indicator images.

The colormap is fixed so rendered output is bit-exact across runs:
piecewise-linear blue (0, 0, 128) at 0 through green (0, 200, 0) at 0.5 to
yellow (255, 255, 0) at 1. Each grid cell maps to one pixel (times an
integer ``scale``), the data region is framed by a 2-pixel white margin,
and 3-D images are drawn as the three mid-slices side by side.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .errors import ConfigError
from .imaging import IndicatorImage, normalize_image

MARGIN = 2

_STOPS = np.array([[0.0, 0.0, 128.0],
                   [0.0, 200.0, 0.0],
                   [255.0, 255.0, 0.0]])

_TRAJECTORY_COLOR = (230, 230, 230)
_RECEIVER_COLOR = (255, 70, 70)
_BOUNDARY_COLOR = (255, 0, 200)


def colormap(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to uint8 RGB, shape ``values.shape + (3,)``."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    lo = _STOPS[0] + (v[..., None] * 2.0) * (_STOPS[1] - _STOPS[0])
    hi = _STOPS[1] + ((v[..., None] - 0.5) * 2.0) * (_STOPS[2] - _STOPS[1])
    rgb = np.where(v[..., None] <= 0.5, lo, hi)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def _slice_rgb(plane: np.ndarray) -> np.ndarray:
    # plane[a, b] indexed by (first axis, second axis); flip so the second
    # axis increases upward in the PNG and the first increases rightward.
    return colormap(plane.T[::-1, :])


def _panels(img: IndicatorImage) -> list[tuple[np.ndarray, tuple[int, int]]]:
    """RGB data regions and the grid axes (horizontal, vertical) each shows."""
    grid = img.grid
    vals = img.values.reshape(tuple(int(n) for n in grid.counts))
    if grid.dim == 2:
        return [(_slice_rgb(vals), (0, 1))]
    if grid.dim != 3:
        raise ConfigError(f"cannot render a {grid.dim}-D image")
    mid = [int(n) // 2 for n in grid.counts]
    return [
        (_slice_rgb(vals[:, :, mid[2]]), (0, 1)),
        (_slice_rgb(vals[:, mid[1], :]), (0, 2)),
        (_slice_rgb(vals[mid[0], :, :]), (1, 2)),
    ]


def render_heatmap(img: IndicatorImage, path, *, scale: int = 1,
                   trajectory: np.ndarray | None = None,
                   receivers: np.ndarray | None = None,
                   boundaries: list[np.ndarray] | None = None) -> None:
    """Write ``img`` as a PNG.

    Un-normalized images are normalized first. Overlays are drawn on 2-D
    renders only: the emitter path as a polyline, receivers as dots, and
    each boundary as a closed polyline, all clipped to the grid box.
    """
    if img.norm_bounds is None:
        img = normalize_image(img)
    if scale < 1:
        raise ConfigError("scale must be a positive integer")
    panels = _panels(img)

    heights = [p.shape[0] for p, _ in panels]
    widths = [p.shape[1] for p, _ in panels]
    total_w = MARGIN + sum(w * scale + MARGIN for w in widths)
    total_h = 2 * MARGIN + max(heights) * scale
    canvas = np.full((total_h, total_w, 3), 255, dtype=np.uint8)

    x0 = MARGIN
    offsets = []
    for (rgb, axes), w, h in zip(panels, widths, heights):
        block = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
        canvas[MARGIN:MARGIN + h * scale, x0:x0 + w * scale] = block
        offsets.append((x0, axes))
        x0 += w * scale + MARGIN

    image = Image.fromarray(canvas)
    if img.grid.dim == 2 and (trajectory is not None or receivers is not None
                              or boundaries):
        _draw_overlays(image, img, scale, offsets[0][0], trajectory,
                       receivers, boundaries)
    image.save(path, format="PNG")


def _to_pixels(points: np.ndarray, img: IndicatorImage, scale: int,
               x_off: int) -> list[tuple[float, float]]:
    grid = img.grid
    lo = np.asarray(grid.lower, dtype=float)
    hi = np.asarray(grid.upper, dtype=float)
    counts = np.asarray(grid.counts, dtype=float)
    frac = (np.asarray(points, dtype=float) - lo) / (hi - lo)
    # cell centers sit at (index + 0.5) pixels within the data region
    px = x_off + (frac[:, 0] * (counts[0] - 1.0) + 0.5) * scale
    py = MARGIN + ((1.0 - frac[:, 1]) * (counts[1] - 1.0) + 0.5) * scale
    return list(zip(px.tolist(), py.tolist()))


def _draw_overlays(image: Image.Image, img: IndicatorImage, scale: int,
                   x_off: int, trajectory, receivers, boundaries) -> None:
    draw = ImageDraw.Draw(image)
    if trajectory is not None and len(trajectory) > 1:
        draw.line(_to_pixels(trajectory, img, scale, x_off),
                  fill=_TRAJECTORY_COLOR)
    for poly in boundaries or []:
        pix = _to_pixels(poly, img, scale, x_off)
        draw.line(pix + pix[:1], fill=_BOUNDARY_COLOR)
    if receivers is not None:
        for px, py in _to_pixels(receivers, img, scale, x_off):
            draw.ellipse([px - 1, py - 1, px + 1, py + 1],
                         fill=_RECEIVER_COLOR)
