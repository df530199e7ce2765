"""Heatmap rendering: colormap values, canvas layout, overlays."""

import numpy as np
import pytest
from PIL import Image

from mowave.errors import ConfigError
from mowave.imaging import IndicatorImage, normalize_image
from mowave.render import MARGIN, colormap, render_heatmap
from mowave.scene import SamplingGrid

WHITE = (255, 255, 255)
BLUE = (0, 0, 128)
GREEN = (0, 200, 0)
YELLOW = (255, 255, 0)


def _grid2(counts=(2, 2), lo=(-1.0, -1.0), hi=(1.0, 1.0)):
    return SamplingGrid(lower=lo, upper=hi, counts=counts)


def _image(values, grid, kind="I2tilde"):
    return IndicatorImage(kind=kind, grid=grid, values=np.asarray(values, float))


def _png(tmp_path, img, name="out.png", **kwargs):
    path = tmp_path / name
    render_heatmap(img, path, **kwargs)
    return np.asarray(Image.open(path))


def test_colormap_hits_the_stop_colors_exactly():
    rgb = colormap(np.array([0.0, 0.25, 0.5, 0.75, 1.0]))
    expected = np.array([BLUE, (0, 100, 64), GREEN, (128, 228, 0), YELLOW])
    np.testing.assert_array_equal(rgb, expected)
    assert rgb.dtype == np.uint8


def test_colormap_clips_out_of_range_values():
    rgb = colormap(np.array([-0.5, 1.5]))
    np.testing.assert_array_equal(rgb, np.array([BLUE, YELLOW]))


def test_canvas_is_the_data_region_plus_a_white_margin(tmp_path):
    rng = np.random.default_rng(0)
    grid = _grid2(counts=(36, 36), lo=(-36.0, -36.0), hi=(36.0, 36.0))
    canvas = _png(tmp_path, _image(rng.random(36 * 36), grid))
    assert canvas.shape == (40, 40, 3)
    assert MARGIN == 2
    for strip in (canvas[:2], canvas[-2:], canvas[:, :2], canvas[:, -2:]):
        assert np.all(strip == 255)


def test_pixel_orientation_second_axis_up_first_axis_right(tmp_path):
    # Un-normalized values [0, 2, 4, 3] rescale to [0, .5, 1, .75] before
    # painting. Flat C order on a 2 x 2 grid puts the max at grid point
    # (+1, -1), which must land at the bottom-right data pixel.
    canvas = _png(tmp_path, _image([0.0, 2.0, 4.0, 3.0], _grid2()))
    assert canvas.shape == (6, 6, 3)
    assert tuple(canvas[3, 2]) == BLUE      # (-1, -1), value 0
    assert tuple(canvas[2, 2]) == GREEN     # (-1, +1), value .5
    assert tuple(canvas[3, 3]) == YELLOW    # (+1, -1), value 1
    assert tuple(canvas[2, 3]) == (128, 228, 0)  # (+1, +1), value .75


def test_integer_scale_repeats_each_cell(tmp_path):
    img = _image([0.0, 2.0, 4.0, 3.0], _grid2())
    base = _png(tmp_path, img, name="s1.png")
    big = _png(tmp_path, img, name="s3.png", scale=3)
    assert big.shape == (10, 10, 3)
    data = base[2:4, 2:4]
    np.testing.assert_array_equal(
        big[2:8, 2:8], np.repeat(np.repeat(data, 3, axis=0), 3, axis=1)
    )


def test_scale_must_be_at_least_one(tmp_path):
    img = _image([0.0, 1.0, 2.0, 3.0], _grid2())
    with pytest.raises(ConfigError, match="scale must be a positive integer"):
        render_heatmap(img, tmp_path / "bad.png", scale=0)


def test_three_d_image_renders_three_mid_slice_panels(tmp_path):
    grid = SamplingGrid(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0),
                        counts=(3, 3, 3))
    canvas = _png(tmp_path, _image(np.zeros(27), grid))
    # three 3 x 3 panels separated by the margin: 2 + 3*(3 + 2) wide
    assert canvas.shape == (7, 17, 3)
    is_green = np.all(canvas == GREEN, axis=-1)  # constant image -> 0.5
    assert int(is_green.sum()) == 27
    assert np.all(canvas[~is_green] == 255)
    for left in (2, 7, 12):
        assert np.all(is_green[2:5, left:left + 3])


def _overlay_image():
    grid = _grid2(counts=(5, 5), lo=(-2.0, -2.0), hi=(2.0, 2.0))
    return normalize_image(_image(np.zeros(25), grid))


def test_trajectory_overlay_is_a_polyline(tmp_path):
    canvas = _png(tmp_path, _overlay_image(),
                  trajectory=np.array([[-2.0, 0.0], [2.0, 0.0]]))
    # cell centers sit at (index + 0.5) px, so y = 0 is the middle row
    for col in range(2, 7):
        assert tuple(canvas[4, col]) == (230, 230, 230)


def test_receiver_overlay_marks_each_point(tmp_path):
    canvas = _png(tmp_path, _overlay_image(),
                  receivers=np.array([[0.0, 0.0]]))
    assert tuple(canvas[4, 4]) == (255, 70, 70)


def test_boundary_overlay_is_a_closed_curve(tmp_path):
    square = np.array([[-1.5, -1.5], [-1.5, 1.5], [1.5, 1.5], [1.5, -1.5]])
    canvas = _png(tmp_path, _overlay_image(), boundaries=[square])
    magenta = np.all(canvas == (255, 0, 200), axis=-1)
    assert int(magenta.sum()) >= 8


def test_overlays_are_ignored_on_three_d_renders(tmp_path):
    grid = SamplingGrid(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0),
                        counts=(3, 3, 3))
    canvas = _png(tmp_path, _image(np.zeros(27), grid),
                  trajectory=np.array([[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
                  receivers=np.array([[0.0, 0.0, 0.0]]))
    for color in ((230, 230, 230), (255, 70, 70)):
        assert not np.any(np.all(canvas == color, axis=-1))
