import math

import numpy as np
import pytest

from fpgeo.errors import MollifierTooNarrow, RadiusTooSmall
from fpgeo.grid import IndicatorGrid, grid_complement, rasterize
from fpgeo.perimeter import (KAPPA, boundary_normal_samples, bump_kernel, default_rho,
                             direction_bins, minkowski_perimeter, mollified_variation,
                             normal_measure, rotation_averaged_tv_perimeter, tv_face_count,
                             tv_perimeter, tv_perimeter_in)
from fpgeo.shapes import Ball, Box, Rotation, Transformed


def test_kappa_values():
    assert KAPPA[2] == pytest.approx(4 / math.pi)
    assert KAPPA[3] == pytest.approx(1.5)


def test_square_tv_is_exact(square_grid):
    assert tv_perimeter(square_grid) == 2.0
    assert tv_face_count(square_grid) == 4 * 128


def test_tv_counts_faces_on_window_border(unit_box):
    g = rasterize(unit_box, 1 / 8, unit_box)
    assert tv_perimeter(g) == 4.0


def test_disk_tv_is_biased(disk_grid):
    # l1 perimeter of a digitized disk is the bounding-box perimeter 8r
    assert tv_perimeter(disk_grid) == pytest.approx(8 * 0.3, abs=2 / 256)


def test_tv_in_box(square_grid):
    left = Box((0.0, 0.0), (0.5, 1.0))
    # left edge (0.5) plus half of top and bottom (0.25 each)
    assert tv_perimeter_in(square_grid, left) == pytest.approx(1.0)


def test_tv_3d_cube():
    g = rasterize(Box((0.25,) * 3, (0.75,) * 3), 1 / 32, Box.cube(0, 1, 3))
    assert tv_perimeter(g) == pytest.approx(6 * 0.25)


def test_rotavg_of_rotation_invariant_disk():
    r = rotation_averaged_tv_perimeter(Ball((0, 0), 1.0), 1 / 128, 4, seed=0)
    assert r.value == pytest.approx(2 * math.pi, rel=0.01)


def test_rotavg_square_is_deterministic():
    sq = Box((0, 0), (1, 1))
    a = rotation_averaged_tv_perimeter(sq, 1 / 64, 30, seed=5)
    b = rotation_averaged_tv_perimeter(sq, 1 / 64, 30, seed=5)
    assert a == b
    assert a.within(4.0, k=4)


def test_bump_kernel_normalized():
    k = bump_kernel(4.0, 1.0, 2)
    assert k.dtype == np.float32
    assert float(k.sum()) == pytest.approx(1.0, abs=1e-6)
    assert k.shape == (9, 9)


def test_mollifier_too_narrow(disk_grid):
    with pytest.raises(MollifierTooNarrow):
        mollified_variation(disk_grid, rho=disk_grid.spacing)
    assert default_rho(disk_grid) == 4 * disk_grid.spacing


def test_mollified_disk_and_square(disk_grid, square_grid):
    assert mollified_variation(disk_grid) == pytest.approx(0.6 * math.pi, rel=0.01)
    assert mollified_variation(square_grid) == pytest.approx(2.0, rel=0.01)


def test_mollified_rotated_square():
    s = Transformed(Rotation.from_angle(0.5), (0.5, 0.5), Box((-0.25, -0.25), (0.25, 0.25)))
    g = rasterize(s, 1 / 256, Box((0, 0), (1, 1)))
    assert mollified_variation(g) == pytest.approx(2.0, rel=0.015)


def test_mollified_empty_and_full(unit_box):
    empty = IndicatorGrid.from_mask(np.zeros((256, 256), bool), 1 / 256, (0, 0))
    assert mollified_variation(empty) == 0.0
    full = grid_complement(empty)
    # outside the window counts as empty, so the window boundary is seen
    assert mollified_variation(full) == pytest.approx(4.0, rel=0.01)
    assert mollified_variation(full, outside="extend") == pytest.approx(0.0, abs=1e-9)


def test_mollified_is_cached(disk_grid):
    a = mollified_variation(disk_grid)
    assert mollified_variation(disk_grid) == a
    assert any(k[0] == "field" for k in disk_grid._memo if isinstance(k, tuple))


def test_boundary_samples_match_variation(disk_grid):
    s = boundary_normal_samples(disk_grid)
    assert s.total_weight == pytest.approx(mollified_variation(disk_grid), rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(s.normals, axis=1), 1.0, atol=1e-6)
    # normals point away from the center
    radial = s.points - 0.5
    assert np.all(np.sum(radial * s.normals, axis=1) > 0)


def test_boundary_samples_in_rotated_frame():
    rot = Rotation.from_angle(0.7)
    mask = np.zeros((64, 64), bool)
    mask[16:48, 16:48] = True
    g = IndicatorGrid.from_mask(mask, 1 / 64, (0.0, 0.0), rot.matrix)
    s = boundary_normal_samples(g)
    center = g.to_world(np.array([0.5, 0.5]))
    assert np.all(np.sum((s.points - center) * s.normals, axis=1) > 0)


def test_minkowski(disk_grid, unit_box):
    r = 0.05
    expected = (math.pi * (0.35 ** 2 - 0.3 ** 2)) / r
    # center-to-center distances bias the estimate low by about h / (2r)
    assert minkowski_perimeter(disk_grid, r) == pytest.approx(expected, rel=0.03)
    assert minkowski_perimeter(disk_grid, r) < expected
    fine = rasterize(Ball((0.5, 0.5), 0.3), 1 / 1024, unit_box)
    assert minkowski_perimeter(fine, r) == pytest.approx(expected, rel=0.005)
    with pytest.raises(RadiusTooSmall):
        minkowski_perimeter(disk_grid, disk_grid.spacing)


def test_minkowski_square_fine():
    # Steiner: P + pi r for a square; cell-center inset bias is O(h / r)
    g = rasterize(Box((0.25, 0.25), (0.75, 0.75)), 1 / 1024, Box((0, 0), (1, 1)))
    r = 0.1
    assert minkowski_perimeter(g, r) == pytest.approx(2.0 + math.pi * r, rel=0.01)


def test_direction_bins_2d():
    n = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [math.cos(0.1), math.sin(0.1)]])
    bins, nb = direction_bins(n, 4, 2)
    assert nb == 1
    assert bins.tolist() == [0, 1, 2, 3, 0]


def test_direction_bins_3d_equal_area(rng):
    v = rng.standard_normal((200_000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    bins, nb = direction_bins(v, 32, 3)
    assert nb == 4
    freq = np.bincount(bins, minlength=32) / len(v)
    np.testing.assert_allclose(freq, 1 / 32, rtol=0.05)


def test_normal_measure_disk_isotropic(disk_grid):
    h = normal_measure(boundary_normal_samples(disk_grid), 8)
    assert h.total_mass == pytest.approx(h.total_weight, rel=1e-12)
    np.testing.assert_allclose(h.probabilities(), 1 / 8, rtol=0.05)


def test_normal_measure_slope_aliasing(unit_box):
    # smoothed staircase normals cluster at a few slopes; with rho = 4h,
    # 16 bins see it, a wider mollifier removes it
    g = rasterize(Ball((0.5, 0.5), 0.45), 1 / 256, unit_box)
    narrow = normal_measure(boundary_normal_samples(g), 16).probabilities() * 16
    wide = normal_measure(boundary_normal_samples(g, 8 / 256), 16).probabilities() * 16
    assert np.abs(narrow - 1).max() > 0.1
    assert np.abs(wide - 1).max() < 0.05


def test_normal_measure_square_axes(square_grid):
    h = normal_measure(boundary_normal_samples(square_grid), 8)
    p = h.probabilities()
    assert p[[0, 2, 4, 6]].sum() > 0.95
    np.testing.assert_allclose(h.bin_directions()[2], [0.0, 1.0], atol=1e-12)


def test_normal_measure_3d_mass():
    g = rasterize(Ball((0, 0, 0), 0.5), 1 / 48, Box.cube(-0.6, 0.6, 3))
    s = boundary_normal_samples(g)
    h = normal_measure(s, 18)
    assert h.total_mass == pytest.approx(s.total_weight, rel=1e-12)
    assert h.total_mass == pytest.approx(math.pi, rel=0.02)
