import math

import numpy as np
import pytest

from fpgeo.crofton import (CroftonConvention, Flat, complement_frame, crofton_constant,
                           crofton_perimeter_estimate, crofton_values, directional_variation,
                           line_section_counts, mean_projection_length, projection_average_mc,
                           sample_flat_hitting, section_perimeter, slice_variation_fubini)
from fpgeo.errors import MollifierTooNarrow
from fpgeo.grid import IndicatorGrid, rasterize
from fpgeo.perimeter import mollified_variation
from fpgeo.rng import stream
from fpgeo.shapes import Ball, Box, Rotation, Transformed

# frozen from the Gamma-function closed forms
MEAN_PROJ = {(2, 1): 2 / math.pi, (3, 1): 0.5, (3, 2): math.pi / 4}
GAMMA_FORM = {(2, 1): 1.0, (3, 1): 1.5, (3, 2): 1.0}


@pytest.mark.parametrize("dj", sorted(MEAN_PROJ))
def test_mean_projection_closed_form(dj):
    assert mean_projection_length(*dj) == pytest.approx(MEAN_PROJ[dj], rel=1e-14)
    assert crofton_constant("self", *dj) == pytest.approx(1 / MEAN_PROJ[dj], rel=1e-14)
    assert crofton_constant("paper", *dj) == pytest.approx(GAMMA_FORM[dj], rel=1e-14)


def test_convention_enum():
    assert CroftonConvention("self") is CroftonConvention.SELF_CONSISTENT
    with pytest.raises(ValueError):
        crofton_constant("other", 2, 1)


@pytest.mark.parametrize("dj", sorted(MEAN_PROJ))
def test_projection_average_mc(dj):
    r = projection_average_mc(*dj, 100_000, seed=1)
    assert r.within(MEAN_PROJ[dj], k=4)
    rr = projection_average_mc(*dj, 100_000, seed=2, randomize=True)
    assert rr.within(MEAN_PROJ[dj], k=4)


def test_projection_average_is_direction_free():
    a = projection_average_mc(3, 2, 50_000, seed=3, direction=[0, 0, 1])
    assert a.within(math.pi / 4, k=4)


def test_complement_frame_is_orthonormal():
    f = Rotation.from_angle(0.3).matrix[:, :1]
    c = complement_frame(f)
    full = np.hstack([f, c])
    np.testing.assert_allclose(full.T @ full, np.eye(2), atol=1e-12)


def test_flat_validation():
    with pytest.raises(ValueError):
        Flat(np.array([[1.0], [0.0]]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        Flat(np.array([[2.0], [0.0]]), np.array([0.0, 1.0]))


def test_sample_flat_hitting_meets_window(rng):
    window = Box((0, 0, 0), (1, 2, 3))
    for j in (1, 2):
        for _ in range(50):
            flat, hit = sample_flat_hitting(j, window, rng)
            assert hit > 0
            assert flat.j == j


def test_hit_measure_of_disk_window():
    # for lines in the plane the mean shadow width of a box is its mean width
    rng = stream(0, 0)
    hits = [sample_flat_hitting(1, Box((0, 0), (1, 1)), rng)[1] for _ in range(4000)]
    assert np.mean(hits) == pytest.approx(4 / math.pi, rel=0.02)


def test_zonogon_hit_measure_mean():
    # mean projected area of a box onto a Haar plane is a quarter of its surface area
    from fpgeo.crofton import _sample_flats

    _, _, hit = _sample_flats(3, 1, Box((0, 0, 0), (1, 2, 3)), 20_000, stream(4, 0))
    assert hit.mean() == pytest.approx(22 / 4, rel=0.01)


def test_section_of_disk(disk_grid):
    horizontal = np.array([[1.0], [0.0]])
    through = section_perimeter(disk_grid, Flat(horizontal, np.array([0.0, 0.5])))
    assert through.value == pytest.approx(2.0, abs=1e-6) and not through.outside
    miss = section_perimeter(disk_grid, Flat(horizontal, np.array([0.0, 0.9])))
    assert miss.value == pytest.approx(0.0, abs=1e-6) and not miss.outside
    off = section_perimeter(disk_grid, Flat(horizontal, np.array([0.0, 1.05])))
    assert off.value == 0.0 and off.outside


def test_section_methods_on_rotated_line(disk_grid):
    u = np.array([math.cos(0.3), math.sin(0.3)])
    p0 = np.array([0.5, 0.5]) - 0.45 * u
    for method in ("variation", "threshold"):
        counts, met = line_section_counts(disk_grid, p0[None], u[None], method=method)
        assert met[0] and counts[0] == pytest.approx(2.0, abs=1e-3)
    with pytest.raises(ValueError):
        line_section_counts(disk_grid, p0[None], u[None], method="bogus")


def test_plane_section_of_ball():
    g = rasterize(Ball((0, 0, 0), 0.5), 1 / 64, Box.cube(-0.6, 0.6, 3))
    frame = np.eye(3)[:, :2]
    s = section_perimeter(g, Flat(frame, np.zeros(3)))
    assert s.value == pytest.approx(math.pi, rel=0.02)
    out = section_perimeter(g, Flat(frame, np.array([0.0, 0.0, 2.0])))
    assert out.outside


def test_narrow_mollifier_rejected(disk_grid):
    with pytest.raises(MollifierTooNarrow):
        crofton_perimeter_estimate(disk_grid, 1, 10, rho=disk_grid.spacing)


@pytest.mark.parametrize("shape", [
    Ball((0.5, 0.5), 0.3),
    Box((0.2, 0.3), (0.7, 0.6)),
    Transformed(Rotation.from_angle(0.6), (0.5, 0.5), Box((-0.25, -0.2), (0.25, 0.2))),
])
def test_fubini_matches_directional(shape):
    g = rasterize(shape, 1 / 256, Box((0, 0), (1, 1)))
    for angle in (0.0, 0.4, math.pi / 2):
        u = np.array([[math.cos(angle)], [math.sin(angle)]])
        assert slice_variation_fubini(g, u) == pytest.approx(directional_variation(g, u),
                                                             rel=0.01)


def test_fubini_3d_plane():
    g = rasterize(Ball((0, 0, 0), 0.5), 1 / 32, Box.cube(-0.6, 0.6, 3))
    frame = np.eye(3)[:, :2]
    assert slice_variation_fubini(g, frame, n_slices=40) == pytest.approx(
        directional_variation(g, frame), rel=0.03)


def test_crofton_disk_self_consistent(disk_grid):
    e = crofton_perimeter_estimate(disk_grid, 1, 20_000, seed=3)
    assert e.value == pytest.approx(0.6 * math.pi, rel=0.03)
    assert e.within(mollified_variation(disk_grid), k=4)


def test_crofton_gamma_convention_is_scaled(disk_grid):
    a = crofton_perimeter_estimate(disk_grid, 1, 2000, "self", seed=3)
    b = crofton_perimeter_estimate(disk_grid, 1, 2000, "paper", seed=3)
    assert a.value / b.value == pytest.approx(math.pi / 2, rel=1e-12)


def test_crofton_3d_planes_and_lines():
    g = rasterize(Ball((0, 0, 0), 0.5), 1 / 32, Box.cube(-0.6, 0.6, 3))
    planes = crofton_perimeter_estimate(g, 2, 300, seed=1)
    assert planes.value == pytest.approx(math.pi, rel=0.06)
    lines = crofton_perimeter_estimate(g, 1, 4000, seed=1)
    assert lines.value == pytest.approx(math.pi, rel=0.06)


def test_crofton_empty_grid():
    g = IndicatorGrid.from_mask(np.zeros((16, 16), bool), 1 / 16, (0, 0))
    assert crofton_perimeter_estimate(g, 1, 100).value == 0.0


def test_crofton_count_box_restricts(disk_grid):
    half = (np.array([0.0, 0.0]), np.array([0.5, 1.0]))
    full = crofton_values(disk_grid, 1, 20_000, 9)
    left = crofton_values(disk_grid, 1, 20_000, 9, count_box=half)
    assert left.mean() == pytest.approx(0.5 * full.mean(), rel=0.05)


def test_crofton_seed_determinism(disk_grid):
    a = crofton_perimeter_estimate(disk_grid, 1, 5000, seed=11)
    b = crofton_perimeter_estimate(disk_grid, 1, 5000, seed=11)
    assert a == b
