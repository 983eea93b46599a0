import math

import numpy as np
import pytest

from fpgeo.errors import InvalidShape, OverlapUnresolvable
from fpgeo.shapes import (Ball, Box, ConvexPolygon, Rotation, Transformed, UnionOf,
                          centered_rotation, disjoint, exact_perimeter, exact_volume,
                          load_shape, shape_from_dict, shape_to_dict)


def test_ball_measures():
    assert exact_volume(Ball((0, 0), 1.0)) == pytest.approx(math.pi)
    assert exact_perimeter(Ball((0, 0), 1.0)) == pytest.approx(2 * math.pi)
    assert exact_volume(Ball((0, 0, 0), 2.0)) == pytest.approx(4 / 3 * math.pi * 8)
    assert exact_perimeter(Ball((0, 0, 0), 1.0)) == pytest.approx(4 * math.pi)


def test_box_measures():
    b = Box((0, 0, 0), (1, 2, 3))
    assert exact_volume(b) == pytest.approx(6)
    assert exact_perimeter(b) == pytest.approx(2 * (2 + 3 + 6))
    assert exact_perimeter(Box((0, 0), (1, 1))) == 4


def test_polygon():
    tri = ConvexPolygon([[0, 0], [1, 0], [0, 1]])
    assert tri.area() == pytest.approx(0.5)
    assert tri.perimeter() == pytest.approx(2 + math.sqrt(2))
    assert tri.contains(np.array([[0.2, 0.2], [0.0, 0.0], [0.6, 0.6]])).tolist() == [True, True, False]


@pytest.mark.parametrize("verts", [
    [[0, 0], [0, 1], [1, 0]],            # clockwise
    [[0, 0], [1, 0], [2, 0], [0, 1]],    # collinear vertex
    [[0, 0], [1, 0]],
])
def test_polygon_rejects_bad_input(verts):
    with pytest.raises(InvalidShape):
        ConvexPolygon(verts)


def test_invalid_primitives():
    with pytest.raises(InvalidShape):
        Ball((0, 0), -1)
    with pytest.raises(InvalidShape):
        Box((0, 0), (0, 1))
    with pytest.raises(InvalidShape):
        Rotation(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(InvalidShape):
        Rotation(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_transformed_contains_and_measures():
    r = Rotation.from_angle(math.pi / 4)
    s = Transformed(r, (1.0, 1.0), Box((-0.5, -0.5), (0.5, 0.5)))
    assert s.contains(np.array([1.0, 1.0 + 0.7]))
    assert not s.contains(np.array([1.0 + 0.6, 1.0 + 0.6]))
    assert s.volume() == pytest.approx(1.0)
    assert s.perimeter() == pytest.approx(4.0)
    lo, hi = s.bbox()
    assert hi[0] - lo[0] == pytest.approx(math.sqrt(2))


def test_centered_rotation_keeps_center():
    sq = Box((0, 0), (2, 2))
    s = centered_rotation(sq, Rotation.from_angle(0.3))
    assert s.contains(np.array([1.0, 1.0]))
    lo, hi = s.bbox()
    np.testing.assert_allclose((lo + hi) / 2, [1.0, 1.0])


def test_union_disjoint_is_additive():
    u = UnionOf((Ball((0, 0), 1.0), Box((3, 3), (4, 5))))
    assert disjoint(*u.members)
    assert u.perimeter() == pytest.approx(2 * math.pi + 6)
    assert u.volume() == pytest.approx(math.pi + 2)


def test_union_of_overlapping_disks_uses_arcs():
    u = UnionOf((Ball((0, 0), 1.0), Ball((1, 0), 1.0)))
    # two unit circles at distance 1 keep 2 * (2 pi - 2 pi/3) of arc
    assert u.perimeter() == pytest.approx(2 * (2 * math.pi - 2 * math.pi / 3))
    lens = 2 * (math.pi / 3 - math.sqrt(3) / 4)
    assert u.volume() == pytest.approx(2 * math.pi - lens)


def test_union_of_overlapping_boxes_is_unresolvable():
    u = UnionOf((Box((0, 0), (2, 2)), Box((1, 1), (3, 3))))
    with pytest.raises(OverlapUnresolvable):
        u.perimeter()


def test_json_round_trip(tmp_path):
    s = UnionOf((Ball((0, 0), 1.0),
                 Transformed(Rotation.from_angle(0.2), (5, 0),
                             ConvexPolygon([[0, 0], [1, 0], [0, 1]]))))
    spec = shape_to_dict(s)
    back = shape_from_dict(spec)
    assert shape_to_dict(back) == spec
    path = tmp_path / "s.json"
    path.write_text(s.to_json())
    assert load_shape(path).perimeter() == pytest.approx(s.perimeter())


@pytest.mark.parametrize("spec", [
    {"type": "blob"},
    {"radius": 1},
    {"type": "ball", "center": [0, 0]},
    {"type": "box", "min": [0, 0], "max": [1]},
    "ball",
])
def test_malformed_specs(spec):
    with pytest.raises(InvalidShape):
        shape_from_dict(spec)


def test_bad_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InvalidShape):
        load_shape(p)
