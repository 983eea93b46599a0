import math

import numpy as np
import pytest

from fpgeo.models.arcs import disk_union_area, disk_union_perimeter, exposed_arcs
from fpgeo.shapes import Box


def test_single_disk():
    assert disk_union_perimeter([[0, 0]], [2.0]) == pytest.approx(4 * math.pi)
    assert disk_union_area([[1, 2]], [2.0]) == pytest.approx(4 * math.pi)


def test_nested_and_identical_disks():
    assert disk_union_perimeter([[0, 0], [0.1, 0]], [1.0, 0.5]) == pytest.approx(2 * math.pi)
    assert disk_union_perimeter([[0, 0], [0, 0]], [1.0, 1.0]) == pytest.approx(2 * math.pi)
    assert len(exposed_arcs([[0, 0], [0, 0]], [1.0, 1.0])) == 1


def test_ring_of_disks_has_hole():
    # six unit disks around a circle of radius 1.9 enclose a hole; Green's
    # theorem must subtract it
    ang = np.arange(6) * math.pi / 3
    c = 1.9 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    r = np.ones(6)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, (400_000, 2))
    inside = np.zeros(len(pts), bool)
    for ci in c:
        inside |= np.hypot(*(pts - ci).T) <= 1
    mc = inside.mean() * 36
    assert disk_union_area(c, r) == pytest.approx(mc, rel=0.01)


def test_clip_to_box():
    # quarter of a unit circle lies in the positive quadrant
    quarter = disk_union_perimeter([[0, 0]], [1.0], clip=Box((0, 0), (2, 2)))
    assert quarter == pytest.approx(math.pi / 2)
    half = disk_union_perimeter([[0, 0]], [1.0], clip=((-2, 0), (2, 2)))
    assert half == pytest.approx(math.pi)


def test_clip_partitions_perimeter():
    rng = np.random.default_rng(3)
    c = rng.uniform(0, 4, (25, 2))
    r = rng.uniform(0.2, 0.6, 25)
    total = disk_union_perimeter(c, r)
    parts = sum(disk_union_perimeter(c, r, clip=Box((x, y), (x + 3, y + 3)))
                for x in (-1.0, 2.0) for y in (-1.0, 2.0))
    assert parts == pytest.approx(total, rel=1e-12)
