"""Swiss cheese: the unit square minus a union of shrinking random disks.

Z = U B(xi_i, eps / 2^i) over i = 1..n with xi_i uniform in [0,1]^2, and
Xi = [0,1]^2 minus Z. The infinite union is truncated at ``n_balls``; the
circumference of the omitted tail is 2*pi*eps / 2^n.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..grid import IndicatorGrid, grid_complement, rasterize
from ..metrics import strict_metric
from ..rng import stream
from ..shapes import Ball, Box, UnionOf
from .arcs import _merge, disk_union_perimeter

UNIT_SQUARE = Box((0.0, 0.0), (1.0, 1.0))
TAIL_FRACTION = 1e-3


def default_n_balls(tail_fraction=TAIL_FRACTION):
    """Smallest n whose omitted tail has circumference below the fraction of 2*pi*eps."""
    return int(math.floor(-math.log2(tail_fraction))) + 1


@dataclass(frozen=True, eq=False)
class SwissCheese:
    eps: float
    centers: np.ndarray
    radii: np.ndarray
    z: IndicatorGrid
    xi: IndicatorGrid

    @property
    def perimeter(self):
        """Exact perimeter of the (truncated) disk union in the plane."""
        return disk_union_perimeter(self.centers, self.radii)

    @property
    def complement_perimeter(self):
        """Exact perimeter of Xi: arcs inside the square plus the uncovered square boundary."""
        inner = disk_union_perimeter(self.centers, self.radii, clip=UNIT_SQUARE)
        return inner + uncovered_boundary_length(self.centers, self.radii)

    @property
    def perimeter_bound(self):
        return 2 * math.pi * self.eps

    @property
    def volume_bound(self):
        return math.pi * self.eps ** 2 / 3

    @property
    def tail_bound(self):
        """Circumference of the balls omitted by the truncation."""
        return 2 * math.pi * self.radii[-1]

    @property
    def subgrid_bound(self):
        """Summed circumference of balls smaller than one grid cell."""
        small = self.radii < self.z.spacing
        return float(2 * math.pi * self.radii[small].sum())


def uncovered_boundary_length(centers, radii):
    """Length of the unit square's boundary not covered by the disks."""
    total = 0.0
    for axis in (0, 1):
        for level in (0.0, 1.0):
            cover = []
            for c, r in zip(centers, radii):
                off = abs(c[1 - axis] - level)
                if off < r:
                    w = math.sqrt(r * r - off * off)
                    a, b = max(0.0, c[axis] - w), min(1.0, c[axis] + w)
                    if b > a:
                        cover.append((a, b))
            total += 1.0 - sum(b - a for a, b in _merge(cover))
    return total


def cheese_disks(eps, n_balls=None, seed=0):
    """Centers and radii eps / 2^i, i = 1..n, without rasterizing."""
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    n = default_n_balls() if n_balls is None else int(n_balls)
    if n < 1:
        raise ValueError("n_balls must be at least 1")
    centers = stream(seed, 0).random((n, 2))
    return centers, eps / 2.0 ** np.arange(1, n + 1)


def swiss_cheese(eps, n_balls=None, seed=0, spacing=1 / 256):
    """One realization of (Z, Xi) rasterized on the unit square."""
    centers, radii = cheese_disks(eps, n_balls, seed)
    balls = UnionOf(tuple(Ball(tuple(c), float(r)) for c, r in zip(centers, radii)), 2)
    z = rasterize(balls, spacing, UNIT_SQUARE)
    return SwissCheese(float(eps), centers, radii, z, grid_complement(z))


def strict_distance_to_square(eps, seeds, spacing=1 / 256, n_balls=None,
                              estimator="mollified", rho=None):
    """Mean and standard error of d_s(Xi, [0,1]^2) over ``seeds``.

    Using the same seeds for every eps keeps the centers common, so the
    comparison across eps has little Monte-Carlo noise.
    """
    full = IndicatorGrid.from_mask(np.ones((round(1 / spacing),) * 2, bool), spacing, (0.0, 0.0))
    vals = []
    for s in seeds:
        cheese = swiss_cheese(eps, n_balls, s, spacing)
        if not cheese.xi.same_frame(full):
            full = IndicatorGrid.empty_like(cheese.xi, True)
        vals.append(strict_metric(cheese.xi, full, estimator, rho).total)
    v = np.asarray(vals)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se
