"""Random-lattice approximations of a planar convex body.

With L = rho(zeta + Z^2) a randomly rotated and shifted unit lattice,
``pixel_approximation`` is the union of the t-scaled lattice pixels whose
centres lie in K and ``hull_approximation`` the convex hull of the lattice
points in K. The first converges to K in L1 but not in perimeter, the
second in both.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..grid import IndicatorGrid, rasterize, resample
from ..haar import sample_rotation
from ..rng import derive_seed, stream
from ..shapes import ConvexPolygon, Rotation
from .hull import convex_hull


@dataclass(frozen=True)
class RandomLattice:
    t: float
    rotation: Rotation
    shift: np.ndarray

    def world(self, k):
        """World position of lattice point(s) with integer index ``k``."""
        return self.t * ((np.asarray(k, dtype=float) + self.shift) @ self.rotation.matrix.T)

    def index_range(self, body):
        lo, hi = body.bbox()
        corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])
        q = corners @ self.rotation.matrix / self.t - self.shift
        return np.floor(q.min(axis=0)).astype(int), np.ceil(q.max(axis=0)).astype(int)


def random_lattice(t, seed=None, rotation=None, shift=None):
    """Lattice t * rho(zeta + Z^2); ``rotation``/``shift`` override the draw."""
    if not t > 0:
        raise ValueError("lattice scale t must be positive")
    rng = stream(0 if seed is None else seed, 0)
    rot = sample_rotation(2, rng)
    zeta = rng.random(2)
    if rotation is not None:
        rot = rotation if isinstance(rotation, Rotation) else Rotation(rotation)
    if shift is not None:
        zeta = np.asarray(shift, dtype=float)
    return RandomLattice(float(t), rot, zeta)


def _membership(body, lattice):
    k0, k1 = lattice.index_range(body)
    ii, jj = np.meshgrid(np.arange(k0[0], k1[0] + 1), np.arange(k0[1], k1[1] + 1), indexing="ij")
    k = np.stack([ii, jj], axis=-1)
    return k0, body.contains(lattice.world(k))


def pixel_approximation(body, t, seed=None, rotation=None, shift=None):
    """Z_1^t as a grid whose cells are the rotated lattice pixels.

    The returned grid has spacing t and frame rotation rho, so face
    counting on it gives the exact perimeter of the pixel union.
    """
    if body.dim != 2:
        raise ValueError("lattice approximations are planar")
    lat = random_lattice(t, seed, rotation, shift)
    k0, inside = _membership(body, lat)
    origin = lat.world(k0 - 0.5)
    return IndicatorGrid.from_mask(inside, lat.t, tuple(origin), lat.rotation.matrix)


@dataclass(frozen=True)
class LatticeHull:
    """conv(tL n K). Degenerate hulls (fewer than three extreme points) are
    Lebesgue-null, so their area and perimeter are 0."""

    vertices: np.ndarray
    degenerate: bool
    n_points: int

    @property
    def polygon(self):
        return None if self.degenerate else ConvexPolygon(self.vertices)

    @property
    def perimeter(self):
        if self.degenerate:
            return 0.0
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.hypot(e[:, 0], e[:, 1]).sum())

    @property
    def area(self):
        if self.degenerate:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def hull_approximation(body, t, seed=None, rotation=None, shift=None):
    """Z_2^t; the hull is computed exactly in integer lattice coordinates."""
    if body.dim != 2:
        raise ValueError("lattice approximations are planar")
    lat = random_lattice(t, seed, rotation, shift)
    k0, inside = _membership(body, lat)
    rows = np.nonzero(inside.any(axis=1))[0]
    cand = []
    for r in rows:
        cols = np.nonzero(inside[r])[0]
        cand.append((int(r + k0[0]), int(cols[0] + k0[1])))
        cand.append((int(r + k0[0]), int(cols[-1] + k0[1])))
    hull = convex_hull(cand)
    verts = lat.world(np.array(hull, dtype=float).reshape(-1, 2))
    return LatticeHull(verts, len(hull) < 3, int(inside.sum()))


def approximation_grids(body, t_values, kind, seed, spacing, window):
    """Z_1^t or Z_2^t for each t, all on the common frame (spacing, window).

    Lattice i uses seed stream (seed, i) so schedules are reproducible.
    """
    frame = rasterize(body, spacing, window)
    out = []
    for i, t in enumerate(t_values):
        s = derive_seed(seed, i)
        if kind == "pixel":
            z = pixel_approximation(body, t, s)
            out.append(resample(z, frame.spacing, frame.origin, frame.extents))
        elif kind == "hull":
            hull = hull_approximation(body, t, s)
            out.append(IndicatorGrid.empty_like(frame) if hull.degenerate
                       else rasterize(hull.polygon, spacing, window))
        else:
            raise ValueError(f"unknown approximation kind {kind!r}")
    return out, frame


def levy_distance_to_point(values, c):
    """Levy distance between the empirical law of ``values`` and delta_c."""
    dev = np.sort(np.abs(np.asarray(values, dtype=float) - c))[::-1]
    n = dev.size
    cand = [max(k / n, dev[k] if k < n else 0.0) for k in range(n + 1)]
    return float(min(cand))


def distribution_convergence_probe(body, t_values, reps, seed, test_box):
    """Levy distances of H^2(Z_2^t n K) and |D1_{Z_2^t}|(K) to their t -> 0 limits.

    ``test_box`` must contain the body (then it is continuity set for every
    Z_2^t and K n Z_2^t = Z_2^t). Returns rows (t, volume distance,
    perimeter distance).
    """
    lo, hi = body.bbox()
    if np.any(lo <= np.asarray(test_box.lo)) or np.any(hi >= np.asarray(test_box.hi)):
        raise ValueError("test box must contain the body in its interior")
    vol, per = body.volume(), body.perimeter()
    rows = []
    for i, t in enumerate(t_values):
        hulls = [hull_approximation(body, t, derive_seed(seed, i, r)) for r in range(reps)]
        rows.append((t, levy_distance_to_point([h.area for h in hulls], vol),
                     levy_distance_to_point([h.perimeter for h in hulls], per)))
    return rows


def lattice_pixel_ratio_limit():
    """Mean perimeter of Z_1^t over P(K) for a disk as t -> 0: 4/pi."""
    return 4 / math.pi
