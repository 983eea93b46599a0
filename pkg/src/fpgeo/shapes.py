"""Analytic shapes with closed-form volume and perimeter.

Shapes are immutable and vectorized: ``contains`` takes an array of points
with the coordinate on the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np

from .errors import InvalidShape, OverlapUnresolvable


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True, eq=False)
class Rotation:
    """Orthogonal matrix with determinant +1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidShape("rotation must be a square matrix")
        d = m.shape[0]
        if not np.allclose(m @ m.T, np.eye(d), atol=1e-12, rtol=0):
            raise InvalidShape("rotation is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise InvalidShape("rotation determinant is not +1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_angle(cls, theta):
        c, s = math.cos(theta), math.sin(theta)
        return cls(np.array([[c, -s], [s, c]]))

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, points):
        return np.asarray(points, dtype=float) @ self.matrix.T

    def inverse(self):
        return Rotation(self.matrix.T.copy())


class Shape:
    """Base class for the analytic shape alternatives."""

    dim: int

    def contains(self, points):
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def volume(self):
        return exact_volume(self)

    def perimeter(self):
        return exact_perimeter(self)

    def to_json(self):
        return json.dumps(shape_to_dict(self))


@dataclass(frozen=True, eq=False)
class Ball(Shape):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise InvalidShape("ball radius must be positive")
        if len(self.center) not in (2, 3):
            raise InvalidShape("only d = 2 or 3 is supported")

    @property
    def dim(self):
        return len(self.center)

    def contains(self, points):
        p = np.asarray(points, dtype=float) - np.asarray(self.center)
        return np.einsum("...i,...i->...", p, p) <= self.radius**2

    def bbox(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


@dataclass(frozen=True, eq=False)
class Box(Shape):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise InvalidShape("box corners must both have 2 or 3 coordinates")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidShape("box needs min < max on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, lo, hi, d=2):
        return cls((lo,) * d, (hi,) * d)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def sides(self):
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def center(self):
        return (np.asarray(self.hi) + np.asarray(self.lo)) / 2

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        return np.all((p >= self.lo) & (p <= self.hi), axis=-1)

    def bbox(self):
        return np.asarray(self.lo), np.asarray(self.hi)

    def corners(self):
        lo, hi = self.lo, self.hi
        grids = np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def shrink(self, margin):
        return Box(np.asarray(self.lo) + margin, np.asarray(self.hi) - margin)

    def expand(self, margin):
        return self.shrink(-margin)


@dataclass(frozen=True, eq=False)
class ConvexPolygon(Shape):
    """Strictly convex polygon, vertices counterclockwise (2D only)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidShape("polygon needs at least three 2D vertices")
        e = np.roll(v, -1, axis=0) - v
        turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(turn <= 0):
            raise InvalidShape("polygon must be strictly convex and counterclockwise")
        ang = np.arctan2(e[:, 1], e[:, 0])
        winding = np.sum(np.mod(np.roll(ang, -1) - ang, 2 * np.pi))
        if abs(winding - 2 * np.pi) > 1e-9:
            raise InvalidShape("polygon is not simple")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    dim = 2

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        scale = float(np.max(np.abs(v))) + 1.0
        tol = 1e-12 * scale * scale
        inside = np.ones(p.shape[:-1], dtype=bool)
        for (vx, vy), (ex, ey) in zip(v, e):
            inside &= ex * (p[..., 1] - vy) - ey * (p[..., 0] - vx) >= -tol
        return inside

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def edge_lengths(self):
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return np.hypot(e[:, 0], e[:, 1])


@dataclass(frozen=True, eq=False)
class Transformed(Shape):
    """``inner`` mapped by x -> R x + translation."""

    rotation: Rotation
    translation: tuple
    inner: Shape

    def __post_init__(self):
        if not isinstance(self.rotation, Rotation):
            object.__setattr__(self, "rotation", Rotation(self.rotation))
        object.__setattr__(self, "translation", tuple(float(t) for t in self.translation))
        if self.rotation.dim != self.inner.dim or len(self.translation) != self.inner.dim:
            raise InvalidShape("transform dimension does not match inner shape")

    @property
    def dim(self):
        return self.inner.dim

    def contains(self, points):
        p = np.asarray(points, dtype=float) - np.asarray(self.translation)
        return self.inner.contains(p @ self.rotation.matrix)

    def bbox(self):
        t = np.asarray(self.translation)
        if isinstance(self.inner, Ball):
            c = self.rotation.apply(self.inner.center) + t
            return c - self.inner.radius, c + self.inner.radius
        if isinstance(self.inner, ConvexPolygon):
            pts = self.inner.vertices
        else:
            lo, hi = self.inner.bbox()
            pts = Box(lo, hi).corners()
        q = self.rotation.apply(pts) + t
        return q.min(axis=0), q.max(axis=0)


@dataclass(frozen=True, eq=False)
class UnionOf(Shape):
    members: tuple = ()
    dimension: int | None = None

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        dims = {m.dim for m in members}
        if len(dims) > 1:
            raise InvalidShape("union members have mixed dimensions")
        if self.dimension is None:
            object.__setattr__(self, "dimension", dims.pop() if dims else 2)
        elif dims and dims != {self.dimension}:
            raise InvalidShape("union dimension does not match members")

    @property
    def dim(self):
        return self.dimension

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        out = np.zeros(p.shape[:-1], dtype=bool)
        for m in self.members:
            out |= m.contains(p)
        return out

    def bbox(self):
        if not self.members:
            z = np.zeros(self.dim)
            return z, z
        boxes = [m.bbox() for m in self.members]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


# --- exact measures -------------------------------------------------------


def _as_disk(shape):
    """(center, radius) if ``shape`` is a 2D disk, possibly moved rigidly."""
    if isinstance(shape, Ball) and shape.dim == 2:
        return np.asarray(shape.center), shape.radius
    if isinstance(shape, Transformed):
        inner = _as_disk(shape.inner)
        if inner is not None:
            c, r = inner
            return shape.rotation.apply(c) + np.asarray(shape.translation), r
    return None


def _polygon_world(shape):
    if isinstance(shape, ConvexPolygon):
        return shape.vertices
    if isinstance(shape, Box) and shape.dim == 2:
        (x0, y0), (x1, y1) = shape.lo, shape.hi
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    if isinstance(shape, Transformed):
        inner = _polygon_world(shape.inner)
        if inner is not None:
            return shape.rotation.apply(inner) + np.asarray(shape.translation)
    return None


def _separated_polygons(p, q):
    for poly in (p, q):
        e = np.roll(poly, -1, axis=0) - poly
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        for n in normals:
            a, b = p @ n, q @ n
            if a.max() <= b.min() or b.max() <= a.min():
                return True
    return False


def _point_polygon_distance(c, poly):
    if ConvexPolygon(poly).contains(c):
        return 0.0
    best = math.inf
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        ab = b - a
        s = np.clip(np.dot(c - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(c - (a + s * ab))))
    return best


def _box_distance(c, box):
    lo, hi = box.bbox()
    return float(np.linalg.norm(np.maximum(0.0, np.maximum(lo - c, c - hi))))


def _ball_of(shape):
    if isinstance(shape, Ball):
        return np.asarray(shape.center), shape.radius
    return _as_disk(shape)


def disjoint(a, b):
    """Conservative test: True only when interiors provably do not meet."""
    la, ha = a.bbox()
    lb, hb = b.bbox()
    if np.any(ha <= lb) or np.any(hb <= la):
        return True
    ba, bb = _ball_of(a), _ball_of(b)
    if ba and bb:
        return float(np.linalg.norm(ba[0] - bb[0])) >= ba[1] + bb[1]
    if ba and isinstance(b, Box):
        return _box_distance(ba[0], b) >= ba[1]
    if bb and isinstance(a, Box):
        return _box_distance(bb[0], a) >= bb[1]
    pa, pb = _polygon_world(a), _polygon_world(b)
    if pa is not None and pb is not None:
        return _separated_polygons(pa, pb)
    if ba and pb is not None:
        return _point_polygon_distance(ba[0], pb) >= ba[1]
    if bb and pa is not None:
        return _point_polygon_distance(bb[0], pa) >= bb[1]
    return False


def _union_parts(shape):
    members = shape.members
    if all(disjoint(members[i], members[k])
           for i in range(len(members)) for k in range(i + 1, len(members))):
        return "disjoint", None
    disks = [_as_disk(m) for m in members]
    if all(d is not None for d in disks):
        return "disks", disks
    raise OverlapUnresolvable("union members overlap and are not all disks")


def exact_volume(shape):
    if isinstance(shape, Ball):
        return unit_ball_volume(shape.dim) * shape.radius**shape.dim
    if isinstance(shape, Box):
        return float(np.prod(shape.sides))
    if isinstance(shape, ConvexPolygon):
        return shape.area()
    if isinstance(shape, Transformed):
        return exact_volume(shape.inner)
    if isinstance(shape, UnionOf):
        kind, disks = _union_parts(shape)
        if kind == "disjoint":
            return float(sum(exact_volume(m) for m in shape.members))
        from .models.arcs import disk_union_area

        return disk_union_area([c for c, _ in disks], [r for _, r in disks])
    raise TypeError(f"not a shape: {shape!r}")


def exact_perimeter(shape):
    if isinstance(shape, Ball):
        return shape.dim * exact_volume(shape) / shape.radius
    if isinstance(shape, Box):
        s = shape.sides
        return float(sum(2 * np.prod(np.delete(s, i)) for i in range(len(s))))
    if isinstance(shape, ConvexPolygon):
        return float(shape.edge_lengths().sum())
    if isinstance(shape, Transformed):
        return exact_perimeter(shape.inner)
    if isinstance(shape, UnionOf):
        kind, disks = _union_parts(shape)
        if kind == "disjoint":
            return float(sum(exact_perimeter(m) for m in shape.members))
        from .models.arcs import disk_union_perimeter

        return disk_union_perimeter([c for c, _ in disks], [r for _, r in disks])
    raise TypeError(f"not a shape: {shape!r}")


def centered_rotation(shape, rotation):
    """``shape`` rotated about the center of its bounding box."""
    lo, hi = shape.bbox()
    c = (lo + hi) / 2
    return Transformed(rotation, c - rotation.apply(c), shape)


# --- JSON -----------------------------------------------------------------


def shape_from_dict(spec):
    if not isinstance(spec, dict) or "type" not in spec:
        raise InvalidShape("shape spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "ball":
            return Ball(tuple(spec["center"]), float(spec["radius"]))
        if kind == "box":
            return Box(tuple(spec["min"]), tuple(spec["max"]))
        if kind == "polygon":
            return ConvexPolygon(np.asarray(spec["vertices"], dtype=float))
        if kind == "transformed":
            inner = shape_from_dict(spec["shape"])
            if "angle" in spec:
                rot = Rotation.from_angle(float(spec["angle"]))
            elif "rotation" in spec:
                rot = Rotation(np.asarray(spec["rotation"], dtype=float))
            else:
                rot = Rotation.identity(inner.dim)
            return Transformed(rot, tuple(spec.get("translation", [0.0] * inner.dim)), inner)
        if kind == "union":
            members = tuple(shape_from_dict(m) for m in spec.get("members", []))
            return UnionOf(members, spec.get("dim"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidShape):
            raise
        raise InvalidShape(f"malformed {kind!r} spec: {exc}") from exc
    raise InvalidShape(f"unknown shape type {kind!r}")


def shape_to_dict(shape):
    if isinstance(shape, Ball):
        return {"type": "ball", "center": list(shape.center), "radius": shape.radius}
    if isinstance(shape, Box):
        return {"type": "box", "min": list(shape.lo), "max": list(shape.hi)}
    if isinstance(shape, ConvexPolygon):
        return {"type": "polygon", "vertices": shape.vertices.tolist()}
    if isinstance(shape, Transformed):
        return {"type": "transformed", "rotation": shape.rotation.matrix.tolist(),
                "translation": list(shape.translation), "shape": shape_to_dict(shape.inner)}
    if isinstance(shape, UnionOf):
        return {"type": "union", "dim": shape.dim,
                "members": [shape_to_dict(m) for m in shape.members]}
    raise TypeError(f"not a shape: {shape!r}")


def load_shape(path):
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidShape(f"{path}: not valid JSON ({exc})") from exc
    return shape_from_dict(spec)
