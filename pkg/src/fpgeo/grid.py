"""Bit-packed indicator grids.

A grid stores ``1_A`` sampled at cell centers of a regular lattice. Axis k
of the occupancy array is coordinate k. Cell ``idx`` has center
``origin + R @ ((idx + 1/2) * spacing)`` where ``R`` is the frame rotation
(identity for ordinary grids; lattice approximations use rotated frames).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import struct

import numpy as np

from .errors import EmptyWindow, GridFormatError, GridMismatch, ZeroSpacing
from .shapes import Box, UnionOf

#: cells evaluated per slab when rasterizing
_SLAB_CELLS = 1 << 22


@dataclass(frozen=True, eq=False)
class IndicatorGrid:
    extents: tuple
    spacing: float
    origin: tuple
    bits: np.ndarray
    rotation: np.ndarray | None = None
    clipped: bool = False
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if len(ext) not in (2, 3) or min(ext) < 1:
            raise EmptyWindow("grid needs 2 or 3 axes with at least one cell each")
        if not self.spacing > 0:
            raise ZeroSpacing("grid spacing must be positive")
        origin = tuple(float(o) for o in self.origin)
        if len(origin) != len(ext):
            raise GridFormatError("origin dimension does not match extents")
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8).ravel()
        if bits.size != (math.prod(ext) + 7) // 8:
            raise GridFormatError("packed bit array has the wrong length")
        bits.setflags(write=False)
        rot = self.rotation
        if rot is not None:
            rot = np.array(rot, dtype=float)
            if np.allclose(rot, np.eye(len(ext)), atol=0, rtol=0):
                rot = None
            else:
                rot.setflags(write=False)
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "rotation", rot)

    @classmethod
    def from_mask(cls, mask, spacing, origin, rotation=None, clipped=False):
        mask = np.asarray(mask, dtype=bool)
        g = cls(mask.shape, spacing, origin, np.packbits(mask, axis=None), rotation, clipped)
        m = mask.copy()
        m.setflags(write=False)
        g._memo["mask"] = m
        return g

    @classmethod
    def empty_like(cls, other, value=False):
        mask = np.full(other.extents, value, dtype=bool)
        return cls.from_mask(mask, other.spacing, other.origin, other.rotation)

    @property
    def dim(self):
        return len(self.extents)

    @property
    def mask(self):
        m = self._memo.get("mask")
        if m is None:
            n = math.prod(self.extents)
            m = np.unpackbits(self.bits, count=n).astype(bool).reshape(self.extents)
            m.setflags(write=False)
            self._memo["mask"] = m
        return m

    @property
    def frame(self):
        return np.eye(self.dim) if self.rotation is None else self.rotation

    @property
    def window(self):
        """Axis-aligned extent of the grid (local frame when rotated)."""
        lo = np.asarray(self.origin)
        return Box(lo, lo + np.asarray(self.extents) * self.spacing)

    def count(self):
        return int(np.bitwise_count(self.bits).sum())

    def same_frame(self, other):
        return (self.extents == other.extents and self.spacing == other.spacing
                and self.origin == other.origin
                and (self.rotation is None) == (other.rotation is None)
                and (self.rotation is None or np.array_equal(self.rotation, other.rotation)))

    def equals(self, other):
        return self.same_frame(other) and np.array_equal(self.bits, other.bits)

    def axis_centers(self, axis):
        """Local-frame cell-center coordinates along ``axis``."""
        return (np.arange(self.extents[axis]) + 0.5) * self.spacing

    def to_world(self, local):
        """Map local offsets (from origin, in the grid frame) to world points."""
        local = np.asarray(local, dtype=float)
        if self.rotation is not None:
            local = local @ self.rotation.T
        return local + np.asarray(self.origin)

    def to_local(self, world):
        p = np.asarray(world, dtype=float) - np.asarray(self.origin)
        if self.rotation is not None:
            p = p @ self.rotation
        return p

    def support_box(self):
        """Local-frame bounding box of the set cells, or None if empty."""
        m = self.mask
        if not m.any():
            return None
        lo, hi = [], []
        for ax in range(self.dim):
            other = tuple(a for a in range(self.dim) if a != ax)
            idx = np.nonzero(m.any(axis=other))[0]
            lo.append(idx[0] * self.spacing)
            hi.append((idx[-1] + 1) * self.spacing)
        return np.asarray(lo), np.asarray(hi)


def grid_volume(a):
    return a.spacing**a.dim * a.count()


def _check(a, b):
    if not a.same_frame(b):
        raise GridMismatch("grids must share dimension, extents, spacing, origin and frame")


def _combine(a, b, op):
    _check(a, b)
    return IndicatorGrid(a.extents, a.spacing, a.origin, op(a.bits, b.bits), a.rotation)


def grid_union(a, b):
    return _combine(a, b, np.bitwise_or)


def grid_intersect(a, b):
    return _combine(a, b, np.bitwise_and)


def grid_symmdiff(a, b):
    return _combine(a, b, np.bitwise_xor)


def grid_complement(a):
    """Complement inside the grid window."""
    bits = np.bitwise_not(a.bits)
    pad = (-math.prod(a.extents)) % 8
    if pad:
        bits[-1] &= np.uint8((0xFF << pad) & 0xFF)
    return IndicatorGrid(a.extents, a.spacing, a.origin, bits, a.rotation)


def grid_difference(a, b):
    return grid_intersect(a, grid_complement(b))


# --- rasterization ----------------------------------------------------------


def window_extents(window, spacing):
    if not spacing > 0:
        raise ZeroSpacing("spacing must be positive")
    sides = np.asarray(window.hi) - np.asarray(window.lo)
    ext = np.ceil(sides / spacing - 1e-9).astype(int)
    if np.any(ext < 1):
        raise EmptyWindow("window is narrower than one cell")
    return tuple(int(e) for e in ext)


def _stamp(mask, shape, spacing, origin, clip_lo=None, clip_hi=None):
    """OR the cell-center indicator of ``shape`` into ``mask`` in place."""
    d = mask.ndim
    lo, hi = shape.bbox()
    i0 = np.floor((lo - origin) / spacing - 0.5).astype(int)
    i1 = np.ceil((hi - origin) / spacing - 0.5).astype(int) + 1
    i0 = np.maximum(i0, 0)
    i1 = np.minimum(i1, mask.shape)
    if np.any(i1 <= i0):
        return
    axes = [origin[k] + (np.arange(i0[k], i1[k]) + 0.5) * spacing for k in range(d)]
    rows_per_slab = max(1, _SLAB_CELLS // max(1, math.prod(len(a) for a in axes[1:])))
    for s in range(0, len(axes[0]), rows_per_slab):
        part = [axes[0][s:s + rows_per_slab]] + axes[1:]
        pts = np.stack(np.meshgrid(*part, indexing="ij"), axis=-1)
        sl = (slice(i0[0] + s, i0[0] + s + len(part[0])),) + tuple(
            slice(i0[k], i1[k]) for k in range(1, d))
        mask[sl] |= shape.contains(pts)


def rasterize(shape, spacing, window):
    """Cell-center rasterization of ``shape`` on the grid spanning ``window``.

    Cells are set iff their center lies in the shape. If the shape sticks
    out of the window the result has ``clipped=True``.
    """
    if shape.dim != window.dim:
        raise EmptyWindow("window dimension does not match the shape")
    ext = window_extents(window, spacing)
    origin = np.asarray(window.lo, dtype=float)
    mask = np.zeros(ext, dtype=bool)
    members = shape.members if isinstance(shape, UnionOf) else (shape,)
    for m in members:
        _stamp(mask, m, spacing, origin)
    clipped = False
    if members:
        lo, hi = shape.bbox()
        top = origin + np.asarray(ext) * spacing
        clipped = bool(np.any(lo < origin) or np.any(hi > top))
    return IndicatorGrid.from_mask(mask, spacing, tuple(origin), clipped=clipped)


def resample(source, spacing, origin, extents, rotation=None):
    """Nearest-neighbour resampling of ``source`` onto another frame.

    Each target cell takes the value of the source cell containing its
    center; centers outside the source window read as 0.
    """
    target = IndicatorGrid(extents, spacing, origin,
                           np.zeros((math.prod(extents) + 7) // 8, np.uint8), rotation)
    src = source.mask
    out = np.zeros(target.extents, dtype=bool)
    axes = [target.axis_centers(k) for k in range(target.dim)]
    rows = max(1, _SLAB_CELLS // max(1, math.prod(len(a) for a in axes[1:])))
    for s in range(0, len(axes[0]), rows):
        part = [axes[0][s:s + rows]] + axes[1:]
        local = np.stack(np.meshgrid(*part, indexing="ij"), axis=-1)
        q = source.to_local(target.to_world(local)) / source.spacing
        idx = np.floor(q).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < np.asarray(source.extents)), axis=-1)
        idx = np.where(ok[..., None], idx, 0)
        out[s:s + len(part[0])] = ok & src[tuple(idx[..., k] for k in range(target.dim))]
    return IndicatorGrid.from_mask(out, spacing, origin, rotation)


def resample_like(source, like):
    return resample(source, like.spacing, like.origin, like.extents, like.rotation)


# --- file formats -----------------------------------------------------------
#
# 2D: binary PBM ("P4"). Image row 0 is the top (largest y). A comment line
# "# fpgeo spacing=<h> origin=<x>,<y>" carries the frame; without it the
# reader assumes spacing 1 and origin (0, 0).
#
# 3D: "FPG1" + <u32 nx, ny, nz> + <f64 h, ox, oy, oz> + packed bits, x
# fastest, most significant bit first (numpy.packbits order). All
# little-endian.

_FPG1 = struct.Struct("<4s3I4d")


def write_pbm(grid, path):
    if grid.dim != 2 or grid.rotation is not None:
        raise GridFormatError("PBM holds axis-aligned 2D grids only")
    nx, ny = grid.extents
    image = grid.mask.T[::-1]
    header = (f"P4\n# fpgeo spacing={grid.spacing!r} origin={grid.origin[0]!r},"
              f"{grid.origin[1]!r}\n{nx} {ny}\n").encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.packbits(image, axis=1).tobytes())


def _pbm_tokens(data):
    pos, tokens, comments = 0, [], []
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1:end].decode(errors="replace").strip())
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise GridFormatError("truncated PBM header")
        tokens.append(data[start:pos])
    return tokens, comments, pos + 1


def read_pbm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        tokens, comments, pos = _pbm_tokens(data)
        if tokens[0] != b"P4":
            raise GridFormatError("not a binary PBM (magic P4)")
        nx, ny = int(tokens[1]), int(tokens[2])
    except (ValueError, IndexError) as exc:
        raise GridFormatError(f"malformed PBM header: {exc}") from exc
    spacing, origin = 1.0, (0.0, 0.0)
    for c in comments:
        if c.startswith("fpgeo"):
            fields = dict(kv.split("=", 1) for kv in c.split()[1:] if "=" in kv)
            spacing = float(fields.get("spacing", spacing))
            if "origin" in fields:
                origin = tuple(float(v) for v in fields["origin"].split(","))
    row = (nx + 7) // 8
    if ny < 1 or nx < 1 or len(data) - pos < row * ny:
        raise GridFormatError("PBM raster is truncated or empty")
    raw = np.frombuffer(data, dtype=np.uint8, count=row * ny, offset=pos)
    image = np.unpackbits(raw.reshape(ny, row), axis=1, count=nx).astype(bool)
    return IndicatorGrid.from_mask(image[::-1].T, spacing, origin)


def write_fpg1(grid, path):
    if grid.dim != 3 or grid.rotation is not None:
        raise GridFormatError("FPG1 holds axis-aligned 3D grids only")
    nx, ny, nz = grid.extents
    with open(path, "wb") as fh:
        fh.write(_FPG1.pack(b"FPG1", nx, ny, nz, grid.spacing, *grid.origin))
        fh.write(np.packbits(grid.mask.ravel(order="F")).tobytes())


def read_fpg1(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _FPG1.size:
        raise GridFormatError("truncated FPG1 header")
    magic, nx, ny, nz, h, ox, oy, oz = _FPG1.unpack_from(data)
    if magic != b"FPG1":
        raise GridFormatError("bad FPG1 magic")
    n = nx * ny * nz
    raw = np.frombuffer(data, dtype=np.uint8, offset=_FPG1.size)
    if raw.size != (n + 7) // 8:
        raise GridFormatError("FPG1 raster has the wrong length")
    mask = np.unpackbits(raw, count=n).astype(bool).reshape((nx, ny, nz), order="F")
    return IndicatorGrid.from_mask(mask, h, (ox, oy, oz))


def save_grid(grid, path):
    (write_pbm if grid.dim == 2 else write_fpg1)(grid, path)


def load_grid(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic[:2] == b"P4":
        return read_pbm(path)
    if magic == b"FPG1":
        return read_fpg1(path)
    raise GridFormatError(f"{path}: unrecognized grid file")
