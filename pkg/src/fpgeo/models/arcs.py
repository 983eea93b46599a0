"""Exact boundary of a finite union of disks.

Each circle keeps the arcs not covered by any other disk. Arc lengths sum
to the perimeter of the union; Green's theorem over the same arcs gives its
area (hole boundaries come out with the correct orientation automatically).
"""
import math

import numpy as np

TWO_PI = 2 * math.pi


def _merge(intervals):
    """Union of angular intervals given as (start, end) with end > start."""
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def exposed_arcs(centers, radii):
    """List of (circle index, start angle, end angle) of uncovered arcs.

    Angles are counterclockwise, ``0 <= start < end <= start + 2*pi``.
    """
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    r = np.asarray(radii, dtype=float).ravel()
    arcs = []
    for i in range(len(r)):
        delta = c - c[i]
        dist = np.hypot(delta[:, 0], delta[:, 1])
        covered = False
        cover = []
        for j in np.nonzero(dist < r[i] + r)[0]:
            if j == i:
                continue
            d, rj = dist[j], r[j]
            if d == 0.0 and rj == r[i]:
                if j < i:
                    covered = True
                    break
                continue
            if d + r[i] <= rj:
                covered = True
                break
            if d + rj <= r[i]:
                continue
            cos_a = (r[i] ** 2 + d * d - rj * rj) / (2 * r[i] * d)
            half = math.acos(min(1.0, max(-1.0, cos_a)))
            phi = math.atan2(delta[j, 1], delta[j, 0]) % TWO_PI
            a, b = phi - half, phi + half
            if a < 0:
                cover += [(a + TWO_PI, TWO_PI), (0.0, b)]
            elif b > TWO_PI:
                cover += [(a, TWO_PI), (0.0, b - TWO_PI)]
            else:
                cover.append((a, b))
        if covered:
            continue
        if not cover:
            arcs.append((i, 0.0, TWO_PI))
            continue
        merged = _merge(cover)
        gaps = []
        prev = merged[-1][1] - TWO_PI
        for a, b in merged:
            if a > prev:
                gaps.append((prev, a))
            prev = b
        for a, b in gaps:
            if b - a > 0:
                if a < 0:
                    arcs.append((i, a + TWO_PI, b + TWO_PI))
                else:
                    arcs.append((i, a, b))
    return arcs


def _clip_arc(cx, cy, r, a, b, box):
    """Sub-arcs of [a, b] lying inside the axis-aligned box (lo, hi)."""
    (x0, y0), (x1, y1) = box
    cuts = [a, b]
    for k, (val, center) in enumerate(((x0, cx), (x1, cx), (y0, cy), (y1, cy))):
        s = (val - center) / r
        if abs(s) >= 1:
            continue
        base = math.acos(s) if k < 2 else math.asin(s)
        roots = (base, -base) if k < 2 else (base, math.pi - base)
        for t in roots:
            t = t % TWO_PI
            for shift in (0.0, TWO_PI):
                if a < t + shift < b:
                    cuts.append(t + shift)
    cuts.sort()
    out = []
    for s, e in zip(cuts[:-1], cuts[1:]):
        m = 0.5 * (s + e)
        x, y = cx + r * math.cos(m), cy + r * math.sin(m)
        if x0 <= x <= x1 and y0 <= y <= y1:
            out.append((s, e))
    return out


def disk_union_perimeter(centers, radii, clip=None):
    """Length of the boundary of the union, optionally only inside ``clip``.

    ``clip`` is ``((x0, y0), (x1, y1))`` or a 2D ``Box``.
    """
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    r = np.asarray(radii, dtype=float).ravel()
    if clip is not None and hasattr(clip, "lo"):
        clip = (clip.lo, clip.hi)
    total = 0.0
    for i, a, b in exposed_arcs(c, r):
        if clip is None:
            total += r[i] * (b - a)
        else:
            for s, e in _clip_arc(c[i, 0], c[i, 1], r[i], a, b, clip):
                total += r[i] * (e - s)
    return total


def disk_union_area(centers, radii):
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    r = np.asarray(radii, dtype=float).ravel()
    total = 0.0
    for i, a, b in exposed_arcs(c, r):
        cx, cy, ri = c[i, 0], c[i, 1], r[i]
        total += 0.5 * (ri * ri * (b - a)
                        + ri * (cx * (math.sin(b) - math.sin(a)) - cy * (math.cos(b) - math.cos(a))))
    return total
