"""Strict metric between indicator grids and convergence diagnostics.

``strict_metric`` adds a volume (L1 distance) to a perimeter difference;
the mixed units are kept as they are and both addends are reported.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch
from .grid import grid_symmdiff, grid_volume
from .perimeter import (boundary_normal_samples, minkowski_perimeter, mollified_variation,
                        normal_measure, tv_perimeter)

VARIATION_ESTIMATORS = {
    "mollified": lambda g, rho=None: mollified_variation(g, rho),
    "tv": lambda g, rho=None: tv_perimeter(g),
    "minkowski": lambda g, rho=None: minkowski_perimeter(g, rho if rho else 4 * g.spacing),
}


def variation(grid, estimator="mollified", rho=None):
    try:
        fn = VARIATION_ESTIMATORS[estimator]
    except KeyError:
        raise ValueError(f"unknown variation estimator {estimator!r}") from None
    return fn(grid, rho)


@dataclass(frozen=True)
class StrictDistanceReport:
    l1_part: float
    variation_gap: float

    @property
    def total(self):
        return self.l1_part + self.variation_gap

    def to_dict(self):
        return {"l1_part": self.l1_part, "variation_gap": self.variation_gap,
                "total": self.total}


def strict_metric(a, b, variation_estimator="mollified", rho=None):
    """d_s(A, B) = vol(A xor B) + |V(A) - V(B)|."""
    if not a.same_frame(b):
        raise GridMismatch("strict metric needs grids on the same frame")
    l1 = grid_volume(grid_symmdiff(a, b))
    gap = abs(variation(a, variation_estimator, rho) - variation(b, variation_estimator, rho))
    return StrictDistanceReport(l1, gap)


def _trend(values, tol):
    """Ends at or below ``tol`` and is decreasing overall (or was never above ``tol``)."""
    v = list(values)
    return bool(v) and v[-1] <= tol and (v[-1] <= v[0] or max(v) <= tol)


@dataclass
class ProbeTable:
    """Per-element diagnostics of a sequence against its putative limit."""

    columns: tuple
    rows: list
    tolerances: dict
    labels: list = field(default_factory=list)

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def passes(self, name):
        return _trend(self.column(name), self.tolerances[name])

    @property
    def converges(self):
        return all(self.passes(c) for c in self.tolerances)

    @property
    def verdict(self):
        return "strictly convergent trend" if self.converges else "not strictly convergent"

    def to_records(self):
        out = []
        for label, row in zip(self.labels or range(len(self.rows)), self.rows):
            rec = {"label": label}
            rec.update(dict(zip(self.columns, row)))
            out.append(rec)
        return out


def _check_frames(sequence, limit):
    for g in sequence:
        if not g.same_frame(limit):
            raise GridMismatch("every element must share the limit's frame")


def strict_convergence_probe(sequence, limit, estimator="mollified", rho=None,
                             l1_tol=None, gap_tol=None, labels=None):
    """L1 distance and variation gap of each element to ``limit``.

    Default tolerances are 2% of the limit's volume and variation. The
    verdict requires both columns to decrease and finish under tolerance.
    """
    _check_frames(sequence, limit)
    v_lim = variation(limit, estimator, rho)
    rows = []
    for g in sequence:
        l1 = grid_volume(grid_symmdiff(g, limit))
        v = variation(g, estimator, rho)
        rows.append((l1, abs(v - v_lim), v))
    tol = {"l1": 0.02 * grid_volume(limit) if l1_tol is None else l1_tol,
           "variation_gap": 0.02 * v_lim if gap_tol is None else gap_tol}
    return ProbeTable(("l1", "variation_gap", "variation"), rows, tol, list(labels or []))


def boundary_measure_continuity_probe(sequence, limit, test_window, n_bins=16, rho=None,
                                      mass_tol=None, hist_tol=0.05, labels=None):
    """Compare |D1_A|(window) and normal histograms of each element to the limit.

    ``test_window`` is an axis-aligned world box; the histogram distance is
    the total variation distance between normalized normal histograms of
    the boundary mass inside the window.
    """
    _check_frames(sequence, limit)

    def stats(g):
        s = boundary_normal_samples(g, rho).restrict(test_window)
        return s.total_weight, normal_measure(s, n_bins)

    m_lim, h_lim = stats(limit)
    rows = []
    for g in sequence:
        m, hist = stats(g)
        rows.append((abs(m - m_lim), hist.tv_distance(h_lim), m))
    tol = {"mass_gap": 0.02 * m_lim if mass_tol is None else mass_tol,
           "hist_distance": hist_tol}
    return ProbeTable(("mass_gap", "hist_distance", "window_mass"), rows, tol, list(labels or []))


def variation_lsc_holds(variations, limit_variation, slack=0.02):
    """lim inf of the variations (last half of the sequence) >= V(limit) - slack."""
    v = np.asarray(variations, dtype=float)
    tail = v[len(v) // 2:]
    return bool(tail.min() >= limit_variation * (1 - slack))
