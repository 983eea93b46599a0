"""Poisson germ-grain processes and their specific perimeter.

Germs are Poisson in the simulation window; estimates are taken in the
inner window (the simulation window shrunk by the guard margin), which is
minus-sampling: every grain that can reach the inner window has its germ
inside the simulation window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from ..crofton import CroftonConvention, crofton_constant, crofton_values
from ..errors import InvalidShape
from ..grid import rasterize
from ..haar import sample_rotations
from ..perimeter import NormalHistogram, _band_count, boundary_normal_samples, normal_measure, tv_perimeter_in
from ..rng import derive_seed, map_ordered, stream
from ..shapes import Ball, Box, Rotation, Transformed, UnionOf, unit_ball_volume
from .arcs import disk_union_perimeter


# --- grain laws ---------------------------------------------------------------


@dataclass(frozen=True)
class FixedBall:
    radius: float
    dim: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidShape("grain radius must be positive")

    @property
    def max_diameter(self):
        return 2 * self.radius

    @property
    def mean_volume(self):
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    @property
    def mean_perimeter(self):
        return self.dim * unit_ball_volume(self.dim) * self.radius ** (self.dim - 1)

    def sample(self, rng, centers):
        return [Ball(tuple(c), self.radius) for c in centers]

    def to_dict(self):
        return {"type": "ball", "radius": self.radius, "dim": self.dim}


@dataclass(frozen=True)
class RandomRadiusBall:
    """Ball with radius uniform on [r_min, r_max]."""

    r_min: float
    r_max: float
    dim: int = 2

    def __post_init__(self):
        if not 0 < self.r_min <= self.r_max:
            raise InvalidShape("need 0 < r_min <= r_max")

    def _moment(self, k):
        a, b = self.r_min, self.r_max
        if a == b:
            return a ** k
        return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))

    @property
    def max_diameter(self):
        return 2 * self.r_max

    @property
    def mean_volume(self):
        return unit_ball_volume(self.dim) * self._moment(self.dim)

    @property
    def mean_perimeter(self):
        return self.dim * unit_ball_volume(self.dim) * self._moment(self.dim - 1)

    def sample(self, rng, centers):
        radii = rng.uniform(self.r_min, self.r_max, len(centers))
        return [Ball(tuple(c), float(r)) for c, r in zip(centers, radii)]

    def to_dict(self):
        return {"type": "random_ball", "r_min": self.r_min, "r_max": self.r_max, "dim": self.dim}


@dataclass(frozen=True)
class FixedBox:
    """Axis-aligned box with the given side lengths, centered on the germ."""

    sides: tuple

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        if len(self.sides) < 2 or min(self.sides) <= 0:
            raise InvalidShape("box grain needs at least two positive sides")

    @property
    def dim(self):
        return len(self.sides)

    @property
    def max_diameter(self):
        return math.hypot(*self.sides)

    @property
    def mean_volume(self):
        return math.prod(self.sides)

    @property
    def mean_perimeter(self):
        v = self.mean_volume
        return sum(2 * v / s for s in self.sides)

    def sample(self, rng, centers):
        half = np.asarray(self.sides) / 2
        return [Box(tuple(c - half), tuple(c + half)) for c in centers]

    def to_dict(self):
        return {"type": "box", "sides": list(self.sides)}


@dataclass(frozen=True)
class RotatedBox(FixedBox):
    """Box grain under an independent Haar rotation about its center."""

    def sample(self, rng, centers):
        half = np.asarray(self.sides) / 2
        core = Box(tuple(-half), tuple(half))
        rots = sample_rotations(self.dim, len(centers), rng)
        return [Transformed(Rotation(r), tuple(c), core) for c, r in zip(centers, rots)]

    def to_dict(self):
        return {"type": "rotated_box", "sides": list(self.sides)}


def grain_from_dict(spec):
    if not isinstance(spec, dict) or "type" not in spec:
        raise InvalidShape("grain spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "ball":
            return FixedBall(float(spec["radius"]), int(spec.get("dim", 2)))
        if kind == "random_ball":
            return RandomRadiusBall(float(spec["r_min"]), float(spec["r_max"]),
                                    int(spec.get("dim", 2)))
        if kind == "box":
            return FixedBox(tuple(spec["sides"]))
        if kind == "rotated_box":
            return RotatedBox(tuple(spec["sides"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidShape):
            raise
        raise InvalidShape(f"malformed {kind!r} grain: {exc}") from exc
    raise InvalidShape(f"unknown grain type {kind!r}")


# --- process ------------------------------------------------------------------------


@dataclass(frozen=True)
class FpProcessConfig:
    intensity: float
    window: Box
    grain: object
    seed: int = 0
    guard: float | None = None

    def __post_init__(self):
        if not self.intensity > 0:
            raise InvalidShape("intensity must be positive")
        if self.window.dim != self.grain.dim:
            raise InvalidShape("window and grain dimensions differ")
        if self.guard is None:
            object.__setattr__(self, "guard", float(self.grain.max_diameter))
        if self.guard < self.grain.max_diameter:
            raise InvalidShape("guard margin is smaller than the maximal grain diameter")
        if np.any(np.asarray(self.window.sides) <= 2 * self.guard):
            raise InvalidShape("window leaves no inner window after the guard margin")

    @property
    def dim(self):
        return self.window.dim

    @property
    def inner_window(self):
        return self.window.shrink(self.guard)

    def to_dict(self):
        return {"intensity": self.intensity, "window": [list(self.window.lo), list(self.window.hi)],
                "grain": self.grain.to_dict(), "seed": self.seed, "guard": self.guard}


@dataclass(frozen=True, eq=False)
class ParticleList:
    grains: tuple
    centers: np.ndarray
    window: Box

    def __len__(self):
        return len(self.grains)

    def disks(self):
        """(centers, radii) when every grain is a planar disk, else None."""
        if self.window.dim != 2 or not all(isinstance(g, Ball) for g in self.grains):
            return None
        return self.centers, np.array([g.radius for g in self.grains])


def sample_fp_process(cfg, rep=0):
    """Replication ``rep`` of the process; it draws from stream (seed, rep)."""
    rng = stream(cfg.seed, rep)
    n = int(rng.poisson(cfg.intensity * cfg.window.volume()))
    lo, sides = np.asarray(cfg.window.lo), np.asarray(cfg.window.sides)
    centers = lo + rng.random((n, cfg.dim)) * sides
    return ParticleList(tuple(cfg.grain.sample(rng, centers)), centers, cfg.window)


def union_set(particles, spacing):
    """Rasterized union of the grains on the particle window."""
    return rasterize(UnionOf(particles.grains, particles.window.dim), spacing, particles.window)


def boolean_specific_perimeter(intensity, grain):
    """Closed form gamma * mean perimeter * exp(-gamma * mean volume)."""
    return intensity * grain.mean_perimeter * math.exp(-intensity * grain.mean_volume)


# --- replications -------------------------------------------------------------------

ESTIMATORS = ("mollified", "tv", "exact")


@dataclass(frozen=True, eq=False)
class Replication:
    index: int
    n_particles: int
    perimeter: float
    histogram: np.ndarray | None = None
    section: float | None = None
    regions: tuple = ()


def _local_box(grid, box):
    lo = np.asarray(box.lo) - np.asarray(grid.origin)
    return Box(tuple(lo), tuple(lo + np.asarray(box.sides)))


def _region_mass(grid, samples, particles, box, estimator):
    if estimator == "mollified":
        return samples.mass_in(box)
    if estimator == "tv":
        return tv_perimeter_in(grid, _local_box(grid, box))
    disks = particles.disks()
    if disks is None:
        raise ValueError("the exact estimator needs planar disk grains")
    return disk_union_perimeter(disks[0], disks[1], clip=box) if len(particles) else 0.0


def replicate(cfg, spacing, rep, estimator="mollified", rho=None, n_bins=None,
              j=None, n_flats=0, regions=()):
    """Direct perimeter, optional normal histogram and section mass inside the inner window."""
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")
    particles = sample_fp_process(cfg, rep)
    inner = cfg.inner_window
    grid = None
    samples = None
    if estimator != "exact" or n_bins or j:
        grid = union_set(particles, spacing)
    if estimator == "mollified" or n_bins:
        samples = boundary_normal_samples(grid, rho)
    perimeter = _region_mass(grid, samples, particles, inner, estimator)
    extra = tuple(_region_mass(grid, samples, particles, b, estimator) for b in regions)
    hist = None
    if n_bins:
        hist = normal_measure(samples.restrict(inner), n_bins).masses
    section = None
    if j:
        loc = _local_box(grid, inner)
        box = (np.asarray(loc.lo), np.asarray(loc.hi))
        vals = crofton_values(grid, j, n_flats, derive_seed(cfg.seed, rep, 1), rho,
                              window=loc, count_box=box)
        section = float(vals.mean()) if len(vals) else 0.0
    return Replication(rep, len(particles), perimeter, hist, section, extra)


def run_replications(cfg, spacing, reps, **kwargs):
    """Replications 0..reps-1 in index order (threaded with FPGEO_THREADS)."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    return map_ordered(lambda r: replicate(cfg, spacing, r, **kwargs), range(reps))


@dataclass(frozen=True)
class SpecificEstimate:
    """Per-unit-volume estimate with its replication standard error."""

    value: float
    stderr: float
    reps: int
    values: tuple = ()
    estimator: str = ""

    def within(self, target, k=3.0):
        return abs(self.value - target) <= k * self.stderr

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "reps": self.reps,
                "estimator": self.estimator}


def _density(values, volume, estimator=""):
    v = np.asarray(values, dtype=float) / volume
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return SpecificEstimate(float(v.mean()), se, int(v.size), tuple(v.tolist()), estimator)


def perimeter_density(records, volume, estimator="", region=None):
    """SpecificEstimate from replication records (``region`` indexes ``regions``)."""
    vals = [r.perimeter if region is None else r.regions[region] for r in records]
    return _density(vals, volume, estimator)


def specific_perimeter_estimate(cfg, spacing, reps, estimator="mollified", rho=None,
                                region=None):
    """Mean boundary mass per unit volume of the inner window (or ``region``)."""
    if reps < 2:
        raise ValueError("reps must be at least 2")
    if region is None:
        recs = run_replications(cfg, spacing, reps, estimator=estimator, rho=rho)
        return perimeter_density(recs, cfg.inner_window.volume(), estimator)
    _check_region(cfg, region)
    recs = run_replications(cfg, spacing, reps, estimator=estimator, rho=rho, regions=(region,))
    return perimeter_density(recs, region.volume(), estimator, region=0)


def _check_region(cfg, region):
    inner = cfg.inner_window
    if np.any(np.asarray(region.lo) < inner.lo) or np.any(np.asarray(region.hi) > inner.hi):
        raise ValueError("region must lie inside the inner window")


@dataclass(frozen=True, eq=False)
class SpecificAreaMeasure:
    histogram: NormalHistogram
    stderr: np.ndarray
    total: SpecificEstimate

    @property
    def density(self):
        return self.histogram.masses


def area_measure_density(records, volume, dim, n_bins):
    masses = np.array([r.histogram for r in records]) / volume
    n = len(records)
    se = masses.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(n_bins)
    nb = _band_count(n_bins) if dim == 3 else 1
    mean = masses.mean(axis=0)
    hist = NormalHistogram(dim, mean, float(mean.sum()), nb)
    return SpecificAreaMeasure(hist, se, _density(masses.sum(axis=1), 1.0, "mollified"))


def specific_area_measure_estimate(cfg, spacing, reps, n_bins, rho=None):
    """Mean normal histogram of the boundary inside the inner window, per unit volume."""
    if reps < 2:
        raise ValueError("reps must be at least 2")
    recs = run_replications(cfg, spacing, reps, rho=rho, n_bins=n_bins)
    return area_measure_density(recs, cfg.inner_window.volume(), cfg.dim, n_bins)


@dataclass(frozen=True)
class StereologyReport:
    """Section estimate versus direct estimate of the specific perimeter."""

    direct: SpecificEstimate
    sections: SpecificEstimate
    constant: float
    convention: str
    ratio: float
    ratio_stderr: float

    @property
    def ci(self):
        return (self.ratio - 1.96 * self.ratio_stderr, self.ratio + 1.96 * self.ratio_stderr)

    def ratio_within(self, target=1.0, k=3.0):
        return abs(self.ratio - target) <= k * self.ratio_stderr

    def to_dict(self):
        return {"direct": self.direct.to_dict(), "sections": self.sections.to_dict(),
                "constant": self.constant, "convention": self.convention,
                "ratio": self.ratio, "ratio_stderr": self.ratio_stderr, "ci": list(self.ci)}


def stereology_report(records, volume, d, j, convention):
    convention = CroftonConvention(convention)
    c = crofton_constant(convention, d, j)
    direct = np.array([r.perimeter for r in records]) / volume
    sect = np.array([r.section for r in records]) * c / volume
    ratio = float(sect.mean() / direct.mean()) if direct.mean() > 0 else float("nan")
    n = len(records)
    # delta method for a ratio of means
    resid = sect - ratio * direct
    se = float(resid.std(ddof=1) / math.sqrt(n) / direct.mean()) if n > 1 else 0.0
    return StereologyReport(_density(direct * volume, volume, "mollified"),
                            _density(sect * volume, volume, "sections"),
                            c, convention.value, ratio, se)


def stereology_experiment(cfg, j, n_flats, reps, convention=CroftonConvention.SELF_CONSISTENT,
                          spacing=1 / 256, rho=None):
    """Compare flat-section and direct estimates of the specific perimeter."""
    d = cfg.dim
    if not (d == 2 and j == 1) and not (d == 3 and j in (1, 2)):
        raise ValueError("stereology needs d = 2, j = 1 or d = 3, j in {1, 2}")
    if reps < 2:
        raise ValueError("reps must be at least 2")
    recs = run_replications(cfg, spacing, reps, rho=rho, j=j, n_flats=n_flats)
    return stereology_report(recs, cfg.inner_window.volume(), d, j, convention)


@dataclass(frozen=True, eq=False)
class BooleanRun:
    """All per-replication results of one combined run."""

    cfg: FpProcessConfig
    records: list = field(default_factory=list)
    j: int | None = None
    n_bins: int | None = None

    @property
    def volume(self):
        return self.cfg.inner_window.volume()

    def perimeter(self):
        return perimeter_density(self.records, self.volume, "mollified")

    def area_measure(self):
        return area_measure_density(self.records, self.volume, self.cfg.dim, self.n_bins)

    def stereology(self, convention=CroftonConvention.SELF_CONSISTENT):
        return stereology_report(self.records, self.volume, self.cfg.dim, self.j, convention)


def boolean_run(cfg, spacing, reps, n_bins=16, j=1, n_flats=1000, rho=None):
    """Direct estimate, normal histogram and sections from the same realizations."""
    recs = run_replications(cfg, spacing, reps, rho=rho, n_bins=n_bins, j=j, n_flats=n_flats)
    return BooleanRun(cfg, recs, j, n_bins)
