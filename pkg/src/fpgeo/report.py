from dataclasses import asdict, dataclass, field
import math

import numpy as np


@dataclass(frozen=True)
class EstimateReport:
    """A Monte-Carlo (or deterministic) estimate with its provenance."""

    value: float
    stderr: float
    n: int
    seed: int | None
    method: str
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def within(self, target, k=3.0):
        return abs(self.value - target) <= k * self.stderr


def mean_and_se(values):
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return 0.0, 0.0
    m = float(v.mean())
    if n == 1:
        return m, 0.0
    return m, float(v.std(ddof=1) / math.sqrt(n))


class RunningMoments:
    """Chunk-wise accumulation of sum and sum of squares (fixed order)."""

    def __init__(self):
        self.n = 0
        self.s = 0.0
        self.ss = 0.0

    def add(self, values):
        v = np.asarray(values, dtype=float)
        self.n += v.size
        self.s += float(v.sum())
        self.ss += float((v * v).sum())

    @property
    def mean(self):
        return self.s / self.n if self.n else 0.0

    @property
    def stderr(self):
        if self.n < 2:
            return 0.0
        var = (self.ss - self.n * self.mean**2) / (self.n - 1)
        return math.sqrt(max(var, 0.0) / self.n)
