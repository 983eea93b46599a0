"""Counter-based random streams.

Every Monte-Carlo loop draws stream ``(seed, k)`` for its k-th chunk or
replication, so results do not depend on how work is scheduled.
"""
import os

import numpy as np

#: samples per independent stream in vectorized Monte-Carlo loops
CHUNK = 4096


def stream(seed, *key):
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def chunks(n, size=CHUNK):
    """Yield ``(index, count)`` pairs covering ``n`` samples."""
    for c, start in enumerate(range(0, n, size)):
        yield c, min(size, n - start)


def max_workers():
    raw = os.environ.get("FPGEO_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_ordered(fn, items):
    """Map ``fn`` over ``items`` with up to FPGEO_THREADS threads.

    Results come back in input order, so aggregation is schedule-free.
    """
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def derive_seed(seed, *key):
    """Integer seed for a sub-experiment; streams (derived, k) stay disjoint."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, np.uint64)[0] >> np.uint64(1))
