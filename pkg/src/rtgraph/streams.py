"""Counter-based random streams and order-independent Monte Carlo blocks.

Stream ``i`` under master seed ``s`` is Philox keyed by
SeedSequence(s, spawn_key=(i,)), so any block or replication can be
regenerated on its own and the merge order never depends on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

DEFAULT_BLOCK = 1 << 16


def stream(master_seed: int, index: int, *extra: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index), *map(int, extra)))
    return np.random.Generator(np.random.Philox(ss))


def map_indexed(fn, count: int, threads: int = 1) -> list:
    """[fn(0), ..., fn(count-1)] evaluated on ``threads`` workers, in index order."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


@dataclass(frozen=True)
class MCEstimate:
    value: float
    se: float
    samples: int

    def __iter__(self):
        yield self.value
        yield self.se


def block_sizes(total: int, block: int = DEFAULT_BLOCK) -> list[int]:
    full, rest = divmod(int(total), int(block))
    return [block] * full + ([rest] if rest else [])


def mc_mean(sample_fn, total: int, seed: int, *, block: int = DEFAULT_BLOCK,
            threads: int = 1, stream_tag: int = 0) -> np.ndarray:
    """Blocked Monte Carlo means.

    ``sample_fn(rng, size)`` returns an array of shape (size, k) (or (size,))
    of per-draw values. Returns an array of shape (k, 3) holding
    (mean, standard error, samples) per column; the result depends only on
    (seed, total, block), never on ``threads``.
    """
    if total < 2:
        raise ValueError("Monte Carlo needs at least two samples")
    sizes = block_sizes(total, block)

    def run(i):
        vals = np.asarray(sample_fn(stream(seed, stream_tag, i), sizes[i]), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        return vals.sum(axis=0), (vals * vals).sum(axis=0)

    parts = map_indexed(run, len(sizes), threads)
    s = np.zeros_like(parts[0][0])
    ss = np.zeros_like(parts[0][1])
    for a, b in parts:
        s += a
        ss += b
    m = s / total
    var = np.maximum(ss / total - m * m, 0.0) * total / (total - 1)
    se = np.sqrt(var / total)
    return np.stack([m, se, np.full_like(m, total)], axis=1)
