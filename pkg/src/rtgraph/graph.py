"""Threshold-graph realisations: degrees, censuses and edge streams.

Nodes k != l are adjacent iff fitness[k] + fitness[l] > theta. No adjacency
matrix is ever built by the fast paths; everything runs off one sorted copy
of the fitness vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import InvalidInput
from .fitness import FitnessModel, sample_fitness


def _as_fitness(fitness) -> np.ndarray:
    f = np.asarray(fitness, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise InvalidInput(f"need a 1-d fitness vector of length >= 2, got shape {f.shape}")
    return f


def _partition_points(sorted_f: np.ndarray, f: np.ndarray, theta: float) -> np.ndarray:
    """For each f[k], the first sorted index l with f[k] + sorted_f[l] > theta.

    searchsorted on theta - f[k] is exact up to rounding of the subtraction;
    the loop below nudges each point until it agrees with the sum predicate
    itself, which is monotone in sorted_f. Floating equality is a non-edge.
    """
    n = sorted_f.size
    p = np.searchsorted(sorted_f, theta - f, side="right")
    while True:
        # too far right: the element just left of p already satisfies the predicate
        left = p > 0
        move_left = left.copy()
        move_left[left] = f[left] + sorted_f[p[left] - 1] > theta
        # too far left: the element at p fails the predicate
        inside = p < n
        move_right = inside.copy()
        move_right[inside] = ~(f[inside] + sorted_f[p[inside]] > theta)
        if not (move_left.any() or move_right.any()):
            return p
        p = p - move_left + move_right


def degree_sequence_fast(fitness, theta: float) -> np.ndarray:
    """Exact degrees in O(n log n) from one sort and a binary search per node."""
    f = _as_fitness(fitness)
    s = np.sort(f)
    p = _partition_points(s, f, theta)
    return (f.size - p) - (f + f > theta)


def degree_sequence_naive(fitness, theta: float) -> np.ndarray:
    """O(n^2) reference: sum of 1{f_k + f_l > theta} over l != k."""
    f = _as_fitness(fitness)
    adj = f[:, None] + f[None, :] > theta
    np.fill_diagonal(adj, False)
    return adj.sum(axis=1)


def degree_sequences_batch(fitness, theta: float) -> np.ndarray:
    """Naive degrees for a stack of small graphs, shape (graphs, n)."""
    f = np.asarray(fitness, dtype=float)
    if f.ndim != 2 or f.shape[1] < 2:
        raise InvalidInput(f"need a (graphs, n>=2) fitness array, got shape {f.shape}")
    adj = f[:, :, None] + f[:, None, :] > theta
    idx = np.arange(f.shape[1])
    adj[:, idx, idx] = False
    return adj.sum(axis=2)


@dataclass
class DegreeCensus:
    n: int
    theta: float
    counts: dict
    fractions: dict

    def fraction(self, d: int) -> float:
        return self.fractions.get(d, 0.0)

    def count(self, d: int) -> int:
        return self.counts.get(d, 0)


def degree_census(degrees, theta: float = float("nan")) -> DegreeCensus:
    deg = np.asarray(degrees)
    if deg.ndim != 1 or deg.size == 0:
        raise InvalidInput("degree vector must be 1-d and non-empty")
    if np.any(deg < 0) or not np.issubdtype(deg.dtype, np.integer):
        raise InvalidInput("degrees must be non-negative integers")
    n = int(deg.size)
    bins = np.bincount(deg)
    nz = np.flatnonzero(bins)
    counts = {int(d): int(bins[d]) for d in nz}
    fractions = {d: c / n for d, c in counts.items()}
    return DegreeCensus(n=n, theta=float(theta), counts=counts, fractions=fractions)


def edge_stream(fitness, theta: float) -> Iterator[tuple[int, int]]:
    """Yield every edge (k, l), k < l, in lexicographic order.

    Memory is O(n): per node only the suffix of the sorted order above its
    partition point is materialised.
    """
    f = _as_fitness(fitness)
    order = np.argsort(f, kind="stable")
    s = f[order]
    p = _partition_points(s, f, theta)
    for k in range(f.size):
        nbrs = order[p[k]:]
        nbrs = np.sort(nbrs[nbrs > k])
        for l in nbrs:
            yield k, int(l)


@dataclass
class GraphRun:
    n: int
    theta: float
    fitness: np.ndarray
    degrees: np.ndarray = field(repr=False)

    def census(self) -> DegreeCensus:
        return degree_census(self.degrees, self.theta)

    def edges(self) -> Iterator[tuple[int, int]]:
        return edge_stream(self.fitness, self.theta)


def generate_graph(model: FitnessModel, n: int, rng: np.random.Generator,
                   theta: float | None = None) -> GraphRun:
    """One realisation of T(n; theta); theta defaults to the model's scaling."""
    if int(n) != n or n < 2:
        raise InvalidInput(f"graphs need n >= 2, got {n!r}")
    n = int(n)
    if theta is None:
        theta = float(model.scaling(n))
    f = sample_fitness(model, rng, n)
    return GraphRun(n=n, theta=float(theta), fitness=f, degrees=degree_sequence_fast(f, theta))
