"""Replicated threshold-graph experiments and the statistics read off them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NumericalFailure, ResourceRefused
from .fitness import FitnessModel
from .graph import degree_sequence_fast, degree_sequences_batch
from .streams import block_sizes, map_indexed, stream

# Calibration of the qualitative stability claims; each is a tunable default.
KS_STABILITY_GATE = 0.25
IQR_WIDTH_FACTOR = 5.0
SPREAD_SE_FACTOR = 10.0
STD_RETENTION = 0.5
HISTOGRAM_BINS = 50

MAX_NODES = 50_000_000
MAX_NODE_DRAWS = 20_000_000_000
MAX_INFLIGHT_BYTES = 4 << 30


@dataclass
class ReplicationMatrix:
    model: FitnessModel
    n: int
    R: int
    d_values: tuple
    master_seed: int
    theta: float
    values: np.ndarray            # shape (R, len(d_values))
    census_totals: np.ndarray     # per run, sum of the full census (== n)

    def column(self, d: int) -> np.ndarray:
        try:
            j = self.d_values.index(d)
        except ValueError:
            raise InvalidInput(f"degree {d} not in replication set {self.d_values}") from None
        return self.values[:, j]


def _check_resources(n: int, R: int, threads: int):
    if n > MAX_NODES:
        raise ResourceRefused(f"n={n} exceeds the per-graph cap {MAX_NODES}; "
                              "reduce run.n or raise experiments.MAX_NODES")
    if n * R > MAX_NODE_DRAWS:
        raise ResourceRefused(f"n*R={n * R} exceeds {MAX_NODE_DRAWS}; reduce run.R or run.n")
    # fitness, sorted copy, partition points and degrees per in-flight run
    if 32 * n * max(threads, 1) > MAX_INFLIGHT_BYTES:
        raise ResourceRefused(f"{threads} concurrent runs at n={n} need more than "
                              f"{MAX_INFLIGHT_BYTES >> 20} MiB; lower --threads")


def replicate_census(model: FitnessModel, n: int, master_seed: int, run: int,
                     theta: float | None = None, substream: int | None = None) -> np.ndarray:
    """Full degree counts (bincount) of run ``run``.

    The run's generator is keyed by (master_seed, run[, substream]) only, so
    any run can be regenerated alone.
    """
    if theta is None:
        theta = float(model.scaling(n))
    rng = stream(master_seed, run) if substream is None else stream(master_seed, run, substream)
    f = model.sample(rng, n)
    return np.bincount(degree_sequence_fast(f, theta), minlength=1)


def run_replications(model: FitnessModel, n: int, R: int, d_set, master_seed: int,
                     threads: int = 1, substream: int | None = None) -> ReplicationMatrix:
    """R independent graphs at theta = scaling(n); fractions for each d in d_set."""
    if int(n) != n or n < 2:
        raise InvalidInput(f"n must be an integer >= 2, got {n!r}")
    if int(R) != R or R < 1:
        raise InvalidInput(f"R must be a positive integer, got {R!r}")
    d_values = tuple(sorted({int(d) for d in d_set}))
    if not d_values or d_values[0] < 0:
        raise InvalidInput("d_set must be a non-empty set of non-negative integers")
    n, R = int(n), int(R)
    _check_resources(n, R, threads)
    theta = float(model.scaling(n))
    idx = np.array(d_values)

    def one(run):
        counts = replicate_census(model, n, master_seed, run, theta, substream)
        padded = np.zeros(max(idx.max() + 1, counts.size), dtype=np.int64)
        padded[:counts.size] = counts
        return padded[idx] / n, int(counts.sum())

    out = map_indexed(one, R, threads)
    values = np.array([o[0] for o in out]).reshape(R, len(d_values))
    totals = np.array([o[1] for o in out])
    if np.any(totals != n):
        raise NumericalFailure("census does not partition the node set",
                               diagnostics={"bad_runs": np.flatnonzero(totals != n).tolist()})
    return ReplicationMatrix(model, n, R, d_values, int(master_seed), theta, values, totals)


@dataclass
class Histogram:
    d: int
    n: int
    R: int
    samples: np.ndarray          # sorted

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.samples, x, side="right") / self.R
        return float(out) if out.ndim == 0 else out

    cdf = __call__

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))

    def binned(self, bins: int = HISTOGRAM_BINS):
        """(edges, masses) of ``bins`` equal bins on [0, 1.1 * max]."""
        top = float(self.samples[-1])
        hi = 1.1 * top if top > 0 else 1.0
        counts, edges = np.histogram(self.samples, bins=bins, range=(0.0, hi))
        return edges, counts / self.R


def empirical_histogram(matrix: ReplicationMatrix, d: int) -> Histogram:
    return Histogram(int(d), matrix.n, matrix.R, np.sort(matrix.column(d)))


def ks_distance(h1: Histogram, h2: Histogram) -> float:
    """sup_x |H1(x) - H2(x)|, attained at one of the merged jump points."""
    if h1.d != h2.d:
        raise InvalidInput(f"histograms are for different degrees ({h1.d} vs {h2.d})")
    jumps = np.union1d(h1.samples, h2.samples)
    return float(np.max(np.abs(h1(jumps) - h2(jumps))))


def run_averaged_pmf(matrix: ReplicationMatrix) -> dict:
    means = matrix.values.mean(axis=0)
    return {d: float(m) for d, m in zip(matrix.d_values, means)}


def column_stats(matrix: ReplicationMatrix, d: int) -> dict:
    col = matrix.column(d)
    R = col.size
    mean = float(col.mean())
    std = float(col.std(ddof=1)) if R > 1 else None
    return {"mean": mean, "std": std, "se": (std / math.sqrt(R)) if std is not None else None,
            "second_moment": float(np.mean(col * col)),
            "second_moment_se": (float(np.std(col * col, ddof=1) / math.sqrt(R))
                                 if R > 1 else None)}


def spread_diagnostics(matrix: ReplicationMatrix, d: int, reference: float) -> dict:
    """How far individual runs sit from ``reference`` compared with sampling noise.

    ``iqr_ok``: the interquartile range of P_n(d) exceeds IQR_WIDTH_FACTOR
    binomial widths sqrt(p (1 - p) / n). ``far_fraction``: share of runs
    deviating from ``reference`` by more than SPREAD_SE_FACTOR standard
    errors of the run average.
    """
    col = matrix.column(d)
    p = float(reference)
    width = math.sqrt(max(p * (1.0 - p), 0.0) / matrix.n)
    q25, q75 = np.quantile(col, [0.25, 0.75])
    iqr = float(q75 - q25)
    se = float(col.std(ddof=1) / math.sqrt(col.size)) if col.size > 1 else None
    far = (float(np.mean(np.abs(col - p) > SPREAD_SE_FACTOR * se))
           if se is not None else None)
    return {"d": int(d), "reference": p, "iqr": iqr, "binomial_width": width,
            "iqr_ok": bool(iqr > IQR_WIDTH_FACTOR * width), "average_se": se,
            "far_fraction": far, "far_majority": None if far is None else bool(far >= 0.5)}


# -- factorial-moment identity -----------------------------------------------------

@dataclass
class FactorialMomentCheck:
    n: int
    r: int
    d: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    samples: int
    complete: bool = True

    @property
    def combined_se(self) -> float:
        return math.hypot(self.lhs_se, self.rhs_se)

    @property
    def z_score(self) -> float:
        se = self.combined_se
        gap = abs(self.lhs - self.rhs)
        return gap / se if se > 0 else (0.0 if gap == 0 else math.inf)


def factorial_moment_check(model: FitnessModel, n: int, r: int, d: int, mc_budget: int,
                           seed: int, *, theta: float | None = None, block: int = 1 << 15,
                           max_graphs: int = 50_000_000, threads: int = 1) -> FactorialMomentCheck:
    """Monte Carlo of both sides of E[prod_s (P_n - s/n)] = (n)_r / n^r * P(D_1..D_r = d).

    Each side uses its own ``mc_budget`` independent graphs (streams tagged 1
    and 2), so the two estimates are independent and the combined SE is
    exact. The right side records only nodes 0..r-1 of every graph.
    """
    if not 1 <= r <= min(5, n):
        raise InvalidInput(f"need 1 <= r <= min(5, n), got r={r}, n={n}")
    if mc_budget < 2:
        raise InvalidInput("mc_budget must be at least 2")
    if theta is None:
        theta = float(model.scaling(n))
    budget = min(int(mc_budget), max_graphs)
    falling = math.prod(n - s for s in range(r)) / n ** r
    s_offsets = np.arange(r) / n

    def side(tag, reducer):
        sizes = block_sizes(budget, block)

        def run(i):
            rng = stream(seed, tag, i)
            f = model.sample(rng, sizes[i] * n).reshape(sizes[i], n)
            vals = reducer(degree_sequences_batch(f, theta))
            return vals.sum(), (vals * vals).sum()

        parts = map_indexed(run, len(sizes), threads)
        s = sum(p[0] for p in parts)
        ss = sum(p[1] for p in parts)
        m = s / budget
        var = max(ss / budget - m * m, 0.0) * budget / (budget - 1)
        return float(m), math.sqrt(var / budget)

    def lhs_values(deg):
        frac = (deg == d).sum(axis=1) / n
        return np.prod(frac[:, None] - s_offsets[None, :], axis=1)

    def rhs_values(deg):
        return falling * np.all(deg[:, :r] == d, axis=1)

    lhs, lhs_se = side(1, lhs_values)
    rhs, rhs_se = side(2, rhs_values)
    return FactorialMomentCheck(n, r, d, lhs, lhs_se, rhs, rhs_se, budget,
                                complete=budget == int(mc_budget))


# -- non-degeneracy ----------------------------------------------------------------

@dataclass
class NondegeneracyReport:
    n_grid: list
    d_values: list
    R: int
    seed: int
    stats: dict                  # (n, d) -> column_stats
    ks: dict                     # (n_prev, n_next, d) -> KS distance
    verdicts: dict               # d -> True / False / None (undefined)
    matrices: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "n_grid": self.n_grid, "d_values": self.d_values, "R": self.R, "seed": self.seed,
            "stats": [{"n": n, "d": d, **s} for (n, d), s in sorted(self.stats.items())],
            "ks": [{"n_from": a, "n_to": b, "d": d, "distance": v}
                   for (a, b, d), v in sorted(self.ks.items())],
            "verdicts": {str(d): ("non-degenerate" if v else
                                  "undefined" if v is None else "inconclusive")
                         for d, v in self.verdicts.items()},
        }


def nondegeneracy_report(model: FitnessModel, n_grid, R: int, d_set, seed: int,
                         threads: int = 1) -> NondegeneracyReport:
    """Per (n, d) spread of P_n(d) and KS drift between consecutive n.

    The verdict for d is "non-degenerate" when the sample std at the largest
    n is more than STD_RETENTION times the std at the smallest n. With R = 1
    stds are undefined and the verdict is None.
    """
    ns = sorted({int(n) for n in n_grid})
    if not ns:
        raise InvalidInput("n_grid must be non-empty")
    d_values = sorted({int(d) for d in d_set})
    # substream keyed by n: adding grid points never perturbs existing ones
    mats = {n: run_replications(model, n, R, d_values, seed, threads, substream=n)
            for n in ns}
    stats = {(n, d): column_stats(mats[n], d) for n in ns for d in d_values}
    ks = {}
    for a, b in zip(ns, ns[1:]):
        for d in d_values:
            ks[(a, b, d)] = ks_distance(empirical_histogram(mats[a], d),
                                        empirical_histogram(mats[b], d))
    verdicts = {}
    for d in d_values:
        lo, hi = stats[(ns[0], d)]["std"], stats[(ns[-1], d)]["std"]
        verdicts[d] = None if lo is None or hi is None else bool(hi > STD_RETENTION * lo)
    return NondegeneracyReport(ns, d_values, int(R), int(seed), stats, ks, verdicts, mats)
