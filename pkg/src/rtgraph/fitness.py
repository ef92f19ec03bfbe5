"""Fitness distributions, their intensity maps and threshold scalings.

A model bundles five evaluators: cdf, tail (1 - cdf), quantile, intensity
and scaling. The two built-in families have closed forms; ``CustomFitness``
takes user callables. All evaluators accept numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInput, UnsupportedOperation


class FitnessModel:
    """Base class; subclasses override at least cdf/tail/quantile/intensity/scaling."""

    family = "abstract"
    #: smallest n beyond which n * tail(theta_n - x) should settle monotonically
    assumption_n0 = 2

    def cdf(self, x):
        raise NotImplementedError

    def tail(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def intensity(self, x):
        raise NotImplementedError

    def scaling(self, n):
        raise NotImplementedError

    # log-domain helpers; families override these with stable closed forms
    def log_tail(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.tail(x))

    def log_cdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(x))

    def tail_quantile(self, w):
        """Fitness value whose tail probability is ``w`` (quantile of 1 - w)."""
        return self.quantile(1.0 - np.asarray(w, dtype=float))

    def intensity_at_tail(self, w):
        """lambda(xi) for the fitness with tail probability ``w``."""
        return self.intensity(self.tail_quantile(w))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return sample_fitness(self, rng, count)

    def to_config(self) -> dict:
        return {"fitness.family": self.family}


@dataclass(frozen=True)
class ExponentialFitness(FitnessModel):
    """P(xi > x) = exp(-rate * x+); intensity exp(rate * x); theta_n = log(n) / rate."""

    rate: float = 1.0
    family = "exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise InvalidInput(f"exponential rate must be positive, got {self.rate!r}")

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-self.rate * x)

    def tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.exp(-self.rate * x)

    def log_tail(self, x):
        return -self.rate * np.maximum(np.asarray(x, dtype=float), 0.0)

    def log_cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, np.log(-np.expm1(-self.rate * np.maximum(x, 0.0))), -np.inf)

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def tail_quantile(self, w):
        return -np.log(np.asarray(w, dtype=float)) / self.rate

    def intensity(self, x):
        return np.exp(self.rate * np.asarray(x, dtype=float))

    def intensity_at_tail(self, w):
        return 1.0 / np.asarray(w, dtype=float)

    def scaling(self, n):
        return np.log(np.asarray(n, dtype=float)) / self.rate

    def to_config(self) -> dict:
        return {"fitness.family": self.family, "fitness.rate": self.rate}


@dataclass(frozen=True)
class ParetoFitness(FitnessModel):
    """P(xi > x) = (scale / (scale + x+)) ** shape; intensity 1; theta_n = scale * n**(1/shape)."""

    scale: float = 1.0
    shape: float = 1.0
    family = "pareto"

    def __post_init__(self):
        for name in ("scale", "shape"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidInput(f"pareto {name} must be positive, got {v!r}")

    def log_tail(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -self.shape * np.log1p(x / self.scale)

    def tail(self, x):
        return np.exp(self.log_tail(x))

    def cdf(self, x):
        return -np.expm1(self.log_tail(x))

    def log_cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, np.log(-np.expm1(self.log_tail(x))), -np.inf)

    def quantile(self, u):
        return self.tail_quantile(1.0 - np.asarray(u, dtype=float))

    def tail_quantile(self, w):
        w = np.asarray(w, dtype=float)
        return self.scale * np.expm1(-np.log(w) / self.shape)

    def intensity(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def intensity_at_tail(self, w):
        return np.ones_like(np.asarray(w, dtype=float))

    def scaling(self, n):
        return self.scale * np.asarray(n, dtype=float) ** (1.0 / self.shape)

    def to_config(self) -> dict:
        return {"fitness.family": self.family, "fitness.scale": self.scale,
                "fitness.shape": self.shape}


@dataclass(frozen=True, eq=False)
class CustomFitness(FitnessModel):
    """User-supplied evaluators.

    All five must be given; ``quantile`` may be ``None``, in which case
    sampling and every quadrature routine raise UnsupportedOperation.
    ``tail_quantile_fn`` is an optional, more accurate inverse of the tail
    near zero. Evaluators must be numpy-vectorised.
    """

    cdf_fn: Callable
    tail_fn: Callable
    quantile_fn: Callable | None
    intensity_fn: Callable
    scaling_fn: Callable
    tail_quantile_fn: Callable | None = None
    name: str = "custom"
    n0: int = 2
    family = "custom"

    def __post_init__(self):
        missing = [k for k in ("cdf_fn", "tail_fn", "intensity_fn", "scaling_fn")
                   if getattr(self, k) is None]
        if missing:
            raise InvalidInput(f"custom fitness model missing evaluators: {', '.join(missing)}")

    @property
    def assumption_n0(self):
        return self.n0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 0.0, np.asarray(self.cdf_fn(np.maximum(x, 0.0)), dtype=float))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 1.0, np.asarray(self.tail_fn(np.maximum(x, 0.0)), dtype=float))

    def quantile(self, u):
        if self.quantile_fn is None:
            raise UnsupportedOperation(f"model {self.name!r} has no quantile evaluator")
        return np.asarray(self.quantile_fn(np.asarray(u, dtype=float)), dtype=float)

    def tail_quantile(self, w):
        if self.tail_quantile_fn is not None:
            return np.asarray(self.tail_quantile_fn(np.asarray(w, dtype=float)), dtype=float)
        return self.quantile(1.0 - np.asarray(w, dtype=float))

    def intensity(self, x):
        return np.asarray(self.intensity_fn(np.asarray(x, dtype=float)), dtype=float)

    def scaling(self, n):
        return np.asarray(self.scaling_fn(np.asarray(n, dtype=float)), dtype=float)

    def to_config(self) -> dict:
        return {"fitness.family": self.family, "fitness.name": self.name}


def constant_intensity_model(c: float, shape: float = 2.0, scale: float = 1.0) -> CustomFitness:
    """Pareto fitness with threshold scale * (n / c) ** (1/shape), so lambda == c.

    n * tail(theta_n - x) -> c for every x >= 0, giving the constant-intensity
    regime in which all limiting degrees coincide.
    """
    if not c > 0:
        raise InvalidInput(f"intensity level must be positive, got {c!r}")
    base = ParetoFitness(scale=scale, shape=shape)
    return CustomFitness(
        cdf_fn=base.cdf,
        tail_fn=base.tail,
        quantile_fn=base.quantile,
        intensity_fn=lambda x: np.full_like(np.asarray(x, dtype=float), float(c)),
        scaling_fn=lambda n: scale * (np.asarray(n, dtype=float) / c) ** (1.0 / shape),
        tail_quantile_fn=base.tail_quantile,
        name=f"constant-intensity(c={c:g})",
    )


# -- operations ---------------------------------------------------------------

def eval_cdf(model: FitnessModel, x) -> float | np.ndarray:
    out = model.cdf(x)
    return float(out) if np.ndim(out) == 0 else out


def sample_fitness(model: FitnessModel, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` i.i.d. fitness values by inverse-cdf transform of rng.random()."""
    if int(count) != count or count < 1:
        raise InvalidInput(f"count must be a positive integer, got {count!r}")
    u = rng.random(int(count))
    return model.quantile(u)


def scaling_threshold(model: FitnessModel, n: int) -> float:
    if n < 1:
        raise InvalidInput(f"n must be >= 1, got {n!r}")
    return float(model.scaling(n))


def intensity(model: FitnessModel, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InvalidInput("intensity is defined on x >= 0 only")
    out = model.intensity(x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class AssumptionReport:
    """n * tail(theta_n - x) tabulated against lambda(x)."""

    x_grid: np.ndarray
    n_grid: np.ndarray
    values: np.ndarray          # shape (len(n_grid), len(x_grid))
    limits: np.ndarray          # lambda(x), shape (len(x_grid),)
    residuals: np.ndarray       # |values - limits|
    max_residual: np.ndarray    # per n
    n0: int
    monotone_beyond_n0: bool
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.n_grid)


def check_assumption_A(model: FitnessModel, x_grid, n_grid) -> AssumptionReport:
    """Tabulate n * (1 - F(theta_n - x)) and its distance to lambda(x).

    The report is evidence, not a proof: ``monotone_beyond_n0`` says whether
    the per-n maximum residual is non-increasing over the n >= n0 part of
    the grid.
    """
    x = np.asarray(x_grid, dtype=float).ravel()
    ns = np.asarray(n_grid).ravel()
    if x.size == 0 or ns.size == 0:
        raise InvalidInput("x_grid and n_grid must be non-empty")
    if np.any(x < 0):
        raise InvalidInput("x_grid must be non-negative")
    if np.any(ns < 2):
        raise InvalidInput("n_grid entries must be >= 2")
    theta = np.asarray(model.scaling(ns.astype(float)), dtype=float)
    values = ns[:, None].astype(float) * model.tail(theta[:, None] - x[None, :])
    limits = np.asarray(model.intensity(x), dtype=float)
    residuals = np.abs(values - limits[None, :])
    max_res = residuals.max(axis=1)
    n0 = int(model.assumption_n0)
    order = np.argsort(ns, kind="stable")
    tail_part = max_res[order][ns[order] >= n0]
    monotone = bool(np.all(np.diff(tail_part) <= 1e-12 * np.maximum(1.0, tail_part[:-1])))
    rows = [
        {"n": int(n), "x": float(xv), "value": float(values[i, j]),
         "intensity": float(limits[j]), "residual": float(residuals[i, j])}
        for i, n in enumerate(ns) for j, xv in enumerate(x)
    ]
    return AssumptionReport(x, ns, values, limits, residuals, max_res, n0, monotone, rows)


def model_from_config(cfg: dict) -> FitnessModel:
    family = cfg.get("fitness.family")
    if family == "exponential":
        return ExponentialFitness(rate=float(cfg.get("fitness.rate", 1.0)))
    if family == "pareto":
        return ParetoFitness(scale=float(cfg.get("fitness.scale", 1.0)),
                             shape=float(cfg.get("fitness.shape", 2.0)))
    raise InvalidInput(f"unknown fitness family {family!r}")
