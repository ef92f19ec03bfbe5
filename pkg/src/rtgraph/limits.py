"""Single-node degree laws: finite-n Binomial mixture and its Poisson-mixture limit.

Every integral over the fitness law is taken in the tail-probability variable
w = 1 - F(xi), which is uniform on (0, 1). For exponential fitness this is
the t = e^{-x} substitution and turns intensity into 1/w. Panels are spaced
geometrically towards w = 0 where the heavy-intensity mass lives.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import InvalidInput
from .fitness import FitnessModel
from .quadrature import geometric_breakpoints, integrate

QUAD_TOL = 1e-10
REPORT_TOL = 1e-8


@dataclass
class NodalPmf:
    """Tabulated nodal pmf with per-entry quadrature error."""

    source: str                 # "finite-n" or "limit"
    model: FitnessModel
    values: dict
    errors: dict
    n: int | None = None
    theta: float | None = None
    meta: dict = field(default_factory=dict)


def _check_d(d, upper=None):
    if int(d) != d or d < 0:
        raise InvalidInput(f"degree must be a non-negative integer, got {d!r}")
    if upper is not None and d > upper:
        raise InvalidInput(f"degree {d} outside 0..{upper}")
    return int(d)


def poisson_log_pmf(d: int, lam):
    return xlogy(d, lam) - lam - gammaln(d + 1)


def binomial_log_pmf(d: int, trials: int, log_p, log_q):
    """log C(trials, d) p^d q^(trials-d) with p, q given as logs (may be -inf)."""
    log_p = np.asarray(log_p, dtype=float)
    log_q = np.asarray(log_q, dtype=float)
    with np.errstate(invalid="ignore"):
        a = np.where(d == 0, 0.0, d * log_p)
        b = np.where(trials - d == 0, 0.0, (trials - d) * log_q)
    return gammaln(trials + 1) - gammaln(d + 1) - gammaln(trials - d + 1) + a + b


def _fitness_breakpoints(model: FitnessModel, w_lo: float) -> np.ndarray:
    return geometric_breakpoints(w_lo, 1.0)


def _finite_n_integrand(model: FitnessModel, n: int, theta: float, d: int):
    def f(w):
        x = model.tail_quantile(w)
        y = theta - x
        return np.exp(binomial_log_pmf(d, n - 1, model.log_tail(y), model.log_cdf(y)))
    return f


def finite_n_nodal_pmf_with_error(model: FitnessModel, n: int, theta: float, d: int,
                                  tol: float = QUAD_TOL) -> tuple[float, float]:
    if int(n) != n or n < 2:
        raise InvalidInput(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    d = _check_d(d, n - 1)
    w_theta = float(model.tail(theta))       # P(xi > theta)
    atom = w_theta if d == n - 1 else 0.0
    if w_theta >= 1.0:
        return atom, 0.0
    res = integrate(_finite_n_integrand(model, n, theta, d),
                    _fitness_breakpoints(model, w_theta), tol, fail_tol=REPORT_TOL)
    return atom + res.value, res.error


def finite_n_nodal_pmf(model: FitnessModel, n: int, theta: float, d: int) -> float:
    """P(D_n(theta) = d) = E[Bin(n-1, 1 - F(theta - xi)) = d]."""
    return finite_n_nodal_pmf_with_error(model, n, theta, d)[0]


def finite_n_nodal_pgf(model: FitnessModel, n: int, theta: float, z: float) -> float:
    """E[z^{D_n(theta)}], split into the xi > theta atom and the xi <= theta integral."""
    if not 0.0 <= z <= 1.0:
        raise InvalidInput(f"z must lie in [0, 1], got {z!r}")
    if int(n) != n or n < 2:
        raise InvalidInput(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    w_theta = float(model.tail(theta))
    atom = (z ** (n - 1)) * w_theta
    if w_theta >= 1.0:
        return atom

    def f(w):
        p = model.tail(theta - model.tail_quantile(w))
        with np.errstate(divide="ignore"):
            return np.exp((n - 1) * np.log1p(-(1.0 - z) * p))

    res = integrate(f, _fitness_breakpoints(model, w_theta), QUAD_TOL, fail_tol=REPORT_TOL)
    return atom + res.value


# The lock keeps lru_cache bookkeeping consistent when worker threads race;
# values are deterministic so a cache hit never changes a result.
_cache_lock = threading.Lock()


@lru_cache(maxsize=4096)
def _limit_pmf_cached(model: FitnessModel, d: int) -> tuple[float, float]:
    def f(w):
        return np.exp(poisson_log_pmf(d, model.intensity_at_tail(w)))
    res = integrate(f, _fitness_breakpoints(model, 0.0), QUAD_TOL, fail_tol=REPORT_TOL)
    return res.value, res.error


def limit_nodal_pmf_with_error(model: FitnessModel, d: int) -> tuple[float, float]:
    d = _check_d(d)
    try:
        hash(model)
    except TypeError:
        return _limit_pmf_cached.__wrapped__(model, d)
    with _cache_lock:
        return _limit_pmf_cached(model, d)


def limit_nodal_pmf(model: FitnessModel, d: int) -> float:
    """P(D = d) = E[lambda(xi)^d / d! * exp(-lambda(xi))]."""
    return limit_nodal_pmf_with_error(model, d)[0]


def nodal_pmf_table(model: FitnessModel, d_max: int, n: int | None = None,
                    theta: float | None = None) -> NodalPmf:
    values, errors = {}, {}
    if n is None:
        for d in range(d_max + 1):
            values[d], errors[d] = limit_nodal_pmf_with_error(model, d)
        return NodalPmf("limit", model, values, errors)
    if theta is None:
        theta = float(model.scaling(n))
    for d in range(min(d_max, n - 1) + 1):
        values[d], errors[d] = finite_n_nodal_pmf_with_error(model, n, theta, d)
    return NodalPmf("finite-n", model, values, errors, n=n, theta=theta)


def fujihara_pmf_with_error(d: int) -> tuple[float, float]:
    d = _check_d(d)
    log_norm = -math.lgamma(d + 1)

    # (1/d!) * integral_1^inf t^(d-2) e^(-t) dt; t = 1 + v/(1-v) maps v in (0, 1)
    # onto [1, inf) with dt = dv / (1-v)^2. Deliberately not the w-variable
    # route of limit_nodal_pmf so the two can check each other.
    def f(v):
        t = 1.0 + v / (1.0 - v)
        return np.exp((d - 2) * np.log(t) - t - 2.0 * np.log1p(-v) + log_norm)

    res = integrate(f, np.linspace(0.0, 1.0, 41), QUAD_TOL, fail_tol=REPORT_TOL)
    return res.value, res.error


def fujihara_pmf(d: int) -> float:
    """Limiting nodal pmf for exponential fitness, independent of the rate."""
    return fujihara_pmf_with_error(d)[0]


def fujihara_approx(d: int) -> tuple[float, float]:
    """(1 / (d (d-1)), 1 / d!): power-law approximation and its error bound, d >= 2."""
    d = _check_d(d)
    if d < 2:
        raise InvalidInput(f"the 1/(d(d-1)) approximation needs d >= 2, got {d}")
    return 1.0 / (d * (d - 1)), 1.0 / math.factorial(d)
