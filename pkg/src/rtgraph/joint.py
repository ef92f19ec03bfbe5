"""Joint limit law of r tagged degrees and the moments of the limiting fraction.

Sampler construction used throughout: sort the r fitness values, let
Lam_u = lambda(xi_(u)) (Lam_0 = 0), draw independent N_u ~ Poisson(Lam_u -
Lam_{u-1}) and give the node of rank t the degree N_1 + ... + N_t. Abel
summation of sum_u (Lam_u - Lam_{u-1}) (1 - prod_{s>=u} z_(s)) turns its
conditional pgf into exp(-sum_t (1 - z_(t)) prod_{s>t} z_(s) Lam_t), the
integrand of G_r. All r degrees equal d forces N_1 = d and N_u = 0 beyond,
hence m_r(d) = E[lambda(min)^d / d! * exp(-lambda(max))].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import InvalidInput, NumericalFailure
from .fitness import FitnessModel
from .limits import QUAD_TOL, REPORT_TOL, finite_n_nodal_pmf, limit_nodal_pmf_with_error
from .quadrature import geometric_breakpoints, integrate
from .streams import MCEstimate, mc_mean

R_CAP = 40


def _as_z(z, r=None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1 or z.size < 1:
        raise InvalidInput("z must be a non-empty vector")
    if r is not None and z.size != r:
        raise InvalidInput(f"z has length {z.size}, expected {r}")
    return z


def _check_unit(z):
    if np.any((z < 0) | (z > 1)):
        raise InvalidInput("z entries must lie in [0, 1]")


# -- F_r and the finite-n joint pgf -------------------------------------------

def f_r_factor(model: FitnessModel, theta: float, z, x) -> float:
    """E[prod_s (1 - (1 - z_s) 1{x_s + xi > theta})] in closed form.

    Indices with x_s > theta always see an edge and contribute a bare z_s;
    the rest are sorted (stable, so ties break by index) and the expectation
    telescopes over the intervals between consecutive theta - x values.
    """
    z = _as_z(z)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != z.shape:
        raise InvalidInput(f"z and x dimensions differ: {z.shape} vs {x.shape}")
    above = x > theta
    prefactor = float(np.prod(z[above]))
    zr, xr = z[~above], x[~above]
    if xr.size == 0:
        return prefactor
    order = np.argsort(xr, kind="stable")
    zs, xs = zr[order], xr[order]
    k = xs.size
    # cdf at theta - x_(t) for t = 0..k+1 with x_(0) = -inf, x_(k+1) = +inf
    fv = np.empty(k + 2)
    fv[0], fv[-1] = 1.0, 0.0
    fv[1:-1] = model.cdf(theta - xs)
    # prod_{s=t+1}^{k} z_(s) for t = 0..k
    suffix = np.append(np.cumprod(zs[::-1])[::-1], 1.0)
    return prefactor * float(np.sum(suffix * (fv[:-1] - fv[1:])))


def f_r_complement_batch(model: FitnessModel, theta: float, z, x) -> np.ndarray:
    """1 - F_r for each row of ``x`` (shape (m, r)), computed from tails.

    Working with 1 - F directly keeps full relative precision when F is
    within 1/n of one. The telescoping form is valid whether or not some
    x_s exceed theta, since then 1 - F(theta - x_s) = 1.
    """
    z = _as_z(z)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != z.size:
        raise InvalidInput(f"x must have shape (m, {z.size}), got {x.shape}")
    order = np.argsort(x, axis=1, kind="stable")
    xs = np.take_along_axis(x, order, axis=1)
    zs = z[order]
    tails = model.tail(theta - xs)
    steps = np.diff(tails, axis=1, prepend=0.0)
    suffix = np.cumprod(zs[:, ::-1], axis=1)[:, ::-1]     # prod_{s>=t} z_(s)
    return np.sum((1.0 - suffix) * steps, axis=1)


def f_r_factor_batch(model: FitnessModel, theta: float, z, x) -> np.ndarray:
    return 1.0 - f_r_complement_batch(model, theta, z, x)


def finite_n_joint_pgf(model: FitnessModel, n: int, theta: float, z, *,
                       samples: int = 1_000_000, seed: int = 0,
                       threads: int = 1) -> MCEstimate:
    """Monte Carlo of E[F_r(theta; z; xi_1..xi_r)^(n-r)].

    This is the joint pgf of the degrees of nodes 1..r counted only towards
    nodes r+1..n.
    """
    z = _as_z(z)
    _check_unit(z)
    r = z.size
    if r >= n:
        raise InvalidInput(f"need r < n, got r={r}, n={n}")
    if np.all(z == 1.0):
        return MCEstimate(1.0, 0.0, samples)

    def draw(rng, size):
        x = model.sample(rng, size * r).reshape(size, r)
        lam = f_r_complement_batch(model, theta, z, x)
        with np.errstate(divide="ignore"):
            return np.exp((n - r) * np.log1p(-lam))

    m, se, cnt = mc_mean(draw, samples, seed, threads=threads)[0]
    return MCEstimate(float(m), float(se), int(cnt))


# -- limit pgf G_r and the Poisson-increment sampler ----------------------------

def g_r_integrand(model: FitnessModel, z, xi) -> np.ndarray:
    """exp(-sum_t (1 - z_a(t)) prod_{s>t} z_a(s) lambda(xi_(t))) per row of xi."""
    z = _as_z(z)
    xi = np.asarray(xi, dtype=float)
    order = np.argsort(xi, axis=1, kind="stable")
    lam = model.intensity(np.take_along_axis(xi, order, axis=1))
    zs = z[order]
    after = np.cumprod(zs[:, ::-1], axis=1)[:, ::-1]
    after = np.concatenate([after[:, 1:], np.ones((xi.shape[0], 1))], axis=1)
    return np.exp(-np.sum((1.0 - zs) * after * lam, axis=1))


def g_r_direct(model: FitnessModel, z, *, samples: int = 1_000_000, seed: int = 0,
               threads: int = 1) -> MCEstimate:
    """Monte Carlo estimate of the limiting joint pgf G_r(z)."""
    z = _as_z(z)
    _check_unit(z)
    r = z.size

    def draw(rng, size):
        return g_r_integrand(model, z, model.sample(rng, size * r).reshape(size, r))

    m, se, cnt = mc_mean(draw, samples, seed, threads=threads)[0]
    return MCEstimate(float(m), float(se), int(cnt))


@dataclass
class JointLimitSample:
    r: int
    fitness: np.ndarray
    order_statistics: np.ndarray
    permutation: np.ndarray     # 0-based: order_statistics[t] == fitness[permutation[t]]
    increments: np.ndarray      # lambda(xi_(u)) - lambda(xi_(u-1)), lambda(xi_(0)) = 0
    degrees: np.ndarray


def sample_joint_limit_batch(model: FitnessModel, r: int, size: int,
                             rng: np.random.Generator):
    """``size`` independent draws of (xi, D); returns (xi, order, increments, D)."""
    if int(r) != r or r < 1:
        raise InvalidInput(f"r must be a positive integer, got {r!r}")
    xi = model.sample(rng, size * r).reshape(size, r)
    order = np.argsort(xi, axis=1, kind="stable")
    lam = model.intensity(np.take_along_axis(xi, order, axis=1))
    inc = np.maximum(np.diff(lam, axis=1, prepend=0.0), 0.0)
    counts = rng.poisson(inc)
    degrees = np.empty_like(counts)
    np.put_along_axis(degrees, order, np.cumsum(counts, axis=1), axis=1)
    return xi, order, inc, degrees


def sample_joint_limit(model: FitnessModel, r: int, rng: np.random.Generator) -> JointLimitSample:
    xi, order, inc, deg = sample_joint_limit_batch(model, r, 1, rng)
    return JointLimitSample(r=int(r), fitness=xi[0], order_statistics=xi[0][order[0]],
                            permutation=order[0], increments=inc[0], degrees=deg[0])


def empirical_pgf(degrees, z) -> np.ndarray:
    """Per-draw prod_s z_s^{D_s}; 0^0 counts as 1."""
    z = _as_z(z)
    return np.prod(np.power(z[None, :], np.asarray(degrees)), axis=1)


def sampler_pgf_grid(model: FitnessModel, z_grid, *, samples: int = 1_000_000,
                     seed: int = 0, threads: int = 1) -> np.ndarray:
    """Sampler-based E[prod z_s^{D_s}] for every row of ``z_grid`` from one draw set.

    Returns an array of shape (len(z_grid), 3): mean, SE, samples.
    """
    zg = np.asarray(z_grid, dtype=float)
    r = zg.shape[1]

    def draw(rng, size):
        _, _, _, deg = sample_joint_limit_batch(model, r, size, rng)
        return np.stack([empirical_pgf(deg, zz) for zz in zg], axis=1)

    return mc_mean(draw, samples, seed, threads=threads)


# -- moments m_r(d) and the characteristic function of the limit fraction ------

@dataclass(frozen=True)
class MomentEstimate:
    value: float
    error: float
    method: str
    r: int
    d: int


def _moment_quadrature(model: FitnessModel, r: int, d: int, max_evaluations: int) -> MomentEstimate:
    if r == 1:
        v, e = limit_nodal_pmf_with_error(model, d)
        return MomentEstimate(v, e, "quadrature", r, d)
    # w-variables: a = tail prob of the max fitness, b = of the min fitness;
    # (a, b) are the min and max of r uniforms, density r(r-1)(b-a)^(r-2).
    log_norm = math.log(r * (r - 1))
    inner_err = [0.0]

    def inner(b):
        def g(a):
            with np.errstate(divide="ignore"):
                return np.exp(log_norm + (r - 2) * np.log(b - a) - model.intensity_at_tail(a))
        res = integrate(g, geometric_breakpoints(0.0, b), QUAD_TOL * 1e-2,
                        max_evaluations=max_evaluations, fail_tol=REPORT_TOL)
        inner_err[0] = max(inner_err[0], res.error)
        return res.value

    def outer(b):
        flat = b.ravel()
        head = np.exp(d * np.log(model.intensity_at_tail(flat)) - gammaln(d + 1))
        h = np.array([inner(bb) for bb in flat])
        return (head * h).reshape(b.shape)

    res = integrate(outer, geometric_breakpoints(0.0, 1.0), QUAD_TOL,
                    max_evaluations=max_evaluations, fail_tol=REPORT_TOL)
    # inner errors are bounded per point; the head factor integrates to at most ~1
    err = res.error + inner_err[0]
    return MomentEstimate(res.value, err, "quadrature", r, d)


def _moment_monte_carlo(model: FitnessModel, r: int, d: int, samples: int, seed: int,
                        threads: int) -> MomentEstimate:
    def draw(rng, size):
        _, _, _, deg = sample_joint_limit_batch(model, r, size, rng)
        return np.all(deg == d, axis=1).astype(float)

    m, se, _ = mc_mean(draw, samples, seed, threads=threads)[0]
    return MomentEstimate(float(m), float(se), "monte-carlo", r, d)


def joint_moment(model: FitnessModel, r: int, d: int, method: str = "quadrature",
                 budget: int | None = None, *, tol: float | None = None, seed: int = 0,
                 threads: int = 1) -> MomentEstimate:
    """m_r(d) = P(D_1 = ... = D_r = d) with an error estimate.

    ``budget`` is the evaluation cap per one-dimensional integral
    (quadrature) or the number of sampler draws (monte-carlo). If ``tol`` is
    given and the achieved error exceeds it, NumericalFailure carries the
    partial result.
    """
    if int(r) != r or r < 1:
        raise InvalidInput(f"r must be a positive integer, got {r!r}")
    if int(d) != d or d < 0:
        raise InvalidInput(f"d must be a non-negative integer, got {d!r}")
    r, d = int(r), int(d)
    if method == "quadrature":
        est = _moment_quadrature(model, r, d, budget or 1_000_000)
    elif method in ("monte-carlo", "mc"):
        est = _moment_monte_carlo(model, r, d, budget or 1_000_000, seed, threads)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    if tol is not None and est.error > tol:
        raise NumericalFailure(f"m_{r}({d}) error {est.error:.3g} above tolerance {tol:.3g}",
                               partial=est.value, diagnostics={"error": est.error})
    return est


@dataclass
class MomentSequence:
    d: int
    values: list
    errors: list
    method: str

    def __getitem__(self, r: int) -> float:
        return self.values[r - 1]


def moment_sequence(model: FitnessModel, d: int, r_max: int, method: str = "quadrature",
                    budget: int | None = None, **kw) -> MomentSequence:
    ests = [joint_moment(model, r, d, method, budget, **kw) for r in range(1, r_max + 1)]
    return MomentSequence(d, [e.value for e in ests], [e.error for e in ests], method)


def _series_tail(t: float, R: int) -> float:
    """sum_{r > R} |t|^r / r!, summed until terms stop mattering."""
    a = abs(t)
    if a == 0.0:
        return 0.0
    total = 0.0
    r = R + 1
    while True:
        term = math.exp(r * math.log(a) - math.lgamma(r + 1))
        total += term
        if r > a and term < 1e-18 * max(total, 1e-300):
            return total
        r += 1


def truncation_order(t: float, eps: float, cap: int = R_CAP) -> tuple[int, float]:
    """Smallest R with sum_{r>R} |t|^r/r! <= eps; NumericalFailure past ``cap``."""
    if not eps > 0:
        raise InvalidInput(f"eps must be positive, got {eps!r}")
    for R in range(cap + 1):
        tail = _series_tail(t, R)
        if tail <= eps:
            return R, tail
    raise NumericalFailure(f"truncation order for |t|={abs(t)} and eps={eps} exceeds cap {cap}",
                           diagnostics={"t": t, "eps": eps, "cap": cap})


@dataclass
class CharFnEval:
    d: int
    t: float
    value: complex
    R: int
    tail_bound: float
    moment_error: float = 0.0
    moments: list = field(default_factory=list, repr=False)


def char_fn(model: FitnessModel, d: int, t: float, eps: float = 1e-8, *,
            moments: MomentSequence | None = None) -> CharFnEval:
    """Truncated series 1 + sum_{r<=R} (it)^r / r! m_r(d) for E[exp(i t Pi(d))]."""
    R, tail = truncation_order(t, eps)
    if R == 0:
        return CharFnEval(int(d), float(t), complex(1.0, 0.0), 0, tail)
    if moments is None or len(moments.values) < R:
        moments = moment_sequence(model, d, R)
    value = complex(1.0, 0.0)
    merr = 0.0
    for r in range(1, R + 1):
        coef = (1j * t) ** r / math.factorial(r)
        value += coef * moments[r]
        merr += abs(t) ** r / math.factorial(r) * moments.errors[r - 1]
    return CharFnEval(int(d), float(t), value, R, tail, merr, list(moments.values[:R]))


def pi_mean_var(model: FitnessModel, d: int) -> tuple[float, float, float]:
    """(mean, variance, variance error) of the limiting fraction Pi(d)."""
    m1 = joint_moment(model, 1, d)
    m2 = joint_moment(model, 2, d)
    var = m2.value - m1.value ** 2
    err = m2.error + 2.0 * m1.value * m1.error
    return m1.value, var, err


# -- finite-n check values --------------------------------------------------------

def finite_n_isolation_probability(model: FitnessModel, n: int, theta: float, r: int) -> float:
    """P(D_{n,1} = ... = D_{n,r} = 0) at finite n, by quadrature.

    All r tagged nodes are isolated iff the two largest of their fitness
    values sum to at most theta and no outside node exceeds theta - max.
    """
    if r == 1:
        return finite_n_nodal_pmf(model, n, theta, 0)
    if not 2 <= r < n:
        raise InvalidInput(f"need 2 <= r < n, got r={r}, n={n}")
    log_norm = math.log(r * (r - 1))

    def inner(b):
        rest = theta - float(model.tail_quantile(b))
        if rest < 0:
            return 0.0
        lo = float(model.tail(rest))
        if lo >= b:
            return 0.0

        def g(a):
            return np.exp((n - r) * model.log_cdf(theta - model.tail_quantile(a)))
        return integrate(g, geometric_breakpoints(lo, b), QUAD_TOL * 1e-2,
                         fail_tol=REPORT_TOL).value

    def outer(b):
        flat = b.ravel()
        h = np.array([inner(bb) for bb in flat])
        with np.errstate(divide="ignore"):
            return (np.exp(log_norm + (r - 2) * np.log1p(-flat)) * h).reshape(b.shape)

    lo = float(model.tail(theta / 2.0))
    return integrate(outer, geometric_breakpoints(lo, 1.0), QUAD_TOL, fail_tol=REPORT_TOL).value
