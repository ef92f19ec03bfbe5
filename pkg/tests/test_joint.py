import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtgraph import (ExponentialFitness, char_fn, f_r_factor, finite_n_isolation_probability,
                     finite_n_joint_pgf, finite_n_nodal_pgf, g_r_direct, joint_moment,
                     limit_nodal_pmf, moment_sequence, pi_mean_var, sample_joint_limit,
                     sampler_pgf_grid, truncation_order)
from rtgraph.errors import InvalidInput, NumericalFailure
from rtgraph.joint import f_r_factor_batch, sample_joint_limit_batch

# Frozen from scipy.integrate.dblquad over (min, max) in the fitness variable.
M2_EXP_ORACLE = {0: 0.07760707915632377, 2: 0.07088842761959821, 5: 0.007045423746171969}
# Frozen from dblquad: P(D_1 = D_2 = 0) for n = 3, theta = log 3, exponential fitness.
ISOLATION_N3_ORACLE = 0.131587353121134


def brute_f_r(model, theta, z, x, m=400_000, seed=0):
    xi = model.sample(np.random.default_rng(seed), m)
    hit = (np.asarray(x)[None, :] + xi[:, None]) > theta
    return np.mean(np.prod(np.where(hit, z, 1.0), axis=1))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=5),
       st.lists(st.floats(0, 6), min_size=5, max_size=5), st.floats(0.5, 5))
def test_scalar_and_batch_f_r_agree(z, x, theta):
    m = ExponentialFitness(1.0)
    x = np.array(x[:len(z)])
    a = f_r_factor(m, theta, z, x)
    b = f_r_factor_batch(m, theta, z, x[None, :])[0]
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-14)


def test_f_r_against_brute_force(exp_model):
    z, x = [0.3, 0.7, 0.5], [0.2, 2.5, 1.0]
    assert abs(f_r_factor(exp_model, 2.0, z, x) - brute_f_r(exp_model, 2.0, np.array(z), x)) < 3e-3


def test_f_r_with_fitness_above_threshold(exp_model):
    # node 2 sees every other node, contributing a bare z
    assert math.isclose(f_r_factor(exp_model, 1.0, [0.5, 0.2], [0.1, 4.0]),
                        0.2 * f_r_factor(exp_model, 1.0, [0.5], [0.1]), rel_tol=1e-14)


def test_f_r_dimension_mismatch(exp_model):
    with pytest.raises(InvalidInput):
        f_r_factor(exp_model, 1.0, [0.5, 0.5], [1.0])


def test_joint_pgf_single_node_is_nodal_pgf(exp_model):
    n, theta = 200, math.log(200)
    est = finite_n_joint_pgf(exp_model, n, theta, [0.6], samples=200_000, seed=1)
    assert abs(est.value - finite_n_nodal_pgf(exp_model, n, theta, 0.6)) < 4 * est.se


def test_joint_pgf_matches_simulated_graphs(exp_model):
    # nodes 0, 1 counted towards nodes 2..n-1 only
    n, theta, z = 8, math.log(8), np.array([0.5, 0.3])
    rng = np.random.default_rng(7)
    f = exp_model.sample(rng, 400_000 * n).reshape(-1, n)
    outside = (f[:, :2, None] + f[:, None, 2:]) > theta
    emp = np.mean(np.prod(z[None, :] ** outside.sum(axis=2), axis=1))
    est = finite_n_joint_pgf(exp_model, n, theta, z, samples=200_000, seed=2)
    assert abs(est.value - emp) < 5e-3


def test_joint_pgf_edge_cases(exp_model):
    assert finite_n_joint_pgf(exp_model, 10, 2.0, [1.0, 1.0]).value == 1.0
    with pytest.raises(InvalidInput):
        finite_n_joint_pgf(exp_model, 2, 1.0, [0.5, 0.5])
    with pytest.raises(InvalidInput):
        g_r_direct(exp_model, [1.5, 0.5])


def test_limit_pgf_single_node(exp_model):
    est = g_r_direct(exp_model, [0.0], samples=400_000, seed=3)
    assert abs(est.value - limit_nodal_pmf(exp_model, 0)) < 4 * est.se


def test_sampler_agrees_with_limit_pgf(exp_model):
    grid = np.array([[0.5, 0.5], [0.0, 0.75], [0.25, 1.0]])
    samp = sampler_pgf_grid(exp_model, grid, samples=300_000, seed=4)
    for (m, se, _), z in zip(samp, grid):
        d = g_r_direct(exp_model, z, samples=300_000, seed=5)
        assert abs(m - d.value) < 4 * math.hypot(se, d.se)


def test_sampler_structure(exp_model):
    s = sample_joint_limit(exp_model, 4, np.random.default_rng(0))
    assert np.all(np.diff(s.order_statistics) >= 0)
    assert np.array_equal(s.fitness[s.permutation], s.order_statistics)
    # degree of the t-th smallest is the partial sum of increments' Poisson counts
    assert np.all(np.diff(s.degrees[s.permutation]) >= 0)
    assert np.all(s.increments >= 0)


def test_constant_intensity_degrees_coincide(const_model):
    _, _, _, deg = sample_joint_limit_batch(const_model, 5, 20_000, np.random.default_rng(1))
    assert np.all(deg == deg[:, :1])


@pytest.mark.parametrize("d,expected", sorted(M2_EXP_ORACLE.items()))
def test_second_moment_against_oracle(exp_model, d, expected):
    assert math.isclose(joint_moment(exp_model, 2, d).value, expected, rel_tol=1e-8)


def test_moments_decrease_in_r(exp_model):
    seq = moment_sequence(exp_model, 0, 5)
    assert all(a > b > 0 for a, b in zip(seq.values, seq.values[1:]))
    assert math.isclose(seq[1], limit_nodal_pmf(exp_model, 0), rel_tol=1e-12)


def test_monte_carlo_moment(exp_model):
    mc = joint_moment(exp_model, 3, 0, "monte-carlo", 300_000, seed=9)
    q = joint_moment(exp_model, 3, 0)
    assert abs(mc.value - q.value) < 4 * mc.error


def test_constant_intensity_moments(const_model):
    c = 1.0
    for r in (1, 2, 4):
        assert math.isclose(joint_moment(const_model, r, 1).value, c * math.exp(-c), rel_tol=1e-9)


def test_moment_argument_checks(exp_model):
    with pytest.raises(InvalidInput):
        joint_moment(exp_model, 0, 1)
    with pytest.raises(InvalidInput):
        joint_moment(exp_model, 2, 1, method="bogus")
    with pytest.raises(NumericalFailure) as exc:
        joint_moment(exp_model, 2, 0, tol=1e-30)
    assert exc.value.partial is not None


def test_positive_variance(exp_model):
    mean, var, err = pi_mean_var(exp_model, 0)
    assert var > 10 * err and var < mean * (1 - mean)


def test_char_fn_two_point(const_model):
    p = math.exp(-1)
    for t in (0.5, 2.0):
        ev = char_fn(const_model, 0, t)
        exact = 1 + (complex(math.cos(t), math.sin(t)) - 1) * p
        assert abs(ev.value - exact) < 1e-8


def test_char_fn_at_zero(exp_model):
    ev = char_fn(exp_model, 3, 0.0)
    assert ev.value == 1 and ev.R == 0


def test_truncation_order():
    R, tail = truncation_order(1.0, 1e-8)
    assert R == 11 and tail <= 1e-8
    assert tail > 0 and truncation_order(1.0, 1e-8)[0] > truncation_order(0.5, 1e-8)[0]
    with pytest.raises(NumericalFailure):
        truncation_order(30.0, 1e-12)


def test_isolation_probability_against_oracle(exp_model):
    assert math.isclose(finite_n_isolation_probability(exp_model, 3, math.log(3), 2),
                        ISOLATION_N3_ORACLE, rel_tol=1e-8)


def test_isolation_probability_large_n_tends_to_m2(exp_model):
    n = 10**5
    p = finite_n_isolation_probability(exp_model, n, math.log(n), 2)
    assert abs(p - M2_EXP_ORACLE[0]) < 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 6), st.floats(0.1, 5))
def test_single_factor_closed_form(z, x, theta):
    m = ExponentialFitness(1.0)
    expected = 1 - (1 - z) * float(m.tail(theta - x))
    assert math.isclose(f_r_factor(m, theta, [z], [x]), expected, rel_tol=1e-12, abs_tol=1e-15)


def test_f_r_all_ones(exp_model):
    assert f_r_factor(exp_model, 2.0, [1, 1, 1], [0.3, 1.0, 5.0]) == 1.0


def test_f_r_three_factors_million_draws(exp_model):
    z, x, theta = np.array([0.2, 0.6, 0.9]), np.array([0.5, 1.7, 0.1]), 2.2
    rng = np.random.default_rng(21)
    xi = exp_model.sample(rng, 10**6)
    vals = np.prod(np.where(x[None, :] + xi[:, None] > theta, z, 1.0), axis=1)
    se = vals.std(ddof=1) / 1000
    assert abs(f_r_factor(exp_model, theta, z, x) - vals.mean()) < 3 * se


def test_single_node_joint_pgf_large_n(exp_model):
    n = 10**4
    theta = math.log(n)
    est = finite_n_joint_pgf(exp_model, n, theta, [0.3], samples=400_000, seed=11)
    assert abs(est.value - finite_n_nodal_pgf(exp_model, n, theta, 0.3)) < 3 * est.se


def test_joint_pgf_approaches_limit(exp_model):
    z = [0.5, 0.5]
    lim = g_r_direct(exp_model, z, samples=400_000, seed=12)
    gaps = []
    for n in (10**3, 10**4, 10**5):
        est = finite_n_joint_pgf(exp_model, n, math.log(n), z, samples=400_000, seed=13)
        gaps.append(abs(est.value - lim.value))
        se = math.hypot(est.se, lim.se)
    assert gaps[-1] < 3 * se


def test_limit_pgf_both_zero_is_second_moment(exp_model):
    est = g_r_direct(exp_model, [0.0, 0.0], samples=400_000, seed=14)
    assert abs(est.value - M2_EXP_ORACLE[0]) < 3 * est.se


def test_constant_intensity_pgf(const_model):
    z = [0.3, 0.8]
    est = g_r_direct(const_model, z, samples=10_000, seed=15)
    assert math.isclose(est.value, math.exp(-(1 - 0.24)), rel_tol=1e-12)


def test_sampler_single_node_marginal(exp_model):
    _, _, _, deg = sample_joint_limit_batch(exp_model, 1, 400_000, np.random.default_rng(16))
    for d in range(4):
        p = limit_nodal_pmf(exp_model, d)
        assert abs(np.mean(deg[:, 0] == d) - p) < 4 * math.sqrt(p * (1 - p) / 400_000)


def test_char_fn_modulus(exp_model):
    ev = char_fn(exp_model, 0, 1.0, 1e-8)
    assert abs(ev.value) <= 1 + 1e-8


def test_constant_intensity_variance(const_model):
    for d in (0, 2):
        p = math.exp(-1) / math.factorial(d)
        _, var, err = pi_mean_var(const_model, d)
        assert abs(var - p * (1 - p)) < 1e-8 + err


@pytest.mark.parametrize("d", [0, 3, 8])
def test_variance_nonnegative(pareto_model, d):
    _, var, err = pi_mean_var(pareto_model, d)
    assert var >= -1e-10 - err


def test_mean_and_variance_exponential(exp_model):
    mean, var, err = pi_mean_var(exp_model, 0)
    assert abs(mean - 0.1485) < 5e-4
