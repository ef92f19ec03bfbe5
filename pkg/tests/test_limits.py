import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtgraph import (ExponentialFitness, ParetoFitness, finite_n_nodal_pgf, finite_n_nodal_pmf,
                     fujihara_approx, fujihara_pmf, limit_nodal_pmf, nodal_pmf_table)
from rtgraph.errors import InvalidInput

# Frozen from scipy.special: E_2(1), E_1(1) and Gamma(d-1, 1)/d!.
EXP_LIMIT_ORACLE = {
    0: 0.14849550677592194,
    1: 0.2193839343955205,
    2: 0.18393972058572122,
    3: 0.12262648039048078,
    5: 0.04905059215619231,
    10: 0.011111098608860023,
}

# Frozen from scipy.integrate.quad in the fitness variable: n = 5, theta = log 5.
FINITE_N5_ORACLE = [0.154583003386053, 0.2550169966139469, 0.20479999999999995,
                    0.11946666666666667, 0.2661333333333335]


@pytest.mark.parametrize("d,expected", sorted(EXP_LIMIT_ORACLE.items()))
def test_exponential_limit_against_oracle(exp_model, d, expected):
    assert math.isclose(limit_nodal_pmf(exp_model, d), expected, rel_tol=1e-10)


@pytest.mark.parametrize("d", [0, 1, 2, 7, 20, 30])
def test_two_exponential_routes_agree(exp_model, d):
    assert math.isclose(fujihara_pmf(d), limit_nodal_pmf(exp_model, d), rel_tol=1e-9)


def test_limit_is_rate_free():
    assert math.isclose(limit_nodal_pmf(ExponentialFitness(3.0), 4),
                        limit_nodal_pmf(ExponentialFitness(1.0), 4), rel_tol=1e-12)


@pytest.mark.parametrize("d", range(11))
def test_pareto_limit_is_unit_poisson(pareto_model, d):
    assert abs(limit_nodal_pmf(pareto_model, d) - math.exp(-1) / math.factorial(d)) < 1e-12


def test_limit_pmf_sums_to_one(exp_model):
    # tail mass beyond 400 is below 1/400
    total = sum(nodal_pmf_table(exp_model, 400).values.values())
    assert 1 - 1 / 399 < total <= 1 + 1e-9


@pytest.mark.parametrize("d", range(5))
def test_finite_n_against_oracle(exp_model, d):
    assert math.isclose(finite_n_nodal_pmf(exp_model, 5, math.log(5), d), FINITE_N5_ORACLE[d],
                        rel_tol=1e-9)


def test_two_node_graph_closed_form(exp_model):
    # P(xi_1 + xi_2 > theta) = (1 + theta) e^{-theta}
    theta = math.log(2)
    assert math.isclose(finite_n_nodal_pmf(exp_model, 2, theta, 1), (1 + theta) / 2, rel_tol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 40), st.floats(0.1, 6))
def test_finite_n_pmf_sums_to_one(n, theta):
    m = ExponentialFitness(1.0)
    assert math.isclose(sum(finite_n_nodal_pmf(m, n, theta, d) for d in range(n)), 1.0,
                        rel_tol=1e-8)


def test_finite_n_pgf_matches_pmf(exp_model):
    n, theta, z = 12, math.log(12), 0.4
    via_pmf = sum(finite_n_nodal_pmf(exp_model, n, theta, d) * z ** d for d in range(n))
    assert math.isclose(finite_n_nodal_pgf(exp_model, n, theta, z), via_pmf, rel_tol=1e-9)


def test_finite_n_converges(exp_model):
    res = [max(abs(finite_n_nodal_pmf(exp_model, n, math.log(n), d) - limit_nodal_pmf(exp_model, d))
               for d in range(6)) for n in (10**3, 10**4, 10**5)]
    assert res[0] > res[1] > res[2] and res[2] < 1e-5


@pytest.mark.parametrize("d", range(2, 16))
def test_power_law_approximation_bound(d):
    approx, bound = fujihara_approx(d)
    assert abs(fujihara_pmf(d) - approx) <= bound


def test_approximation_domain():
    with pytest.raises(InvalidInput):
        fujihara_approx(1)
    with pytest.raises(InvalidInput):
        limit_nodal_pmf(ExponentialFitness(1.0), -1)
    with pytest.raises(InvalidInput):
        finite_n_nodal_pmf(ExponentialFitness(1.0), 5, 1.0, 5)


def test_two_node_graph_at_unit_threshold(exp_model):
    assert math.isclose(finite_n_nodal_pmf(exp_model, 2, 1.0, 1), 2 / math.e, rel_tol=1e-10)


def test_pgf_endpoints(exp_model):
    n, theta = 50, math.log(50)
    assert math.isclose(finite_n_nodal_pgf(exp_model, n, theta, 1.0), 1.0, rel_tol=1e-9)
    assert abs(finite_n_nodal_pgf(exp_model, n, theta, 0.0)
               - finite_n_nodal_pmf(exp_model, n, theta, 0)) < 1e-8


@pytest.mark.parametrize("theta,z", [(0.7, 0.3), (2.0, 0.9)])
def test_two_node_pgf(exp_model, theta, z):
    p = (1 + theta) * math.exp(-theta)
    assert math.isclose(finite_n_nodal_pgf(exp_model, 2, theta, z), (1 - p) + z * p, rel_tol=1e-10)


def test_large_n_close_to_limit(exp_model):
    n = 10**5
    assert abs(finite_n_nodal_pmf(exp_model, n, math.log(n), 0) - 0.1485) < 0.01


def test_pareto_pmf_sums_to_one(pareto_model):
    n = 30
    theta = float(pareto_model.scaling(n))
    assert math.isclose(sum(finite_n_nodal_pmf(pareto_model, n, theta, d) for d in range(n)),
                        1.0, rel_tol=1e-6)


def test_reference_power_law_values():
    assert abs(fujihara_pmf(0) - 0.1485) < 5e-4
    assert abs(fujihara_pmf(5) - 1 / 20) < 1 / 120
    assert abs(fujihara_pmf(10) - 1 / 90) < 1 / math.factorial(10)
    assert fujihara_approx(2) == (0.5, 0.5)
    assert fujihara_approx(5) == (0.05, 1 / 120)
