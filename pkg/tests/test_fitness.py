import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtgraph import (CustomFitness, ExponentialFitness, ParetoFitness, check_assumption_A,
                     constant_intensity_model, eval_cdf, intensity, model_from_config,
                     sample_fitness, scaling_threshold)
from rtgraph.errors import InvalidInput, UnsupportedOperation

rates = st.floats(0.1, 10)
shapes = st.floats(0.5, 6)
xs = st.floats(0, 50)


@given(rates, xs)
def test_exponential_cdf_plus_tail_is_one(rate, x):
    m = ExponentialFitness(rate)
    assert math.isclose(m.cdf(x) + m.tail(x), 1.0, abs_tol=1e-15)


@given(shapes, st.floats(0.1, 5), xs)
def test_pareto_cdf_plus_tail_is_one(shape, scale, x):
    m = ParetoFitness(scale, shape)
    assert math.isclose(m.cdf(x) + m.tail(x), 1.0, abs_tol=1e-15)


@given(rates, st.floats(1e-9, 1 - 1e-9))
def test_exponential_quantile_round_trip(rate, u):
    m = ExponentialFitness(rate)
    assert math.isclose(float(m.cdf(m.quantile(u))), u, rel_tol=1e-9, abs_tol=1e-15)


@given(shapes, st.floats(1e-12, 1.0))
def test_tail_quantile_inverts_tail(shape, w):
    m = ParetoFitness(1.0, shape)
    assert math.isclose(float(m.tail(m.tail_quantile(w))), w, rel_tol=1e-9)


def test_scalings_and_intensities(exp_model, pareto_model):
    assert math.isclose(scaling_threshold(exp_model, 1000), math.log(1000))
    assert math.isclose(scaling_threshold(ExponentialFitness(2.0), 100), math.log(100) / 2)
    assert math.isclose(scaling_threshold(pareto_model, 10_000), 100.0)
    assert math.isclose(intensity(exp_model, 1.5), math.exp(1.5))
    assert intensity(pareto_model, 3.0) == 1.0


def test_negative_fitness_argument_rejected(exp_model):
    with pytest.raises(InvalidInput):
        intensity(exp_model, -1.0)
    with pytest.raises(InvalidInput):
        ExponentialFitness(0.0)
    with pytest.raises(InvalidInput):
        ParetoFitness(1.0, -1.0)


def test_eval_cdf_below_support(exp_model):
    assert eval_cdf(exp_model, -3.0) == 0.0


def test_sampling_is_seeded_and_nonnegative(exp_model):
    a = sample_fitness(exp_model, np.random.default_rng(1), 1000)
    b = sample_fitness(exp_model, np.random.default_rng(1), 1000)
    assert np.array_equal(a, b) and np.all(a >= 0)
    assert abs(a.mean() - 1.0) < 0.15


def test_custom_without_quantile_cannot_sample():
    base = ExponentialFitness(1.0)
    m = CustomFitness(base.cdf, base.tail, None, base.intensity, base.scaling)
    with pytest.raises(UnsupportedOperation):
        m.sample(np.random.default_rng(0), 3)


def test_custom_requires_evaluators():
    with pytest.raises(InvalidInput):
        CustomFitness(None, None, None, None, None)


def test_assumption_exponential_exact(exp_model):
    rep = check_assumption_A(exp_model, [0.0, 1.0, 2.0], [10, 100, 1000])
    assert len(rep) == 3
    # n e^{-(log n - x)} = e^x exactly, up to rounding
    assert rep.max_residual.max() < 1e-12 * math.exp(2)


def test_assumption_pareto_converges(pareto_model):
    rep = check_assumption_A(pareto_model, [0.0, 1.0, 2.0], [10, 100, 1000, 10_000, 100_000])
    assert rep.monotone_beyond_n0
    assert rep.max_residual[-1] < rep.max_residual[0]
    assert rep.max_residual[-1] < 0.02


def test_constant_intensity_scaling(const_model):
    rep = check_assumption_A(const_model, [0.0, 5.0], [100, 10**6])
    assert rep.max_residual[-1] < 0.02
    assert np.all(const_model.intensity([0.0, 7.0]) == 1.0)


def test_model_from_config():
    assert model_from_config({"fitness.family": "exponential", "fitness.rate": 2}) == \
        ExponentialFitness(2.0)
    assert model_from_config({"fitness.family": "pareto"}) == ParetoFitness(1.0, 2.0)
    with pytest.raises(InvalidInput):
        model_from_config({"fitness.family": "lognormal"})


def test_cdf_reference_points(exp_model):
    assert eval_cdf(exp_model, -1.0) == 0.0
    assert math.isclose(eval_cdf(exp_model, math.log(2)), 0.5)
    assert math.isclose(eval_cdf(ParetoFitness(1.0, 2.0), 1.0), 0.75)


def test_quantile_reference_points(exp_model):
    assert math.isclose(float(exp_model.quantile(0.5)), math.log(2))
    assert math.isclose(float(ParetoFitness(1.0, 1.0).quantile(0.5)), 1.0)


def test_sample_mean_law_of_large_numbers(exp_model):
    n = 10**6
    x = sample_fitness(exp_model, np.random.default_rng(2), n)
    assert abs(x.mean() - 1.0) < 4 / math.sqrt(n)


def test_scaling_reference_points(exp_model):
    assert scaling_threshold(exp_model, 1) == 0.0
    assert math.isclose(scaling_threshold(exp_model, math.e ** 2), 2.0)
    n = math.ceil(math.e ** 2)
    assert 0 <= scaling_threshold(exp_model, n) - 2.0 <= math.log(n / math.e ** 2) + 1e-15
    with pytest.raises(InvalidInput):
        scaling_threshold(exp_model, 0)


def test_intensity_reference_points():
    assert math.isclose(intensity(ExponentialFitness(2.0), 1.0), math.exp(2))
    assert intensity(ExponentialFitness(3.0), 0.0) == 1.0


def test_pareto_assumption_at_one_million():
    rep = check_assumption_A(ParetoFitness(1.0, 2.0), [0.0], [10**6])
    assert abs(rep.values[0, 0] - 1.0) < 0.01
    assert len(check_assumption_A(ParetoFitness(1.0, 2.0), [0.0], [10, 100, 1000])) == 3
