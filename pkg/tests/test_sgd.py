import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asgd_inference import SgdState, StepSchedule, sgd_step, step_size, update_mean
from asgd_inference.exceptions import ConfigError, DimensionError
from asgd_inference.models import LinearRegressionModel, MeanEstimationModel, MeanObservation, RegressionObservation


class ZeroGradient:
    dim = 3

    def gradient(self, x, sample):
        return np.zeros(3)


class WrongDim:
    dim = 2

    def gradient(self, x, sample):
        return np.zeros(3)


def test_step_size_first_step():
    assert step_size(StepSchedule(0.1, 0.501), 1) == 0.1


def test_step_size_against_extended_precision():
    # 0.1 * 100**-0.501 at 40 digits
    assert step_size(StepSchedule(0.1, 0.501), 100) == pytest.approx(0.009954054173515269624, rel=1e-15)


def test_step_size_square_root_decay():
    # alpha = 0.5 is outside the admissible range for a schedule, so evaluate the formula directly
    sched = StepSchedule(1.0, 0.75)
    object.__setattr__(sched, "alpha", 0.5)
    assert step_size(sched, 4) == 0.5


@pytest.mark.parametrize("alpha", [0.5, 1.0, 0.3, 1.2])
def test_schedule_rejects_boundary_alpha(alpha):
    with pytest.raises(ConfigError):
        StepSchedule(0.1, alpha)


def test_schedule_rejects_nonpositive_eta():
    with pytest.raises(ConfigError):
        StepSchedule(0.0, 0.6)


def test_step_size_rejects_zero_index():
    with pytest.raises(ValueError):
        step_size(StepSchedule(), 0)


@given(st.floats(0.51, 0.99), st.integers(1, 10**6))
def test_step_size_strictly_decreasing_and_positive(alpha, i):
    s = StepSchedule(0.1, alpha)
    assert s(i) > s(i + 1) > 0


def test_update_mean_examples():
    v = np.array([1.0, -2.0])
    np.testing.assert_array_equal(update_mean(np.zeros(2), v, 0), v)
    np.testing.assert_array_equal(update_mean(v, v, 7), v)
    m = np.zeros(1)
    for k, x in enumerate([1.0, 2.0, 3.0]):
        m = update_mean(m, np.array([x]), k)
    assert m[0] == 2.0


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 10**4), st.integers(0, 2**32 - 1))
def test_folded_mean_matches_direct_mean(T, seed):
    xs = np.random.default_rng(seed).normal(3.0, 2.0, size=(T, 2))
    m = np.zeros(2)
    for k, x in enumerate(xs):
        m = update_mean(m, x, k)
    direct = xs.sum(axis=0) / T
    np.testing.assert_allclose(m, direct, rtol=1e-12)


def test_mean_model_first_step():
    state = SgdState.initial(1)
    out = sgd_step(state, MeanObservation(1.0), MeanEstimationModel(), StepSchedule(1.0, 0.6))
    assert out.x[0] == 1.0 and out.n == 1 and out.xbar[0] == 1.0


def test_zero_gradient_is_fixed_point():
    state = SgdState(x=np.array([1.0, 2.0, 3.0]), xbar=np.array([1.0, 2.0, 3.0]), n=5)
    out = sgd_step(state, None, ZeroGradient(), StepSchedule())
    np.testing.assert_array_equal(out.x, state.x)
    assert out.n == 6


def test_regression_first_step():
    model = LinearRegressionModel(x_star=[0.0, 0.0])
    obs = RegressionObservation(np.array([1.0, 0.0]), 1.0)
    out = sgd_step(SgdState.initial(2), obs, model, StepSchedule(0.1, 0.6))
    np.testing.assert_allclose(out.x, [0.1, 0.0], rtol=0, atol=1e-16)


def test_gradient_dimension_mismatch():
    with pytest.raises(DimensionError):
        sgd_step(SgdState.initial(2), None, WrongDim(), StepSchedule())


def test_sgd_step_does_not_mutate_input():
    state = SgdState.initial(1, [0.3])
    sgd_step(state, MeanObservation(2.0), MeanEstimationModel(), StepSchedule())
    assert state.n == 0 and state.x[0] == 0.3


def test_x0_excluded_from_average():
    state = SgdState.initial(1, [100.0])
    out = sgd_step(state, MeanObservation(0.0), MeanEstimationModel(), StepSchedule(0.5, 0.6))
    np.testing.assert_array_equal(out.xbar, out.x)


def test_mean_model_explicit_recursion(rng):
    sched = StepSchedule(0.7, 0.6)
    model = MeanEstimationModel()
    state = SgdState.initial(1, [rng.normal()])
    prev = state.x[0]
    for i in range(1, 500):
        y = rng.normal()
        state = sgd_step(state, MeanObservation(y), model, sched)
        eta = sched(i)
        expected = (1 - eta) * prev + eta * y
        assert abs(state.x[0] - expected) <= 1e-14 * max(1.0, abs(expected))
        prev = state.x[0]
