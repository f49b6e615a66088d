"""
Unit tests for Adam and the plateau scheduler.
"""

# Python imports
import allure
import numpy as np
import pytest
from pytest import mark, raises

# Local imports
from data.constants import ADAM_LR, ADAM_PLATEAU_LR0, ADAM_PLATEAU_TRACE, ADAM_W0, ADAM_W1
from py_speech_severity.exceptions import MissingGradientError, NonFiniteError
from py_speech_severity.tensorcore import (
    OptimizerState,
    ParameterSet,
    PlateauScheduler,
    Tensor,
    adam_step,
    plateau_step,
    reduce_sum,
    uniform_init,
)

pytestmark = [pytest.mark.unit]


def _quadratic_params(value: float) -> ParameterSet:
    params = ParameterSet()
    params.add("w", Tensor([value]))
    return params


class TestAdam:
    """Test the Adam update."""

    @mark.unit
    @allure.title("TC-ADAM-001: First step on w^2")
    @allure.description("TC-ADAM-001: Test that the first bias-corrected step moves w by lr.")
    def test_first_step(self) -> None:
        """Test that the first bias-corrected step moves w by lr."""
        params = _quadratic_params(ADAM_W0)
        state = OptimizerState.for_parameters(params, lr=ADAM_LR)
        with allure.step("Compute gradient of w^2 and step"):
            w = params["w"]
            reduce_sum(w * w).backward()
            adam_step(params, state)
        with allure.step("Verify"):
            assert params["w"].data[0] == pytest.approx(ADAM_W1, abs=1e-7), "First step must move by lr"
            assert state.step == 1, "Step counter not advanced"
            np.testing.assert_allclose(state.first_moment["w"], [0.2])
            np.testing.assert_allclose(state.second_moment["w"], [0.004])

    @mark.unit
    @allure.title("TC-ADAM-002: Adam minimizes a quadratic")
    @allure.description("TC-ADAM-002: Test that repeated steps drive w^2 towards zero.")
    def test_converges(self) -> None:
        """Test that repeated steps drive w^2 towards zero."""
        params = _quadratic_params(3.0)
        state = OptimizerState.for_parameters(params, lr=0.1)
        for _ in range(300):
            params.zero_grad()
            w = params["w"]
            reduce_sum(w * w).backward()
            adam_step(params, state)
        assert abs(params["w"].data[0]) < 0.5, "Adam did not approach the minimum"

    @mark.unit
    @allure.title("TC-ADAM-003: Missing gradient")
    @allure.description("TC-ADAM-003: Test that parameters without gradients raise MissingGradientError.")
    def test_missing_gradient(self) -> None:
        """Test that parameters without gradients raise MissingGradientError."""
        params = ParameterSet()
        params.add("a", uniform_init("a", (2,), 2, seed=0))
        params.add("b", uniform_init("b", (2,), 2, seed=0))
        reduce_sum(params["a"]).backward()
        with raises(MissingGradientError, match="b"):
            adam_step(params, OptimizerState.for_parameters(params, lr=0.1))

    @mark.unit
    @allure.title("TC-ADAM-004: Hyperparameters are serializable")
    @allure.description("TC-ADAM-004: Test the checkpointed hyperparameter dictionary.")
    def test_hyperparameters(self) -> None:
        """Test the checkpointed hyperparameter dictionary."""
        state = OptimizerState(lr=0.01)
        assert state.hyperparameters() == {"lr": 0.01, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "step": 0}


class TestPlateauScheduler:
    """Test reduce-on-plateau scheduling."""

    @mark.unit
    @allure.title("TC-SCHED-001: Reduction after patience")
    @allure.description("TC-SCHED-001: Test that the rate halves after `patience` epochs without improvement.")
    def test_reduction(self) -> None:
        """Test that the rate halves after `patience` epochs without improvement."""
        sched = PlateauScheduler(lr=1.0, patience=2, factor=0.5)
        with allure.step("Improve, then stall"):
            rates = [sched.step(m) for m in (1.0, 1.0, 1.0, 0.5, 0.5, 0.5)]
        with allure.step("Verify rates"):
            assert rates == [1.0, 1.0, 0.5, 0.5, 0.5, 0.25], f"Unexpected schedule {rates}"
            assert sched.reductions == 2, "Two reductions expected"
            assert sched.best == 0.5, "Best metric not tracked"

    @mark.unit
    @allure.title("TC-SCHED-002: Relative threshold")
    @allure.description("TC-SCHED-002: Test that tiny improvements do not reset patience.")
    def test_threshold(self) -> None:
        """Test that tiny improvements do not reset patience."""
        sched = PlateauScheduler(lr=1.0, patience=1, factor=0.5)
        sched.step(1.0)
        assert plateau_step(sched, 1.0 - 1e-6) == 0.5, "An improvement below the threshold is a stall"

    @mark.unit
    @allure.title("TC-SCHED-003: Learning-rate floor")
    @allure.description("TC-SCHED-003: Test that the rate never drops below min_lr.")
    def test_floor(self) -> None:
        """Test that the rate never drops below min_lr."""
        sched = PlateauScheduler(lr=0.1, patience=1, factor=0.5, min_lr=0.08)
        rates = [sched.step(1.0) for _ in range(4)]
        assert rates == [0.1, 0.08, 0.08, 0.08], f"Unexpected schedule {rates}"
        assert sched.reductions == 1, "Clamped steps are not reductions"

    @mark.unit
    @allure.title("TC-SCHED-004: Invalid settings and metrics")
    @allure.description("TC-SCHED-004: Test invalid factors and non-finite metrics.")
    def test_invalid(self) -> None:
        """Test invalid factors and non-finite metrics."""
        with raises(ValueError):
            PlateauScheduler(lr=1.0, factor=1.5)
        with raises(ValueError):
            PlateauScheduler(lr=1.0, patience=0)
        with raises(NonFiniteError):
            PlateauScheduler(lr=1.0).step(float("nan"))


class TestAdamPlateauTrace:
    """Test Adam and the plateau scheduler together against a recorded trace."""

    @mark.unit
    @allure.title("TC-SCHED-005: Replay of a recorded optimization trace")
    @allure.description(
        "TC-SCHED-005: Test that Adam steps driven by a plateau scheduler reproduce a recorded sequence of "
        "learning rates and parameter values."
    )
    def test_replay(self) -> None:
        """Test that Adam steps driven by a plateau scheduler reproduce a recorded lr and parameter trace."""
        params = _quadratic_params(1.0)
        state = OptimizerState.for_parameters(params, lr=ADAM_PLATEAU_LR0)
        sched = PlateauScheduler(lr=ADAM_PLATEAU_LR0, patience=2, factor=0.5)
        for epoch, (loss, expected_lr, expected_w) in enumerate(ADAM_PLATEAU_TRACE):
            with allure.step(f"Epoch {epoch}: step with lr={state.lr}, then record loss {loss}"):
                params.zero_grad()
                reduce_sum(params["w"] * 3.0).backward()
                adam_step(params, state)
                state.lr = sched.step(loss)
            assert state.lr == expected_lr, f"Epoch {epoch}: lr {state.lr} != {expected_lr}"
            assert params["w"].data[0] == pytest.approx(expected_w, abs=1e-8), f"Epoch {epoch}: w differs"
        assert sched.reductions == 2, "Two reductions expected"
        assert state.step == len(ADAM_PLATEAU_TRACE), "One Adam step per epoch"
