"""
Unit tests for regressor training and batch prediction.
"""

# Python imports
import numpy as np
from allure import description, step, title
from pytest import approx, fixture, mark, raises

# Local imports
from py_speech_severity.exceptions import DataError
from py_speech_severity.fusion import (
    FusionConfig,
    FusionModel,
    Prediction,
    RegressorTrainingConfig,
    SessionInputs,
    predict_dataset,
    train_regressor,
)
from py_speech_severity.tensorcore import TrainingMetrics

pytestmark = [mark.unit]


@fixture
def hyper() -> RegressorTrainingConfig:
    """Five epochs with a short patience."""
    return RegressorTrainingConfig(epochs=5, lr=1e-2, patience=2, seed=3)


def _val_mse(model: FusionModel, sessions: list[SessionInputs]) -> float:
    return float(np.mean([(p.predicted - p.actual) ** 2 for p in predict_dataset(model, sessions)]))


class TestTrainRegressor:
    """Test the regressor training loop."""

    @title("History, metrics and target scaling")
    @description("Test per-epoch records, one step per training session and the fitted output mapping.")
    def test_history(
        self,
        tiny_fusion_config: FusionConfig,
        fusion_sessions: list[SessionInputs],
        hyper: RegressorTrainingConfig,
        training_metrics: TrainingMetrics,
    ) -> None:
        """Test per-epoch records, one step per training session and the fitted output mapping."""
        train, val = fusion_sessions[:4], fusion_sessions[4:]
        model, history = train_regressor(FusionModel(tiny_fusion_config, seed=3), train, val, hyper, training_metrics)
        with step("History"):
            assert [record.epoch for record in history] == [1, 2, 3, 4, 5]
            assert history[0].lr == 1e-2
            assert all(np.isfinite(record.train_mse) and record.val_mae >= 0 for record in history)
            assert set(history[0].to_dict()) == {"epoch", "train_mse", "val_mse", "val_mae", "lr"}
        with step("Metrics"):
            assert training_metrics.step_count == 20
            assert training_metrics.epoch_count == 5
        with step("Target scaling"):
            assert model.target_mean == approx(np.mean([30.0, 45.0, 60.0, 75.0]))
            assert model.target_std == approx(np.std([30.0, 45.0, 60.0, 75.0]))

    @title("Best validation parameters are restored")
    @description("Test that the returned model scores the lowest validation MSE of the history.")
    def test_restores_best(
        self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs], hyper: RegressorTrainingConfig
    ) -> None:
        """Test that the returned model scores the lowest validation MSE of the history."""
        val = fusion_sessions[4:]
        model, history = train_regressor(FusionModel(tiny_fusion_config, seed=3), fusion_sessions[:4], val, hyper)
        assert _val_mse(model, val) == approx(min(record.val_mse for record in history), rel=1e-9)

    @title("Training is deterministic")
    @description("Test that two runs with one seed give identical predictions.")
    def test_deterministic(
        self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs], hyper: RegressorTrainingConfig
    ) -> None:
        """Test that two runs with one seed give identical predictions."""
        train, val = fusion_sessions[:4], fusion_sessions[4:]
        first, _ = train_regressor(FusionModel(tiny_fusion_config, seed=3), train, val, hyper)
        second, _ = train_regressor(FusionModel(tiny_fusion_config, seed=3), train, val, hyper)
        assert predict_dataset(first, fusion_sessions) == predict_dataset(second, fusion_sessions)

    @title("Unscaled targets")
    @description("Test that scale_targets=False keeps the identity output mapping.")
    def test_unscaled(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """Test that scale_targets=False keeps the identity output mapping."""
        hyper = RegressorTrainingConfig(epochs=1, scale_targets=False)
        model, _ = train_regressor(FusionModel(tiny_fusion_config), fusion_sessions[:4], fusion_sessions[4:], hyper)
        assert (model.target_mean, model.target_std) == (0.0, 1.0)

    @title("Empty folds")
    @description("Test that empty training or validation folds raise DataError.")
    def test_empty_fold(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """Test that empty training or validation folds raise DataError."""
        model = FusionModel(tiny_fusion_config)
        with raises(DataError, match="Empty fold"):
            train_regressor(model, [], fusion_sessions)
        with raises(DataError, match="Empty fold"):
            train_regressor(model, fusion_sessions, [])
        with raises(ValueError):
            RegressorTrainingConfig(factor=1.0)


class TestPredictDataset:
    """Test batch prediction."""

    @title("Predictions follow input order")
    @description("Test keys, true severities and eval-mode values of batch predictions.")
    def test_predict_dataset(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """Test keys, true severities and eval-mode values of batch predictions."""
        model = FusionModel(tiny_fusion_config, seed=1)
        predictions = predict_dataset(model, fusion_sessions[::-1])
        assert all(isinstance(p, Prediction) for p in predictions)
        assert [p.key for p in predictions] == [s.key for s in fusion_sessions[::-1]]
        assert [p.actual for p in predictions] == [105.0, 90.0, 75.0, 60.0, 45.0, 30.0]
        assert predictions[0].predicted == model.predict(fusion_sessions[-1])
