"""
Regressor training and batch prediction.
"""

# Python imports
from __future__ import annotations

import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from msgspec import Struct

# Local imports
from ..exceptions import DataError, NonFiniteError
from ..tensorcore import OptimizerState, PlateauScheduler, TrainingMetrics, adam_step, mse_loss, seed_rng
from .model import SessionInputs, SeverityRegressor


class RegressorTrainingConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Regressor optimization settings.

    Attributes:
        epochs: Maximum number of epochs
        lr: Initial Adam learning rate
        patience: Plateau patience in epochs (monitors validation MSE)
        factor: Learning-rate reduction factor
        min_lr: Learning-rate floor
        scale_targets: Fit the output mapping to training-fold severities
        seed: Initialization, shuffling and dropout seed
    """

    epochs: int = 400
    lr: float = 5e-4
    patience: int = 100
    factor: float = 0.5
    min_lr: float = 1e-7
    scale_targets: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        """
        Validate configuration after initialization.

        Raises:
            ValueError: If any field is out of range
        """
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr < 0:
            raise ValueError(f"lr must be >= 0, got {self.lr}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"factor must be in (0, 1), got {self.factor}")


@dataclass(frozen=True)
class RegressorEpochRecord:
    """Per-epoch training record."""

    epoch: int
    train_mse: float
    val_mse: float
    val_mae: float
    lr: float

    def to_dict(self) -> dict[str, float | int]:
        """Plain dictionary form for history.json."""
        return {
            "epoch": self.epoch,
            "train_mse": self.train_mse,
            "val_mse": self.val_mse,
            "val_mae": self.val_mae,
            "lr": self.lr,
        }


@dataclass(frozen=True)
class Prediction:
    """Eval-mode prediction of one session (not clipped to the BPRS range)."""

    key: str
    predicted: float
    actual: float


def _target(severity: float) -> np.ndarray:
    return np.array([[float(severity)]])


def predict_dataset(model: SeverityRegressor, sessions: Sequence[SessionInputs]) -> list[Prediction]:
    """
    Deterministic eval-mode predictions (dropout off), in input order.

    Raises:
        DataError: If a session lacks an input the model needs
    """
    return [Prediction(s.key, model.predict(s), float(s.severity)) for s in sessions]


def _errors(model: SeverityRegressor, sessions: Sequence[SessionInputs]) -> tuple[float, float]:
    predictions = predict_dataset(model, sessions)
    diff = np.array([p.predicted - p.actual for p in predictions])
    return float(np.mean(diff * diff)), float(np.mean(np.abs(diff)))


def train_regressor(
    model: SeverityRegressor,
    train: Sequence[SessionInputs],
    val: Sequence[SessionInputs],
    hyper: RegressorTrainingConfig | None = None,
    metrics: TrainingMetrics | None = None,
) -> tuple[SeverityRegressor, list[RegressorEpochRecord]]:
    """
    Train a regressor on MSE, one session per Adam step.

    Sessions are visited in a seeded random order each epoch; dropout masks
    are seeded with (seed, epoch, position). The plateau scheduler monitors
    validation MSE and the parameters of the best validation epoch are
    restored before returning.

    Args:
        model: Freshly built regressor (updated in place)
        train: Training sessions
        val: Validation sessions
        hyper: Optimization settings
        metrics: Collector filled with step and epoch statistics

    Returns:
        (model with the best validation parameters, per-epoch history)

    Raises:
        DataError: If a fold is empty or a session lacks an input
        NonFiniteError: If the loss becomes NaN or infinite
    """
    if not train or not val:
        raise DataError("Empty fold", f"train={len(train)} sessions, val={len(val)} sessions")
    hyper = hyper or RegressorTrainingConfig()
    metrics = metrics if metrics is not None else TrainingMetrics()
    if hyper.scale_targets:
        model.set_target_scaling([s.severity for s in train])

    state = OptimizerState.for_parameters(model.params, lr=hyper.lr)
    scheduler = PlateauScheduler(lr=hyper.lr, patience=hyper.patience, factor=hyper.factor, min_lr=hyper.min_lr)
    best_state = model.params.state_dict()
    best_val = np.inf
    history: list[RegressorEpochRecord] = []
    logger.info(
        f"Training {model.variant} on {len(train)} sessions (val {len(val)}): "
        f"{model.params.num_parameters()} parameters, {hyper.epochs} epochs"
    )

    for epoch in range(1, hyper.epochs + 1):
        order = seed_rng([hyper.seed, epoch]).permutation(len(train))
        losses = []
        for position in order:
            session = train[int(position)]
            started = time.perf_counter()
            model.params.zero_grad()
            prediction = model.forward(session, training=True, seed=[hyper.seed, epoch, int(position)])
            loss = mse_loss(prediction, _target(session.severity))
            loss.backward()
            adam_step(model.params, state)
            losses.append(loss.item())
            metrics.record_step(time.perf_counter() - started)

        train_mse = float(np.mean(losses))
        val_mse, val_mae = _errors(model, val)
        if not (np.isfinite(train_mse) and np.isfinite(val_mse)):
            raise NonFiniteError("Regressor loss diverged", f"epoch {epoch}: train={train_mse}, val={val_mse}")
        lr_before = scheduler.lr
        state.lr = scheduler.step(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best_state = model.params.state_dict()
        metrics.record_epoch(val_mse, lr_reduced=state.lr < lr_before)
        history.append(RegressorEpochRecord(epoch, train_mse, val_mse, val_mae, lr_before))
        logger.debug(
            f"{model.variant} epoch {epoch}: train mse={train_mse:.4f}, val mse={val_mse:.4f}, "
            f"val mae={val_mae:.4f}, lr={state.lr:.3g}"
        )

    model.params.load_state_dict(best_state)
    logger.info(f"{model.variant} training finished: {metrics.get_summary()}")
    return model, history
