"""
VQ-VAE training and evaluation loops.
"""

# Python imports
from __future__ import annotations

import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from msgspec import Struct

# Local imports
from ..exceptions import DataError, NonFiniteError
from ..fvtc import FVTCMatrix
from ..tensorcore import OptimizerState, PlateauScheduler, TrainingMetrics, adam_step, seed_rng
from .model import (
    VQForward,
    VQLossBreakdown,
    VQVAEConfig,
    VQVAEModel,
    codebook_perplexity,
    forward_batch,
    mask_input,
    matrix_values,
)


class VQVAETrainingConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    VQ-VAE optimization settings.

    Attributes:
        epochs: Maximum number of epochs
        lr: Initial Adam learning rate
        patience: Plateau patience in epochs
        factor: Learning-rate reduction factor
        min_lr: Learning-rate floor
        batch_size: Matrices per optimizer step
        seed: Initialization, shuffling and masking seed
    """

    epochs: int = 100
    lr: float = 5e-5
    patience: int = 25
    factor: float = 0.5
    min_lr: float = 1e-7
    batch_size: int = 1
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
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class VQEpochRecord:
    """Per-epoch training record."""

    epoch: int
    train: VQLossBreakdown
    val: VQLossBreakdown
    lr: float
    perplexity: float

    def to_dict(self) -> dict[str, object]:
        """Plain dictionary form for history.json."""
        return {
            "epoch": self.epoch,
            "train": self.train.to_dict(),
            "val": self.val.to_dict(),
            "lr": self.lr,
            "perplexity": self.perplexity,
        }


StepCallback = Callable[[VQForward], None]


def _stack(matrices: Sequence[FVTCMatrix | np.ndarray], config: VQVAEConfig, what: str) -> np.ndarray:
    if not matrices:
        raise DataError(f"Empty {what} set", "VQ-VAE needs at least one FVTC matrix")
    values = np.stack([matrix_values(m) for m in matrices])
    if values.shape[1:] != config.input_shape:
        raise DataError(f"Inconsistent {what} matrix shapes", f"expected {config.input_shape}, got {values.shape[1:]}")
    return values


def evaluate_vqvae(model: VQVAEModel, matrices: Sequence[FVTCMatrix | np.ndarray]) -> tuple[VQLossBreakdown, float]:
    """
    Mean loss breakdown and code perplexity of a dataset in evaluation mode (no masking).

    Raises:
        DataError: If the dataset is empty or shapes are inconsistent
    """
    values = _stack(matrices, model.config, "evaluation")
    breakdowns = []
    indices = []
    for x in values:
        result = forward_batch(model, x[None])
        breakdowns.append(result.breakdown())
        indices.append(result.indices)
    return VQLossBreakdown.mean(breakdowns), codebook_perplexity(np.concatenate(indices))


def _check_finite(breakdown: VQLossBreakdown, epoch: int) -> None:
    if not np.isfinite(breakdown.total):
        raise NonFiniteError("VQ-VAE loss diverged", f"epoch {epoch}: total={breakdown.total}")


def train_vqvae(
    dataset: Sequence[FVTCMatrix | np.ndarray],
    config: VQVAEConfig | None = None,
    training: VQVAETrainingConfig | None = None,
    validation: Sequence[FVTCMatrix | np.ndarray] | None = None,
    on_step: StepCallback | None = None,
    metrics: TrainingMetrics | None = None,
) -> tuple[VQVAEModel, list[VQEpochRecord]]:
    """
    Train a masked VQ-VAE with Adam and a reduce-on-plateau schedule.

    Every epoch visits the training matrices in a seeded random order, masks
    each one with seed (seed, epoch, position) and takes one Adam step per
    minibatch on the total loss. The scheduler monitors the validation total
    loss (the training set when no validation set is given); the parameters of
    the best validation epoch are restored before returning.

    Args:
        dataset: Training FVTC matrices
        config: Architecture (defaults to VQVAEConfig with D taken from the data)
        training: Optimization settings
        validation: Validation matrices
        on_step: Called with every training forward pass before the update
        metrics: Collector filled with step and epoch statistics

    Returns:
        (model with the best validation parameters, per-epoch history)

    Raises:
        DataError: If the dataset is empty or shapes are inconsistent
        NonFiniteError: If the loss becomes NaN or infinite
    """
    if not dataset:
        raise DataError("Empty training set", "VQ-VAE needs at least one FVTC matrix")
    if config is None:
        config = VQVAEConfig(D=matrix_values(dataset[0]).shape[1] - 1)
    training = training or VQVAETrainingConfig()
    train_values = _stack(dataset, config, "training")
    val_set = list(validation) if validation is not None else list(dataset)
    metrics = metrics if metrics is not None else TrainingMetrics()

    model = VQVAEModel(config, seed=training.seed)
    state = OptimizerState.for_parameters(model.params, lr=training.lr)
    scheduler = PlateauScheduler(
        lr=training.lr, patience=training.patience, factor=training.factor, min_lr=training.min_lr
    )
    best_state = model.params.state_dict()
    best_val = np.inf
    history: list[VQEpochRecord] = []
    logger.info(
        f"Training VQ-VAE on {len(train_values)} matrices: {model.params.num_parameters()} parameters, "
        f"G={config.groups} L={config.latent_dim} K={config.codebook_size}, {training.epochs} epochs"
    )

    for epoch in range(1, training.epochs + 1):
        order = seed_rng([training.seed, epoch]).permutation(len(train_values))
        model.codebook.reset_usage()
        step_losses: list[VQLossBreakdown] = []
        step_sizes: list[int] = []
        for start in range(0, len(order), training.batch_size):
            batch_idx = order[start : start + training.batch_size]
            started = time.perf_counter()
            inputs = train_values[batch_idx]
            masked = np.empty_like(inputs)
            masks = np.empty(inputs.shape, dtype=bool)
            for row, position in enumerate(batch_idx):
                mask_seed = [training.seed, epoch, int(position)]
                masked[row], masks[row] = mask_input(inputs[row], config.mask_fraction, mask_seed)
            model.params.zero_grad()
            result = forward_batch(model, inputs, masked, masks)
            result.total_loss.backward()
            if on_step is not None:
                on_step(result)
            adam_step(model.params, state)
            model.codebook.record_usage(result.indices)
            step_losses.append(result.breakdown())
            step_sizes.append(len(batch_idx))
            metrics.record_step(time.perf_counter() - started)

        train_loss = VQLossBreakdown.mean(step_losses, step_sizes)
        _check_finite(train_loss, epoch)
        perplexity = model.codebook.perplexity()
        val_loss, _ = evaluate_vqvae(model, val_set)
        _check_finite(val_loss, epoch)
        lr_before = scheduler.lr
        state.lr = scheduler.step(val_loss.total)
        if val_loss.total < best_val:
            best_val = val_loss.total
            best_state = model.params.state_dict()
        metrics.record_epoch(val_loss.total, lr_reduced=state.lr < lr_before)
        history.append(VQEpochRecord(epoch, train_loss, val_loss, lr_before, perplexity))
        logger.debug(
            f"VQ-VAE epoch {epoch}: train total={train_loss.total:.6f} "
            f"(recon={train_loss.reconstruction:.6f}, commit={train_loss.commitment:.6f}, "
            f"codebook={train_loss.codebook:.6f}), val total={val_loss.total:.6f}, "
            f"perplexity={perplexity:.2f}, lr={state.lr:.3g}"
        )

    model.params.load_state_dict(best_state)
    logger.info(f"VQ-VAE training finished: {metrics.get_summary()}")
    return model, history
