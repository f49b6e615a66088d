"""
Training metrics collection.

This module provides the collector that training loops feed with step
latencies and per-epoch monitored values, and that the CLI stores next to
every trained model.
"""

# Python imports
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any


@dataclass
class TrainingMetrics:
    """
    Training progress collector.

    Collects:
    - Optimizer step count and latency statistics (min, max, average)
    - Epoch count and the monitored (validation) value per epoch
    - Best epoch and value
    - Learning-rate reductions

    Attributes:
        step_count: Number of optimizer steps
        total_latency: Sum of step latencies in seconds
        min_latency: Fastest step observed
        max_latency: Slowest step observed
        epoch_count: Number of completed epochs
        best_epoch: 1-based epoch of the best monitored value
        best_value: Best (lowest) monitored value
        lr_reductions: Number of learning-rate reductions
        start_time: When collection started
        last_epoch_time: Timestamp of the last completed epoch
    """

    step_count: int = 0
    total_latency: float = 0.0
    min_latency: float | None = None
    max_latency: float | None = None
    epoch_count: int = 0
    best_epoch: int | None = None
    best_value: float | None = None
    lr_reductions: int = 0
    start_time: datetime = field(default_factory=datetime.now)
    last_epoch_time: datetime | None = None

    def record_step(self, latency: float) -> None:
        """
        Record one optimizer step.

        Args:
            latency: Wall time of the step in seconds

        Example:
            >>> metrics.record_step(0.012)
        """
        self.step_count += 1
        self.total_latency += latency
        if self.min_latency is None or latency < self.min_latency:
            self.min_latency = latency
        if self.max_latency is None or latency > self.max_latency:
            self.max_latency = latency

    def record_epoch(self, monitored: float, lr_reduced: bool = False) -> bool:
        """
        Record a completed epoch.

        Args:
            monitored: Monitored value of the epoch (lower is better)
            lr_reduced: Whether the scheduler lowered the learning rate after it

        Returns:
            True if the epoch set a new best value
        """
        self.epoch_count += 1
        self.last_epoch_time = datetime.now()
        if lr_reduced:
            self.lr_reductions += 1
        if self.best_value is None or monitored < self.best_value:
            self.best_value = monitored
            self.best_epoch = self.epoch_count
            return True
        return False

    @property
    def avg_latency(self) -> float:
        """Average step latency in seconds, or 0.0 before the first step."""
        if self.step_count == 0:
            return 0.0
        return self.total_latency / self.step_count

    @property
    def elapsed(self) -> float:
        """Seconds since collection started."""
        return (datetime.now() - self.start_time).total_seconds()

    def reset(self) -> None:
        """Reset all metrics."""
        self.step_count = 0
        self.total_latency = 0.0
        self.min_latency = None
        self.max_latency = None
        self.epoch_count = 0
        self.best_epoch = None
        self.best_value = None
        self.lr_reductions = 0
        self.start_time = datetime.now()
        self.last_epoch_time = None

    def to_dict(self) -> dict[str, Any]:
        """Dictionary form stored in run directories."""
        return {
            "step_count": self.step_count,
            "avg_latency": self.avg_latency,
            "min_latency": self.min_latency,
            "max_latency": self.max_latency,
            "epoch_count": self.epoch_count,
            "best_epoch": self.best_epoch,
            "best_value": self.best_value,
            "lr_reductions": self.lr_reductions,
            "start_time": self.start_time.isoformat(),
            "last_epoch_time": self.last_epoch_time.isoformat() if self.last_epoch_time else None,
        }

    def get_summary(self) -> str:
        """
        Human-readable one-line summary.

        Example:
            >>> print(metrics.get_summary())
        """
        best = "n/a" if self.best_value is None else f"{self.best_value:.6g} @ epoch {self.best_epoch}"
        return (
            f"Epochs: {self.epoch_count} | "
            f"Steps: {self.step_count} | "
            f"Step latency: avg={self.avg_latency:.4f}s "
            f"min={self.min_latency or 0:.4f}s "
            f"max={self.max_latency or 0:.4f}s | "
            f"Best: {best} | "
            f"LR reductions: {self.lr_reductions}"
        )
