"""
Reduce-on-plateau learning-rate scheduler.
"""

# Python imports
from __future__ import annotations

import math
from dataclasses import dataclass, field

# Local imports
from ..exceptions import NonFiniteError


@dataclass
class PlateauScheduler:
    """
    Lowers the learning rate when a monitored metric stops improving.

    A metric improves when it is below best * (1 - rel_threshold). Once
    `patience` consecutive epochs pass without improvement the rate becomes
    max(lr * factor, min_lr) and the counter restarts.

    Attributes:
        lr: Current learning rate
        patience: Non-improving epochs tolerated before a reduction
        factor: Multiplicative reduction in (0, 1)
        min_lr: Floor of the learning rate
        rel_threshold: Relative improvement required
        best: Best metric seen so far
        epochs_since_improvement: Current non-improving streak
        history: Every metric passed to step()
        reductions: Number of reductions applied
    """

    lr: float
    patience: int = 10
    factor: float = 0.5
    min_lr: float = 1e-7
    rel_threshold: float = 1e-4
    best: float = math.inf
    epochs_since_improvement: int = 0
    history: list[float] = field(default_factory=list)
    reductions: int = 0

    def __post_init__(self) -> None:
        """Validate scheduler settings."""
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"factor must be in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.min_lr < 0:
            raise ValueError(f"min_lr must be >= 0, got {self.min_lr}")

    def step(self, metric: float) -> float:
        """Record one epoch's metric and return the learning rate to use next."""
        return plateau_step(self, metric)


def plateau_step(sched: PlateauScheduler, metric: float) -> float:
    """
    Advance the scheduler by one epoch.

    Raises:
        NonFiniteError: If the metric is NaN or infinite
    """
    if not math.isfinite(metric):
        raise NonFiniteError("Scheduler metric is not finite", str(metric))
    sched.history.append(metric)
    if metric < sched.best * (1.0 - sched.rel_threshold):
        sched.best = metric
        sched.epochs_since_improvement = 0
        return sched.lr
    sched.epochs_since_improvement += 1
    if sched.epochs_since_improvement >= sched.patience:
        reduced = max(sched.lr * sched.factor, sched.min_lr)
        if reduced < sched.lr:
            sched.reductions += 1
            sched.lr = reduced
        sched.epochs_since_improvement = 0
    return sched.lr
