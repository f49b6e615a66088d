"""
Adam optimizer.
"""

# Python imports
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Local imports
from ..exceptions import MissingGradientError
from .parameters import ParameterSet


@dataclass
class OptimizerState:
    """
    Adam state.

    Attributes:
        lr: Learning rate
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator offset
        step: Number of updates applied
        first_moment: Per-parameter first moments
        second_moment: Per-parameter second moments
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_parameters(
        cls,
        params: ParameterSet,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> OptimizerState:
        """Fresh state with zero moments shaped like the parameters."""
        return cls(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            first_moment={name: np.zeros(t.shape) for name, t in params.items()},
            second_moment={name: np.zeros(t.shape) for name, t in params.items()},
        )

    def hyperparameters(self) -> dict[str, float | int]:
        """Serializable hyperparameters and step counter."""
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "step": self.step}


def adam_step(params: ParameterSet, state: OptimizerState) -> OptimizerState:
    """
    Apply one bias-corrected Adam update in place.

    Args:
        params: Parameters with populated gradients
        state: Optimizer state (updated in place)

    Returns:
        The updated state

    Raises:
        MissingGradientError: If any parameter has no gradient
    """
    missing = [name for name, t in params.items() if t.grad is None]
    if missing:
        raise MissingGradientError("Parameters without gradients", ", ".join(missing))
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, tensor in params.items():
        grad = tensor.grad
        m = state.first_moment.setdefault(name, np.zeros(tensor.shape))
        v = state.second_moment.setdefault(name, np.zeros(tensor.shape))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        tensor.data = tensor.data - state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return state
