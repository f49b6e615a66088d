"""
Central finite-difference verification of analytic gradients.
"""

# Python imports
from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

# Local imports
from ..exceptions import NonFiniteError
from .tensor import Tensor

_DENOMINATOR_FLOOR = 1e-8


def _reduce(output: Tensor, cotangent: np.ndarray) -> float:
    return float((output.data * cotangent).sum())


def grad_check(
    op: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """
    Compare analytic gradients with central differences.

    Scalar outputs use a cotangent of 1; others are reduced to a scalar with a fixed random cotangent
    drawn from `seed`. Every coordinate of every input tensor is perturbed by
    +/- h in double precision.

    Args:
        op: Differentiable function of the inputs
        inputs: Tensors to differentiate with respect to (modified temporarily)
        h: Finite-difference step
        seed: Seed of the cotangent

    Returns:
        max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)

    Raises:
        NonFiniteError: If the function or a gradient is not finite
    """
    for tensor in inputs:
        tensor.data = np.ascontiguousarray(tensor.data)
        tensor.requires_grad = True
        tensor.zero_grad()
    output = op(*inputs)
    if not np.all(np.isfinite(output.data)):
        raise NonFiniteError("Function output is not finite", f"shape {output.shape}")
    if output.size == 1:
        cotangent = np.ones(output.shape)
    else:
        cotangent = np.random.default_rng(seed).normal(size=output.shape)
    output.backward(cotangent)
    worst = 0.0
    for tensor in inputs:
        analytic = np.zeros(tensor.shape) if tensor.grad is None else tensor.grad.copy()
        if not np.all(np.isfinite(analytic)):
            raise NonFiniteError("Analytic gradient is not finite", tensor.name or str(tensor.shape))
        flat = tensor.data.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = _reduce(op(*inputs), cotangent)
            flat[i] = original - h
            minus = _reduce(op(*inputs), cotangent)
            flat[i] = original
            numeric = (plus - minus) / (2.0 * h)
            if not np.isfinite(numeric):
                raise NonFiniteError("Finite difference is not finite", f"{tensor.name or tensor.shape}[{i}]")
            exact = analytic.reshape(-1)[i]
            denominator = max(abs(exact), abs(numeric), _DENOMINATOR_FLOOR)
            worst = max(worst, abs(exact - numeric) / denominator)
    return worst
