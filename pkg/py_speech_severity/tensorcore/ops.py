"""
Layer operations: fully connected, 1-D convolution, activations, dropout,
pooling, softmax and the mean squared error loss.
"""

# Python imports
from __future__ import annotations

import math

import numpy as np

# Local imports
from ..exceptions import DataError, ShapeError
from .tensor import SeedLike, Tensor, add, as_tensor, make_result, matmul, seed_rng


def linear_forward(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    """
    Fully connected layer y = xW + b over the last axis.

    Args:
        x: Input [..., F_in]
        W: Weights [F_in x F_out]
        b: Bias [F_out] or None

    Raises:
        ShapeError: If the shapes do not agree
    """
    if W.ndim != 2 or x.shape[-1] != W.shape[0]:
        raise ShapeError("linear shape mismatch", f"x {x.shape}, W {W.shape}")
    if b is not None and b.shape != (W.shape[1],):
        raise ShapeError("linear bias shape mismatch", f"b {b.shape}, W {W.shape}")
    y = matmul(x, W)
    return add(y, b) if b is not None else y


def conv_output_length(length: int, kernel: int, stride: int = 1, padding: int = 0) -> int:
    """floor((L + 2*padding - k) / stride) + 1."""
    return (length + 2 * padding - kernel) // stride + 1


def conv1d_forward(
    x: Tensor,
    kernels: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    1-D cross-correlation.

    Args:
        x: Input [B x C_in x L]
        kernels: Weights [C_out x C_in x k]
        bias: Optional bias [C_out]
        stride: Step between output positions (>= 1)
        padding: Zeros added on both ends

    Returns:
        Output [B x C_out x L_out], L_out = floor((L + 2*padding - k)/stride) + 1

    Raises:
        ShapeError: If channel counts differ or the kernel exceeds the padded input
    """
    if x.ndim != 3 or kernels.ndim != 3 or x.shape[1] != kernels.shape[1]:
        raise ShapeError("conv1d shape mismatch", f"x {x.shape}, kernels {kernels.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError("conv1d needs stride >= 1 and padding >= 0", f"stride {stride}, padding {padding}")
    batch, _, length = x.shape
    c_out, _, k = kernels.shape
    if k > length + 2 * padding:
        raise ShapeError("Kernel larger than padded input", f"k={k}, L={length}, padding={padding}")
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError("conv1d bias shape mismatch", f"bias {bias.shape}, C_out {c_out}")
    l_out = conv_output_length(length, k, stride, padding)
    span = stride * (l_out - 1) + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    w = kernels.data
    out = np.zeros((batch, c_out, l_out))
    for j in range(k):
        out += np.einsum("oc,bcl->bol", w[:, :, j], xp[:, :, j : j + span : stride], optimize=True)
    if bias is not None:
        out += bias.data[None, :, None]

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for j in range(k):
                gxp[:, :, j : j + span : stride] += np.einsum("oc,bol->bcl", w[:, :, j], g, optimize=True)
            x.accumulate(gxp[:, :, padding : padding + length])
        if kernels.requires_grad:
            gw = np.empty_like(w)
            for j in range(k):
                gw[:, :, j] = np.einsum("bol,bcl->oc", g, xp[:, :, j : j + span : stride], optimize=True)
            kernels.accumulate(gw)
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2)))

    parents = (x, kernels) if bias is None else (x, kernels, bias)
    return make_result(out, parents, backward)


def relu_forward(x: Tensor) -> Tensor:
    """max(x, 0)."""
    active = x.data > 0

    def backward(g: np.ndarray) -> None:
        x.accumulate(g * active)

    return make_result(x.data * active, (x,), backward)


def dropout_count(p: float, n: int) -> int:
    """Number of dropped elements: p * n rounded half up."""
    return int(math.floor(p * n + 0.5))


def dropout_forward(x: Tensor, p: float, training: bool, seed: SeedLike = 0) -> Tensor:
    """
    Exact-count dropout.

    In training mode exactly round(p * n) elements, chosen without replacement
    from a generator seeded with `seed`, are zeroed and the rest are scaled by
    1 / (1 - p). Evaluation mode and p = 0 return the input unchanged.

    Raises:
        DataError: If p is not in [0, 1)
    """
    if not 0.0 <= p < 1.0:
        raise DataError("Dropout probability must be in [0, 1)", str(p))
    if not training or p == 0.0:
        return x
    n = x.size
    keep = np.ones(n)
    keep[seed_rng(seed).choice(n, size=dropout_count(p, n), replace=False)] = 0.0
    factor = keep.reshape(x.shape) / (1.0 - p)

    def backward(g: np.ndarray) -> None:
        x.accumulate(g * factor)

    return make_result(x.data * factor, (x,), backward)


def mean_pool_forward(x: Tensor, axis: int = 0, mask: np.ndarray | None = None) -> Tensor:
    """
    Mean over one axis, optionally restricted to valid positions.

    Args:
        x: Input tensor
        axis: Axis to average over
        mask: Boolean array of shape x.shape[: axis + 1]; True marks valid positions

    Raises:
        ShapeError: If the mask shape is wrong
        DataError: If some pooled slice has no valid position
    """
    axis = axis % x.ndim
    if mask is None:
        weights = np.full(x.shape[axis], 1.0 / x.shape[axis])
        shape = [1] * x.ndim
        shape[axis] = x.shape[axis]
        weights = weights.reshape(shape)
    else:
        valid = np.asarray(mask, dtype=bool)
        if valid.shape != x.shape[: axis + 1]:
            raise ShapeError("Pooling mask shape mismatch", f"mask {valid.shape}, expected {x.shape[: axis + 1]}")
        counts = valid.sum(axis=axis, keepdims=True)
        if np.any(counts == 0):
            raise DataError("Pooling over a fully masked slice", f"mask shape {valid.shape}")
        weights = (valid / counts).reshape(valid.shape + (1,) * (x.ndim - axis - 1))
    weights = np.broadcast_to(weights, x.shape)

    def backward(g: np.ndarray) -> None:
        x.accumulate(np.expand_dims(g, axis) * weights)

    return make_result((x.data * weights).sum(axis=axis), (x,), backward)


def softmax_forward(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """
    Softmax along an axis; positions where mask is False get weight 0.

    Raises:
        DataError: If a row has no valid position
    """
    logits = x.data
    if mask is not None:
        valid = np.broadcast_to(np.asarray(mask, dtype=bool), logits.shape)
        if np.any(~valid.any(axis=axis)):
            raise DataError("Fully masked attention row", f"logits shape {logits.shape}")
        logits = np.where(valid, logits, -np.inf)
    shifted = np.exp(logits - logits.max(axis=axis, keepdims=True))
    y = shifted / shifted.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> None:
        x.accumulate(y * (g - (g * y).sum(axis=axis, keepdims=True)))

    return make_result(y, (x,), backward)


def mse_loss(pred: Tensor, target: Tensor | np.ndarray) -> Tensor:
    """
    Mean of squared differences; gradient 2 (pred - target) / n.

    Raises:
        ShapeError: If the shapes differ
    """
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError("mse_loss shape mismatch", f"pred {pred.shape}, target {target.shape}")
    diff = pred.data - target.data
    n = diff.size

    def backward(g: np.ndarray) -> None:
        grad = g * 2.0 * diff / n
        if pred.requires_grad:
            pred.accumulate(grad)
        if target.requires_grad:
            target.accumulate(-grad)

    return make_result(np.array((diff * diff).sum() / n), (pred, target), backward)
