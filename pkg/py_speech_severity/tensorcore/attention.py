"""
Multi-head scaled dot-product attention with learned projections.
"""

# Python imports
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Local imports
from ..exceptions import ShapeError
from .ops import linear_forward, softmax_forward
from .parameters import ParameterSet, uniform_init
from .tensor import Tensor, matmul, reshape, scale, transpose

MHA_PARAMETER_NAMES = ("q_weight", "q_bias", "k_weight", "v_weight", "v_bias", "o_weight", "o_bias")


@dataclass(frozen=True)
class MHAParams:
    """
    Projection parameters of one attention layer. The key projection has no bias.
    """

    q_weight: Tensor
    q_bias: Tensor
    k_weight: Tensor
    v_weight: Tensor
    v_bias: Tensor
    o_weight: Tensor
    o_bias: Tensor

    @property
    def embed_dim(self) -> int:
        """Model width E."""
        return self.q_weight.shape[0]

    @classmethod
    def from_parameters(cls, params: ParameterSet, prefix: str) -> MHAParams:
        """Collect the projections registered under `prefix.`."""
        return cls(**{name: params[f"{prefix}.{name}"] for name in MHA_PARAMETER_NAMES})


def init_mha_parameters(params: ParameterSet, prefix: str, embed_dim: int, seed: int) -> MHAParams:
    """Register uniformly initialized projections under `prefix.` and return them."""
    for name in MHA_PARAMETER_NAMES:
        shape = (embed_dim, embed_dim) if name.endswith("weight") else (embed_dim,)
        params.add(f"{prefix}.{name}", uniform_init(f"{prefix}.{name}", shape, embed_dim, seed))
    return MHAParams.from_parameters(params, prefix)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    batch, length, width = x.shape
    return transpose(reshape(x, (batch, length, heads, width // heads)), (0, 2, 1, 3))


def mha_forward(
    query: Tensor,
    key: Tensor,
    value: Tensor,
    params: MHAParams,
    heads: int,
    mask: np.ndarray | None = None,
    return_weights: bool = False,
) -> Tensor | tuple[Tensor, Tensor]:
    """
    Multi-head attention.

    Args:
        query: [B x S x E]
        key: [B x S_k x E]
        value: [B x S_k x E]
        params: Projection parameters
        heads: Number of heads; E must be divisible by it
        mask: Optional boolean [B x S_k]; True marks keys that may be attended to
        return_weights: Also return the attention weights [B x heads x S x S_k]

    Returns:
        Output [B x S x E] (and the weights when requested)

    Raises:
        ShapeError: If E is not divisible by heads or shapes disagree
        DataError: If a batch row has every key masked
    """
    if query.ndim != 3 or key.ndim != 3 or value.ndim != 3:
        raise ShapeError("Attention inputs must be [B x S x E]", f"{query.shape}, {key.shape}, {value.shape}")
    batch, _, width = query.shape
    if heads < 1 or width % heads != 0:
        raise ShapeError("Embedding width not divisible by heads", f"E={width}, heads={heads}")
    if key.shape != value.shape or key.shape[0] != batch or key.shape[2] != width or params.embed_dim != width:
        raise ShapeError("Attention shape mismatch", f"q {query.shape}, k {key.shape}, v {value.shape}")
    q = _split_heads(linear_forward(query, params.q_weight, params.q_bias), heads)
    k = _split_heads(linear_forward(key, params.k_weight), heads)
    v = _split_heads(linear_forward(value, params.v_weight, params.v_bias), heads)
    scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(width // heads))
    key_mask = None
    if mask is not None:
        valid = np.asarray(mask, dtype=bool)
        if valid.shape != (batch, key.shape[1]):
            raise ShapeError("Attention mask shape mismatch", f"mask {valid.shape}, expected {(batch, key.shape[1])}")
        key_mask = valid[:, None, None, :]
    weights = softmax_forward(scores, axis=-1, mask=key_mask)
    context = transpose(matmul(weights, v), (0, 2, 1, 3))
    merged = reshape(context, (batch, query.shape[1], width))
    out = linear_forward(merged, params.o_weight, params.o_bias)
    return (out, weights) if return_weights else out
