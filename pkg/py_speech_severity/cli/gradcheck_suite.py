"""
Gradient-check suite over every differentiable op and the full models.

Each case builds small double-precision inputs from a fixed seed, so the
suite is deterministic and runs in seconds.
"""

# Python imports
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import cast

import numpy as np
from loguru import logger

# Local imports
from ..fusion import BranchConfig, ConvLayerSpec, FusionConfig, FusionModel, HeadConfig, SessionInputs, UnimodalModel
from ..tensorcore import (
    Tensor,
    add,
    concat,
    conv1d_forward,
    dropout_forward,
    gather_rows,
    grad_check,
    init_mha_parameters,
    linear_forward,
    matmul,
    mean_pool_forward,
    mha_forward,
    mse_loss,
    mul,
    reduce_mean,
    reduce_sum,
    relu_forward,
    reshape,
    scale,
    softmax_forward,
    sub,
    transpose,
)
from ..tensorcore.parameters import ParameterSet
from ..vqvae import VQVAEConfig, VQVAEModel, forward_batch

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_STEP = 1e-5

CaseBuilder = Callable[[np.random.Generator], tuple[Callable[..., Tensor], list[Tensor]]]


@dataclass(frozen=True)
class GradCheckCase:
    """A named function and the tensors it is differentiated against."""

    name: str
    build: CaseBuilder


@dataclass(frozen=True)
class GradCheckResult:
    """Max relative error of one case."""

    name: str
    error: float
    n_inputs: int

    @property
    def passed(self) -> bool:
        """Whether the error is within tolerance."""
        return self.error <= GRADCHECK_TOLERANCE

    def to_dict(self) -> dict[str, object]:
        """JSON-ready form."""
        return {"name": self.name, "max_rel_error": self.error, "n_inputs": self.n_inputs, "passed": self.passed}


def _t(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True)


def _binary(fn: Callable[[Tensor, Tensor], Tensor]) -> CaseBuilder:
    def build(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
        return fn, [_t(rng, 3, 4), _t(rng, 3, 4)]

    return build


def _broadcast_add(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return add, [_t(rng, 3, 4), _t(rng, 4)]


def _scale(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return (lambda x: scale(x, -1.7)), [_t(rng, 2, 5)]


def _matmul(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return matmul, [_t(rng, 2, 3, 4), _t(rng, 2, 4, 5)]


def _reshape_transpose(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return (lambda x: transpose(reshape(x, (2, 3, 4)), (2, 0, 1))), [_t(rng, 6, 4)]


def _reductions(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return (lambda x: add(reduce_sum(x, axis=1), reduce_mean(x, axis=1))), [_t(rng, 3, 5)]


def _concat(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return (lambda a, b: concat([a, b], axis=1)), [_t(rng, 2, 3), _t(rng, 2, 4)]


def _gather_rows(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    indices = np.array([2, 0, 2, 1])
    return (lambda table: gather_rows(table, indices)), [_t(rng, 4, 3)]


def _linear(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return linear_forward, [_t(rng, 2, 3, 4), _t(rng, 4, 5), _t(rng, 5)]


def _conv1d(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    inputs = [_t(rng, 2, 3, 7), _t(rng, 4, 3, 3), _t(rng, 4)]
    return (lambda x, w, b: conv1d_forward(x, w, b, stride=2, padding=1)), inputs


def _relu(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    x = rng.normal(size=(4, 5))
    # keep inputs away from the kink
    x = np.where(np.abs(x) < 0.05, 0.5, x)
    return relu_forward, [Tensor(x, requires_grad=True)]


def _dropout(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return (lambda x: dropout_forward(x, 0.3, training=True, seed=7)), [_t(rng, 4, 5)]


def _mean_pool(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    mask = np.array([[True, True, False], [True, False, False]])
    return (lambda x: mean_pool_forward(x, axis=1, mask=mask)), [_t(rng, 2, 3, 4)]


def _softmax(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    mask = np.array([[True, True, True, False], [True, False, True, True], [True, True, True, True]])
    return (lambda x: softmax_forward(x, axis=-1, mask=mask)), [_t(rng, 3, 4)]


def _mse(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    return mse_loss, [_t(rng, 3, 4), _t(rng, 3, 4)]


def _mha(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    params = ParameterSet()
    mha = init_mha_parameters(params, "mha", 4, int(rng.integers(1 << 16)))
    query, key = _t(rng, 2, 3, 4), _t(rng, 2, 5, 4)
    mask = np.array([[True, True, True, False, True], [True, False, True, True, True]])

    def op(q: Tensor, k: Tensor, *_: Tensor) -> Tensor:
        return cast(Tensor, mha_forward(q, k, k, mha, heads=2, mask=mask))

    return op, [query, key, *(t for _, t in params.items())]


def _tiny_vqvae(rng: np.random.Generator) -> tuple[VQVAEModel, np.ndarray]:
    config = VQVAEConfig(D=2, conv_channels=2, groups=256, latent_dim=4, codebook_size=4, hidden_dim=2)
    model = VQVAEModel(config, seed=int(rng.integers(1 << 16)))
    return model, rng.normal(size=(1, *config.input_shape))


def _vq_decoder(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    model, x = _tiny_vqvae(rng)
    names = ("decoder.hidden.weight", "decoder.hidden.bias", "decoder.out.weight", "decoder.out.bias")
    return (lambda *_: forward_batch(model, x).total_loss), [model.params[n] for n in names]


def _vq_encoder(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    model, x = _tiny_vqvae(rng)
    names = ("encoder.conv.weight", "encoder.conv.bias", "encoder.proj.bias")
    return (lambda *_: forward_batch(model, x).commitment_loss), [model.params[n] for n in names]


def _vq_codebook(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    model, x = _tiny_vqvae(rng)
    return (lambda *_: forward_batch(model, x).codebook_loss), [model.params["codebook.entries"]]


def _tiny_branch(width: int) -> BranchConfig:
    return BranchConfig(input_dim=width, conv_layers=(ConvLayerSpec(4), ConvLayerSpec(4)), dropout=0.0, mha_heads=2)


def _fusion(with_mha: bool) -> Callable[[np.random.Generator], tuple[Callable[..., Tensor], list[Tensor]]]:
    def build(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
        config = FusionConfig(speech=_tiny_branch(8), artic=_tiny_branch(6), head=HeadConfig(hidden=(5,)))
        model = FusionModel(config, with_mha=with_mha, seed=int(rng.integers(1 << 16)))
        speech, artic = rng.normal(size=(3, 8)), rng.normal(size=(3, 6))
        return (lambda *_: model.fuse(speech, artic)), [t for _, t in model.params.items()]

    return build


def _unimodal(rng: np.random.Generator) -> tuple[Callable[..., Tensor], list[Tensor]]:
    model = UnimodalModel("artic", _tiny_branch(6), HeadConfig(hidden=(5,)), seed=int(rng.integers(1 << 16)))
    stack = rng.normal(size=(3, 6))

    def op(*_: Tensor) -> Tensor:
        return model.forward(SessionInputs(key="gradcheck", severity=0.0, artic=stack))

    return op, [t for _, t in model.params.items()]


def gradcheck_cases() -> list[GradCheckCase]:
    """Every case of the suite, in report order."""
    return [
        GradCheckCase("add", _binary(add)),
        GradCheckCase("add_broadcast", _broadcast_add),
        GradCheckCase("sub", _binary(sub)),
        GradCheckCase("mul", _binary(mul)),
        GradCheckCase("scale", _scale),
        GradCheckCase("matmul", _matmul),
        GradCheckCase("reshape_transpose", _reshape_transpose),
        GradCheckCase("reduce_sum_mean", _reductions),
        GradCheckCase("concat", _concat),
        GradCheckCase("gather_rows", _gather_rows),
        GradCheckCase("linear", _linear),
        GradCheckCase("conv1d", _conv1d),
        GradCheckCase("relu", _relu),
        GradCheckCase("dropout", _dropout),
        GradCheckCase("mean_pool_masked", _mean_pool),
        GradCheckCase("softmax_masked", _softmax),
        GradCheckCase("mse_loss", _mse),
        GradCheckCase("mha", _mha),
        GradCheckCase("vqvae_decoder_total_loss", _vq_decoder),
        GradCheckCase("vqvae_encoder_commitment_loss", _vq_encoder),
        GradCheckCase("vqvae_codebook_loss", _vq_codebook),
        GradCheckCase("fusion_mha", _fusion(True)),
        GradCheckCase("fusion_nomha", _fusion(False)),
        GradCheckCase("unimodal_artic", _unimodal),
    ]


def run_gradcheck_suite(seed: int = 0, cases: list[GradCheckCase] | None = None) -> list[GradCheckResult]:
    """
    Run every case with central differences (h = 1e-5).

    Args:
        seed: Seed of the case inputs and cotangents
        cases: Cases to run (defaults to the full suite)

    Returns:
        One result per case, in order
    """
    results = []
    for index, case in enumerate(cases or gradcheck_cases()):
        op, inputs = case.build(np.random.default_rng([seed, index]))
        error = grad_check(op, inputs, h=GRADCHECK_STEP, seed=seed)
        results.append(GradCheckResult(case.name, error, sum(t.size for t in inputs)))
        logger.debug(f"grad check {case.name}: max relative error {error:.3e}")
    return results
