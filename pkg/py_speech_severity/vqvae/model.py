"""
Masked VQ-VAE over FVTC matrices.

The encoder runs a 1-D convolution across the lag axis (channel pairs as input
channels), flattens and projects to a latent grid [G x L]. Each grid row snaps
to its nearest codebook entry; the decoder maps the quantized grid back to a
[36 x (D+1)] reconstruction of the unmasked input.
"""

# Python imports
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import msgspec
import numpy as np
from msgspec import Struct
from scipy.stats import entropy

# Local imports
from ..exceptions import CheckpointError, DataError, ShapeError
from ..fvtc import N_PAIRS, FVTCMatrix
from ..tensorcore import (
    ParameterSet,
    SeedLike,
    Tensor,
    conv1d_forward,
    detach,
    dropout_count,
    gather_rows,
    linear_forward,
    load_checkpoint,
    mse_loss,
    mul,
    reduce_sum,
    relu_forward,
    reshape,
    save_checkpoint,
    scale,
    seed_rng,
    straight_through,
    sub,
    uniform_init,
)

EMBEDDING_DIM = 1024


class VQVAEConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    VQ-VAE architecture.

    Attributes:
        D: Maximum FVTC lag; inputs are [36 x (D+1)]
        conv_channels: Output channels of the encoder convolution
        kernel_size: Odd kernel of the encoder convolution (same padding)
        groups: Latent grid rows G
        latent_dim: Latent width L (G * L must be 1024)
        codebook_size: Number of codes K (>= 2)
        hidden_dim: Hidden width of the decoder
        beta: Commitment weight
        mask_fraction: Fraction p of input entries masked during training
    """

    D: int = 50
    conv_channels: int = 8
    kernel_size: int = 3
    groups: int = 16
    latent_dim: int = 64
    codebook_size: int = 256
    hidden_dim: int = 256
    beta: float = 0.25
    mask_fraction: float = 0.25

    def __post_init__(self) -> None:
        """
        Validate configuration after initialization.

        Raises:
            ValueError: If any field is out of range
        """
        if self.D < 0:
            raise ValueError(f"D must be >= 0, got {self.D}")
        if self.groups * self.latent_dim != EMBEDDING_DIM:
            raise ValueError(f"groups * latent_dim must be {EMBEDDING_DIM}, got {self.groups} * {self.latent_dim}")
        if self.codebook_size < 2:
            raise ValueError(f"codebook_size must be >= 2, got {self.codebook_size}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be a positive odd number, got {self.kernel_size}")
        if self.conv_channels < 1 or self.hidden_dim < 1:
            raise ValueError("conv_channels and hidden_dim must be >= 1")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not 0.0 <= self.mask_fraction < 1.0:
            raise ValueError(f"mask_fraction must be in [0, 1), got {self.mask_fraction}")

    @property
    def input_shape(self) -> tuple[int, int]:
        """FVTC matrix shape (36, D+1)."""
        return (N_PAIRS, self.D + 1)


@dataclass
class Codebook:
    """
    Quantization table.

    Attributes:
        entries: Learnable codes [K x L]
        usage: Per-code selection counts since the last reset
    """

    entries: Tensor
    usage: np.ndarray

    @property
    def size(self) -> int:
        """Number of codes K."""
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        """Code width L."""
        return self.entries.shape[1]

    def record_usage(self, indices: np.ndarray) -> None:
        """Count code selections."""
        self.usage += np.bincount(np.asarray(indices).reshape(-1), minlength=self.size)

    def reset_usage(self) -> None:
        """Zero the usage counts."""
        self.usage[:] = 0

    def perplexity(self) -> float:
        """Perplexity of the recorded usage (1.0 when nothing was recorded)."""
        if self.usage.sum() == 0:
            return 1.0
        return float(math.exp(entropy(self.usage)))


class VQVAEModel:
    """
    Encoder, codebook and decoder parameters of a VQ-VAE.

    Parameters are registered in a fixed order: encoder.conv.*, encoder.proj.*,
    codebook.entries, decoder.hidden.*, decoder.out.*. Encoder and decoder
    weights are U(+-1/sqrt(fan_in)); codes are U(+-1/K).

    Example:
        >>> model = VQVAEModel(VQVAEConfig(D=10), seed=0)
        >>> model.params.num_parameters() > 0
        True
    """

    def __init__(self, config: VQVAEConfig, seed: int = 0) -> None:
        self.config = config
        self.seed = seed
        self.params = ParameterSet()
        c, k = config.conv_channels, config.kernel_size
        flat = c * (config.D + 1)
        out = N_PAIRS * (config.D + 1)
        self._add("encoder.conv.weight", (c, N_PAIRS, k), N_PAIRS * k)
        self._add("encoder.conv.bias", (c,), N_PAIRS * k)
        self._add("encoder.proj.weight", (flat, EMBEDDING_DIM), flat)
        self._add("encoder.proj.bias", (EMBEDDING_DIM,), flat)
        bound = 1.0 / config.codebook_size
        entries = seed_rng([seed, 0]).uniform(-bound, bound, size=(config.codebook_size, config.latent_dim))
        self.params.add("codebook.entries", Tensor(entries))
        self._add("decoder.hidden.weight", (EMBEDDING_DIM, config.hidden_dim), EMBEDDING_DIM)
        self._add("decoder.hidden.bias", (config.hidden_dim,), EMBEDDING_DIM)
        self._add("decoder.out.weight", (config.hidden_dim, out), config.hidden_dim)
        self._add("decoder.out.bias", (out,), config.hidden_dim)
        self.codebook = Codebook(self.params["codebook.entries"], np.zeros(config.codebook_size, dtype=np.int64))

    def _add(self, name: str, shape: tuple[int, ...], fan_in: int) -> None:
        self.params.add(name, uniform_init(name, shape, fan_in, self.seed))

    def encode(self, x: Tensor) -> Tensor:
        """Latent grid [B x G x L] of an input batch [B x 36 x (D+1)]."""
        cfg = self.config
        p = self.params
        h = conv1d_forward(x, p["encoder.conv.weight"], p["encoder.conv.bias"], padding=cfg.kernel_size // 2)
        h = relu_forward(h)
        flat = reshape(h, (x.shape[0], cfg.conv_channels * (cfg.D + 1)))
        z = linear_forward(flat, p["encoder.proj.weight"], p["encoder.proj.bias"])
        return reshape(z, (x.shape[0], cfg.groups, cfg.latent_dim))

    def decode(self, quantized: Tensor) -> Tensor:
        """Reconstruction [B x 36 x (D+1)] of a quantized grid [B x G x L]."""
        p = self.params
        batch = quantized.shape[0]
        flat = reshape(quantized, (batch, EMBEDDING_DIM))
        h = relu_forward(linear_forward(flat, p["decoder.hidden.weight"], p["decoder.hidden.bias"]))
        out = linear_forward(h, p["decoder.out.weight"], p["decoder.out.bias"])
        return reshape(out, (batch, *self.config.input_shape))

    def checkpoint_metadata(self) -> dict[str, object]:
        """Metadata stored with checkpoints: {D, G, L, K, beta, p} plus the full config."""
        cfg = self.config
        return {
            "model": "vqvae",
            "D": cfg.D,
            "G": cfg.groups,
            "L": cfg.latent_dim,
            "K": cfg.codebook_size,
            "beta": cfg.beta,
            "p": cfg.mask_fraction,
            "config": msgspec.to_builtins(cfg),
        }


@dataclass(frozen=True)
class VQLossBreakdown:
    """
    Loss terms of one forward pass (or their mean over a dataset).

    total = reconstruction + beta * commitment + codebook.
    """

    reconstruction: float
    commitment: float
    codebook: float
    total: float

    @classmethod
    def mean(cls, items: Sequence[VQLossBreakdown], weights: Sequence[float] | None = None) -> VQLossBreakdown:
        """Weighted mean of several breakdowns."""
        if not items:
            raise DataError("Cannot average an empty list of losses")
        w = np.ones(len(items)) if weights is None else np.asarray(weights, dtype=np.float64)
        w = w / w.sum()

        def avg(name: str) -> float:
            return float(sum(wi * getattr(item, name) for wi, item in zip(w, items, strict=True)))

        return cls(avg("reconstruction"), avg("commitment"), avg("codebook"), avg("total"))

    def to_dict(self) -> dict[str, float]:
        """Plain dictionary form."""
        return {
            "reconstruction": self.reconstruction,
            "commitment": self.commitment,
            "codebook": self.codebook,
            "total": self.total,
        }


@dataclass
class QuantizerOutput:
    """Result of quantize(): straight-through output, code indices and the two VQ loss terms."""

    quantized: Tensor
    indices: np.ndarray
    codebook_loss: Tensor
    commitment_loss: Tensor


@dataclass
class VQForward:
    """
    Graph of one batched forward pass.

    Attributes:
        latents: Encoder output [B x G x L]
        quantized: Straight-through quantized grid [B x G x L]
        indices: Code indices [B x G]
        reconstruction: Decoder output [B x 36 x (D+1)]
        reconstruction_loss: MSE against the unmasked input
        commitment_loss: Commitment term
        codebook_loss: Codebook term
        total_loss: reconstruction + beta * commitment + codebook
        masks: Boolean masks [B x 36 x (D+1)], True where an entry was zeroed
        codebook: Codebook entries used for the nearest-code search
    """

    latents: Tensor
    quantized: Tensor
    indices: np.ndarray
    reconstruction: Tensor
    reconstruction_loss: Tensor
    commitment_loss: Tensor
    codebook_loss: Tensor
    total_loss: Tensor
    masks: np.ndarray
    codebook: np.ndarray

    def breakdown(self) -> VQLossBreakdown:
        """Float values of the loss terms."""
        return VQLossBreakdown(
            reconstruction=self.reconstruction_loss.item(),
            commitment=self.commitment_loss.item(),
            codebook=self.codebook_loss.item(),
            total=self.total_loss.item(),
        )


def matrix_values(matrix: FVTCMatrix | np.ndarray) -> np.ndarray:
    return np.asarray(matrix.values if isinstance(matrix, FVTCMatrix) else matrix, dtype=np.float64)


def mask_input(matrix: FVTCMatrix | np.ndarray, p: float, seed: SeedLike = 0) -> tuple[np.ndarray, np.ndarray]:
    """
    Zero an exact-count random subset of entries.

    Exactly floor(p * M + 0.5) of the M entries are chosen uniformly without
    replacement from a generator seeded with `seed`.

    Returns:
        (masked copy of the values, boolean mask with True at zeroed entries)

    Raises:
        DataError: If p is not in [0, 1)
    """
    if not 0.0 <= p < 1.0:
        raise DataError("Mask fraction must be in [0, 1)", str(p))
    values = matrix_values(matrix)
    mask = np.zeros(values.size, dtype=bool)
    count = dropout_count(p, values.size)
    if count:
        mask[seed_rng(seed).choice(values.size, size=count, replace=False)] = True
    mask = mask.reshape(values.shape)
    masked = values.copy()
    masked[mask] = 0.0
    return masked, mask


def nearest_codes(latents: np.ndarray, entries: np.ndarray) -> np.ndarray:
    """Index of the nearest entry (squared Euclidean, ties to the lowest index) for every row."""
    distances = ((latents[:, None, :] - entries[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(distances, axis=1)


def _mean_row_sq(diff: Tensor) -> Tensor:
    return scale(reduce_sum(mul(diff, diff)), 1.0 / diff.shape[0])


def quantize(latents: Tensor, codebook: Codebook | Tensor) -> QuantizerOutput:
    """
    Snap each latent row [N x L] to its nearest code.

    codebook_loss = mean over rows of ||stopgrad(z_e) - e||^2 (trains the codes),
    commitment_loss = mean over rows of ||z_e - stopgrad(e)||^2 (trains the
    encoder). The quantized output carries the code values forward and passes
    its gradient to `latents` unchanged.

    Raises:
        DataError: If the codebook is empty
        ShapeError: If the latent width differs from the code width
    """
    entries = codebook.entries if isinstance(codebook, Codebook) else codebook
    if entries.ndim != 2 or entries.shape[0] == 0:
        raise DataError("Empty codebook", str(entries.shape))
    if latents.ndim != 2 or latents.shape[1] != entries.shape[1]:
        raise ShapeError(
            "Latent width does not match the codebook", f"latents {latents.shape}, codebook {entries.shape}"
        )
    indices = nearest_codes(latents.data, entries.data)
    selected = gather_rows(entries, indices)
    return QuantizerOutput(
        quantized=straight_through(latents, selected.data),
        indices=indices,
        codebook_loss=_mean_row_sq(sub(detach(latents), selected)),
        commitment_loss=_mean_row_sq(sub(latents, detach(selected))),
    )


def forward_batch(
    model: VQVAEModel,
    inputs: np.ndarray,
    masked: np.ndarray | None = None,
    masks: np.ndarray | None = None,
) -> VQForward:
    """
    Batched forward pass.

    Args:
        model: VQ-VAE
        inputs: Unmasked matrices [B x 36 x (D+1)] (reconstruction targets)
        masked: Encoder inputs (defaults to `inputs`)
        masks: Masks that produced `masked` (defaults to all False)

    Raises:
        ShapeError: If the batch does not match the model's input shape
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3 or inputs.shape[1:] != model.config.input_shape:
        raise ShapeError(
            "VQ-VAE input shape mismatch", f"expected [B x {model.config.input_shape}], got {inputs.shape}"
        )
    encoder_input = inputs if masked is None else np.asarray(masked, dtype=np.float64)
    batch = inputs.shape[0]
    cfg = model.config
    latents = model.encode(Tensor(encoder_input))
    codebook_entries = model.codebook.entries.data
    quant = quantize(reshape(latents, (batch * cfg.groups, cfg.latent_dim)), model.codebook)
    quantized = reshape(quant.quantized, (batch, cfg.groups, cfg.latent_dim))
    reconstruction = model.decode(quantized)
    recon_loss = mse_loss(reconstruction, inputs)
    total = recon_loss + scale(quant.commitment_loss, cfg.beta) + quant.codebook_loss
    return VQForward(
        latents=latents,
        quantized=quantized,
        indices=quant.indices.reshape(batch, cfg.groups),
        reconstruction=reconstruction,
        reconstruction_loss=recon_loss,
        commitment_loss=quant.commitment_loss,
        codebook_loss=quant.codebook_loss,
        total_loss=total,
        masks=np.zeros(inputs.shape, dtype=bool) if masks is None else np.asarray(masks, dtype=bool),
        codebook=codebook_entries,
    )


def vqvae_forward(
    model: VQVAEModel,
    matrix: FVTCMatrix | np.ndarray,
    training: bool = False,
    seed: SeedLike = 0,
) -> tuple[np.ndarray, VQLossBreakdown, np.ndarray]:
    """
    Mask (training only), encode, quantize and decode one FVTC matrix.

    Returns:
        (reconstruction [36 x (D+1)], loss breakdown, code indices [G])

    Raises:
        ShapeError: If the matrix shape does not match the model
    """
    values = matrix_values(matrix)
    if values.shape != model.config.input_shape:
        raise ShapeError("VQ-VAE input shape mismatch", f"expected {model.config.input_shape}, got {values.shape}")
    masked, mask = mask_input(values, model.config.mask_fraction if training else 0.0, seed)
    result = forward_batch(model, values[None], masked[None], mask[None])
    return result.reconstruction.data[0].copy(), result.breakdown(), result.indices[0].copy()


def concise_representation(model: VQVAEModel, matrix: FVTCMatrix | np.ndarray) -> np.ndarray:
    """
    1024-dim concise representation: the quantized grid flattened row-major.

    No masking is applied, so every L-wide slice is exactly a codebook row.

    Raises:
        ShapeError: If the matrix shape does not match the model
    """
    values = matrix_values(matrix)
    if values.shape != model.config.input_shape:
        raise ShapeError("VQ-VAE input shape mismatch", f"expected {model.config.input_shape}, got {values.shape}")
    latents = model.encode(Tensor(values[None])).data.reshape(model.config.groups, model.config.latent_dim)
    entries = model.codebook.entries.data
    return entries[nearest_codes(latents, entries)].reshape(EMBEDDING_DIM).copy()


def codebook_perplexity(indices: Sequence[int] | np.ndarray) -> float:
    """
    exp(entropy) of the empirical code usage; 1 for a single code, K for uniform usage.

    Raises:
        DataError: If no indices are given
    """
    flat = np.asarray(indices, dtype=np.int64).reshape(-1)
    if flat.size == 0:
        raise DataError("Perplexity needs at least one code index")
    return float(math.exp(entropy(np.bincount(flat))))


def save_vqvae(path: str | Path, model: VQVAEModel, optimizer: dict[str, object] | None = None, epoch: int = 0) -> Path:
    """Write a VQ-VAE checkpoint."""
    return save_checkpoint(path, model.params, optimizer, epoch, model.seed, model.checkpoint_metadata())


def load_vqvae(path: str | Path) -> VQVAEModel:
    """
    Rebuild a VQ-VAE from a checkpoint written by save_vqvae.

    Raises:
        CheckpointError: If the checkpoint does not hold a VQ-VAE
    """
    checkpoint = load_checkpoint(path)
    if checkpoint.extra.get("model") != "vqvae":
        raise CheckpointError("Not a VQ-VAE checkpoint", str(path))
    try:
        config = msgspec.convert(checkpoint.extra["config"], VQVAEConfig)
    except (KeyError, msgspec.ValidationError) as e:
        raise CheckpointError("Invalid VQ-VAE configuration in checkpoint", str(e)) from e
    model = VQVAEModel(config, seed=checkpoint.seed)
    checkpoint.load_into(model.params)
    return model
