"""
Masked VQ-VAE representation learner for FVTC matrices.
"""

# Local imports
from .model import (
    EMBEDDING_DIM,
    Codebook,
    QuantizerOutput,
    VQForward,
    VQLossBreakdown,
    VQVAEConfig,
    VQVAEModel,
    codebook_perplexity,
    concise_representation,
    forward_batch,
    load_vqvae,
    mask_input,
    matrix_values,
    nearest_codes,
    quantize,
    save_vqvae,
    vqvae_forward,
)
from .training import VQEpochRecord, VQVAETrainingConfig, evaluate_vqvae, train_vqvae

__all__ = [
    "EMBEDDING_DIM",
    "Codebook",
    "QuantizerOutput",
    "VQEpochRecord",
    "VQForward",
    "VQLossBreakdown",
    "VQVAEConfig",
    "VQVAEModel",
    "VQVAETrainingConfig",
    "codebook_perplexity",
    "concise_representation",
    "evaluate_vqvae",
    "forward_batch",
    "load_vqvae",
    "mask_input",
    "matrix_values",
    "nearest_codes",
    "quantize",
    "save_vqvae",
    "train_vqvae",
    "vqvae_forward",
]
