"""
Two-branch CNN + MHA severity regressors.

A branch treats a session stack [S x E] as a 1-D signal over segments with
E input channels, runs a stack of convolutions (ReLU + dropout between
layers), optionally applies multi-head attention over the segment axis and
yields features [S' x F]. The fusion model mean-pools both branches over
segments, concatenates the pooled vectors and regresses a single severity
score with a fully connected head; unimodal baselines use one branch.
"""

# Python imports
from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Any

import msgspec
import numpy as np
from loguru import logger
from msgspec import Struct, field

# Local imports
from ..embeddings import SessionEmbeddingStack
from ..exceptions import CheckpointError, DataError, ShapeError
from ..tensorcore import (
    MHAParams,
    ParameterSet,
    SeedLike,
    Tensor,
    add,
    concat,
    conv1d_forward,
    dropout_forward,
    init_mha_parameters,
    linear_forward,
    load_checkpoint,
    mean_pool_forward,
    mha_forward,
    relu_forward,
    reshape,
    save_checkpoint,
    scale,
    transpose,
    uniform_init,
)

SPEECH = "speech"
ARTIC = "artic"


class Variant(StrEnum):
    """Trainable model variants."""

    FUSION_MHA = "fusion-mha"
    FUSION_NOMHA = "fusion-nomha"
    UNIMODAL_ARTIC = "unimodal-artic"
    UNIMODAL_SSL = "unimodal-ssl"


class ConvLayerSpec(Struct, frozen=True, forbid_unknown_fields=True):
    """One convolution layer of a branch."""

    channels: int
    kernel: int = 3
    stride: int = 1
    padding: int = 1

    def __post_init__(self) -> None:
        """Validate layer geometry."""
        if self.channels < 1 or self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ValueError(f"Invalid conv layer: {self}")


_DEFAULT_LAYERS = (ConvLayerSpec(64), ConvLayerSpec(32))


class BranchConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Branch architecture.

    Attributes:
        input_dim: Embedding width E of the stacked segments
        conv_layers: Convolution stack, applied in order
        dropout: Dropout probability between conv layers
        mha_heads: Attention heads
        mha_enabled: Apply attention after the conv stack
    """

    input_dim: int = 768
    conv_layers: tuple[ConvLayerSpec, ...] = _DEFAULT_LAYERS
    dropout: float = 0.2
    mha_heads: int = 4
    mha_enabled: bool = True

    def __post_init__(self) -> None:
        """
        Validate configuration after initialization.

        Raises:
            ValueError: If any field is out of range
        """
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if not self.conv_layers:
            raise ValueError("A branch needs at least one conv layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.mha_enabled and (self.mha_heads < 1 or self.output_dim % self.mha_heads != 0):
            raise ValueError(f"Branch width {self.output_dim} is not divisible by mha_heads={self.mha_heads}")

    @property
    def output_dim(self) -> int:
        """Feature width F (channels of the last conv layer)."""
        return self.conv_layers[-1].channels


class HeadConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Fully connected head after fusion.

    Attributes:
        hidden: Widths of the hidden layers (ReLU after each); the output layer has width 1
    """

    hidden: tuple[int, ...] = (16,)

    def __post_init__(self) -> None:
        """Validate layer widths."""
        if any(width < 1 for width in self.hidden):
            raise ValueError(f"Head widths must be >= 1, got {self.hidden}")


class FusionConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Regressor architecture.

    Attributes:
        speech: Speech representation branch (E = 768 or 1024)
        artic: Articulatory branch over concise representations (E = 1024)
        head: Fully connected head
        cross_attention: Let each branch attend to the other branch's features
    """

    speech: BranchConfig = field(default_factory=lambda: BranchConfig(input_dim=768))
    artic: BranchConfig = field(default_factory=lambda: BranchConfig(input_dim=1024))
    head: HeadConfig = field(default_factory=HeadConfig)
    cross_attention: bool = False

    def __post_init__(self) -> None:
        """Validate that cross attention joins branches of equal width."""
        if self.cross_attention and self.speech.output_dim != self.artic.output_dim:
            raise ValueError(
                f"Cross attention needs equal branch widths, got {self.speech.output_dim} and {self.artic.output_dim}"
            )


@dataclass
class Branch:
    """A branch's configuration bound to its parameters."""

    name: str
    config: BranchConfig
    params: ParameterSet
    mha: MHAParams | None

    @property
    def index(self) -> int:
        """Stable branch number used to derive dropout seeds."""
        return 0 if self.name == SPEECH else 1


def _add(params: ParameterSet, name: str, shape: tuple[int, ...], fan_in: int, seed: int) -> None:
    params.add(name, uniform_init(name, shape, fan_in, seed))


def _build_branch(params: ParameterSet, name: str, config: BranchConfig, with_mha: bool, seed: int) -> Branch:
    channels = config.input_dim
    for i, layer in enumerate(config.conv_layers):
        fan_in = channels * layer.kernel
        _add(params, f"{name}.conv{i}.weight", (layer.channels, channels, layer.kernel), fan_in, seed)
        _add(params, f"{name}.conv{i}.bias", (layer.channels,), fan_in, seed)
        channels = layer.channels
    mha = init_mha_parameters(params, f"{name}.mha", channels, seed) if with_mha else None
    return Branch(name=name, config=config, params=params, mha=mha)


def _stack_values(stack: SessionEmbeddingStack | np.ndarray) -> np.ndarray:
    values = stack.values if isinstance(stack, SessionEmbeddingStack) else stack
    return np.asarray(values, dtype=np.float64)


def branch_features(
    stack: SessionEmbeddingStack | np.ndarray,
    branch: Branch,
    training: bool = False,
    seed: SeedLike = 0,
) -> Tensor:
    """
    Conv stack of a branch: [S x E] -> [1 x S' x F].

    Raises:
        ShapeError: If the embedding width does not match or S is smaller than the receptive field
    """
    values = _stack_values(stack)
    cfg = branch.config
    if values.ndim != 2 or values.shape[1] != cfg.input_dim:
        raise ShapeError(f"{branch.name} stack width mismatch", f"expected [S x {cfg.input_dim}], got {values.shape}")
    base = list(seed) if isinstance(seed, Sequence) else [int(seed)]
    h = Tensor(values.T[None])
    last = len(cfg.conv_layers) - 1
    for i, layer in enumerate(cfg.conv_layers):
        h = conv1d_forward(
            h,
            branch.params[f"{branch.name}.conv{i}.weight"],
            branch.params[f"{branch.name}.conv{i}.bias"],
            stride=layer.stride,
            padding=layer.padding,
        )
        if i < last:
            h = dropout_forward(relu_forward(h), cfg.dropout, training, [*base, branch.index, i])
    return transpose(h, (0, 2, 1))


def branch_attend(features: Tensor, branch: Branch, context: Tensor | None = None) -> Tensor:
    """Attention over segments (keys/values from `context` when given); identity without MHA."""
    if branch.mha is None:
        return features
    source = features if context is None else context
    return mha_forward(features, source, source, branch.mha, branch.config.mha_heads)


def branch_forward(
    stack: SessionEmbeddingStack | np.ndarray,
    branch: Branch,
    training: bool = False,
    seed: SeedLike = 0,
) -> Tensor:
    """
    Branch output [S' x F] with self-attention when enabled.

    Raises:
        ShapeError: If the stack does not fit the branch
    """
    out = branch_attend(branch_features(stack, branch, training, seed), branch)
    return reshape(out, out.shape[1:])


@dataclass
class SessionInputs:
    """
    Model inputs of one session.

    Attributes:
        key: "subject_id/session_id"
        severity: True total BPRS
        speech: Speech representation stack [S x E]
        artic: Concise articulatory representation stack [S x 1024]
    """

    key: str
    severity: float
    speech: SessionEmbeddingStack | None = None
    artic: SessionEmbeddingStack | None = None


class SeverityRegressor(ABC):
    """
    Shared parts of the fusion and unimodal regressors.

    Attributes:
        params: All parameters in declaration order
        head: Head configuration
        target_mean: Offset applied to the head output
        target_std: Scale applied to the head output
    """

    def __init__(self, head: HeadConfig, seed: int) -> None:
        self.head = head
        self.seed = seed
        self.params = ParameterSet()
        self.target_mean = 0.0
        self.target_std = 1.0

    def _build_head(self, in_features: int) -> None:
        width = in_features
        for i, hidden in enumerate(self.head.hidden):
            _add(self.params, f"head.fc{i}.weight", (width, hidden), width, self.seed)
            _add(self.params, f"head.fc{i}.bias", (hidden,), width, self.seed)
            width = hidden
        _add(self.params, "head.out.weight", (width, 1), width, self.seed)
        _add(self.params, "head.out.bias", (1,), width, self.seed)

    def head_forward(self, fused: Tensor) -> Tensor:
        """Head over a fused vector [1 x F_total]; returns the scaled prediction [1 x 1]."""
        h = fused
        for i in range(len(self.head.hidden)):
            h = relu_forward(linear_forward(h, self.params[f"head.fc{i}.weight"], self.params[f"head.fc{i}.bias"]))
        out = linear_forward(h, self.params["head.out.weight"], self.params["head.out.bias"])
        return add(scale(out, self.target_std), self.target_mean)

    def set_target_scaling(self, severities: list[float] | np.ndarray) -> None:
        """Fit mean/std of the output mapping to training severities (std 1 when constant)."""
        values = np.asarray(severities, dtype=np.float64)
        if values.size == 0:
            raise DataError("Cannot fit target scaling on an empty fold")
        std = float(values.std())
        self.target_mean = float(values.mean())
        self.target_std = std if std > 0 else 1.0

    @property
    def with_mha(self) -> bool:
        """Whether any branch applies attention."""
        return any(branch.mha is not None for branch in self.branches)

    @property
    @abstractmethod
    def variant(self) -> Variant:
        """Model variant, derived from the branches."""

    @property
    @abstractmethod
    def branches(self) -> list[Branch]:
        """Branches in declaration order."""

    @abstractmethod
    def forward(self, inputs: SessionInputs, training: bool = False, seed: SeedLike = 0) -> Tensor:
        """Scaled prediction [1 x 1] for one session."""

    def predict(self, inputs: SessionInputs) -> float:
        """Eval-mode prediction for one session."""
        return self.forward(inputs, training=False).item()

    @abstractmethod
    def checkpoint_metadata(self) -> dict[str, Any]:
        """Metadata needed to rebuild the model."""


class FusionModel(SeverityRegressor):
    """
    Speech and articulatory branches, mean pooling, concatenation and head.

    The variant follows the built branches: fusion-mha when at least one branch
    has attention, fusion-nomha otherwise.
    """

    def __init__(self, config: FusionConfig, with_mha: bool = True, seed: int = 0) -> None:
        super().__init__(config.head, seed)
        self.config = config
        self.cross_attention = config.cross_attention and with_mha
        self.speech = _build_branch(self.params, SPEECH, config.speech, with_mha and config.speech.mha_enabled, seed)
        self.artic = _build_branch(self.params, ARTIC, config.artic, with_mha and config.artic.mha_enabled, seed)
        self._build_head(config.speech.output_dim + config.artic.output_dim)

    @property
    def variant(self) -> Variant:
        return Variant.FUSION_MHA if self.with_mha else Variant.FUSION_NOMHA

    @property
    def branches(self) -> list[Branch]:
        return [self.speech, self.artic]

    def forward(self, inputs: SessionInputs, training: bool = False, seed: SeedLike = 0) -> Tensor:
        if inputs.speech is None or inputs.artic is None:
            raise DataError("Fusion model needs both speech and articulatory inputs", inputs.key)
        return self.fuse(inputs.speech, inputs.artic, training, seed)

    def fuse(
        self,
        speech: SessionEmbeddingStack | np.ndarray,
        artic: SessionEmbeddingStack | np.ndarray,
        training: bool = False,
        seed: SeedLike = 0,
    ) -> Tensor:
        """
        Prediction tensor [1 x 1] for a pair of session stacks.

        Raises:
            DataError: If the two stacks have different segment counts
        """
        speech_values, artic_values = _stack_values(speech), _stack_values(artic)
        if speech_values.shape[0] != artic_values.shape[0]:
            raise DataError(
                "Segment count mismatch between modalities",
                f"speech S={speech_values.shape[0]}, artic S={artic_values.shape[0]}",
            )
        speech_feats = branch_features(speech_values, self.speech, training, seed)
        artic_feats = branch_features(artic_values, self.artic, training, seed)
        if self.cross_attention:
            speech_out = branch_attend(speech_feats, self.speech, context=artic_feats)
            artic_out = branch_attend(artic_feats, self.artic, context=speech_feats)
        else:
            speech_out = branch_attend(speech_feats, self.speech)
            artic_out = branch_attend(artic_feats, self.artic)
        pooled = concat([mean_pool_forward(speech_out, axis=1), mean_pool_forward(artic_out, axis=1)], axis=1)
        return self.head_forward(pooled)

    def checkpoint_metadata(self) -> dict[str, Any]:
        return {
            "model": "regressor",
            "variant": str(self.variant),
            "with_mha": self.with_mha,
            "config": msgspec.to_builtins(self.config),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
        }


class UnimodalModel(SeverityRegressor):
    """A single branch, mean pooling and head."""

    def __init__(self, modality: str, config: BranchConfig, head: HeadConfig, seed: int = 0) -> None:
        if modality not in (SPEECH, ARTIC):
            raise ValueError(f"Unknown modality: {modality}")
        super().__init__(head, seed)
        self.modality = modality
        self.config = config
        self.branch = _build_branch(self.params, modality, config, config.mha_enabled, seed)
        self._build_head(config.output_dim)

    @property
    def variant(self) -> Variant:
        return Variant.UNIMODAL_SSL if self.modality == SPEECH else Variant.UNIMODAL_ARTIC

    @property
    def branches(self) -> list[Branch]:
        return [self.branch]

    def forward(self, inputs: SessionInputs, training: bool = False, seed: SeedLike = 0) -> Tensor:
        stack = inputs.speech if self.modality == SPEECH else inputs.artic
        if stack is None:
            raise DataError(f"Missing {self.modality} input", inputs.key)
        features = branch_attend(branch_features(stack, self.branch, training, seed), self.branch)
        return self.head_forward(mean_pool_forward(features, axis=1))

    def checkpoint_metadata(self) -> dict[str, Any]:
        return {
            "model": "regressor",
            "variant": str(self.variant),
            "with_mha": self.with_mha,
            "modality": self.modality,
            "branch": msgspec.to_builtins(self.config),
            "head": msgspec.to_builtins(self.head),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
        }


def fuse_and_predict(
    model: FusionModel,
    speech: SessionEmbeddingStack | np.ndarray,
    artic: SessionEmbeddingStack | np.ndarray,
    training: bool = False,
    seed: SeedLike = 0,
) -> float:
    """
    Severity estimate of one session from both modalities.

    Raises:
        DataError: If the stacks have different segment counts
    """
    return model.fuse(speech, artic, training, seed).item()


def build_fusion(
    speech_cfg: BranchConfig,
    artic_cfg: BranchConfig,
    with_mha: bool = True,
    seed: int = 0,
    head: HeadConfig | None = None,
    cross_attention: bool = False,
) -> FusionModel:
    """
    Fusion regressor; with_mha=False drops every attention layer (ablation variant).

    Parameters are initialized from generators keyed on (seed, name), so the
    two variants share identical values for every common parameter.

    Raises:
        ValueError: If cross attention is requested for branches of different widths
    """
    config = FusionConfig(
        speech=speech_cfg, artic=artic_cfg, head=head or HeadConfig(), cross_attention=cross_attention
    )
    return FusionModel(config, with_mha=with_mha, seed=seed)


def build_unimodal(modality: str, branch: BranchConfig, head: HeadConfig | None = None, seed: int = 0) -> UnimodalModel:
    """Single-branch baseline replicating the corresponding fusion branch."""
    return UnimodalModel(modality, branch, head or HeadConfig(), seed)


def build_model(variant: Variant | str, config: FusionConfig, seed: int = 0) -> SeverityRegressor:
    """Regressor for a CLI variant name."""
    match Variant(variant):
        case Variant.FUSION_MHA:
            model = build_fusion(config.speech, config.artic, True, seed, config.head, config.cross_attention)
            if model.variant != Variant.FUSION_MHA:
                logger.warning(f"{variant} requested but no branch enables attention; building {model.variant}")
            return model
        case Variant.FUSION_NOMHA:
            return build_fusion(config.speech, config.artic, False, seed, config.head)
        case Variant.UNIMODAL_SSL:
            return build_unimodal(SPEECH, config.speech, config.head, seed)
        case Variant.UNIMODAL_ARTIC:
            return build_unimodal(ARTIC, config.artic, config.head, seed)


def save_regressor(
    path: str | Path,
    model: SeverityRegressor,
    optimizer: dict[str, Any] | None = None,
    epoch: int = 0,
    extra: dict[str, Any] | None = None,
) -> Path:
    """Write a regressor checkpoint; `extra` is stored under "run"."""
    metadata = model.checkpoint_metadata()
    metadata["run"] = extra or {}
    return save_checkpoint(path, model.params, optimizer, epoch, model.seed, metadata)


def load_regressor(path: str | Path) -> tuple[SeverityRegressor, dict[str, Any]]:
    """
    Rebuild a regressor from a checkpoint written by save_regressor.

    Returns:
        (model, the "run" metadata stored with it)

    Raises:
        CheckpointError: If the checkpoint does not hold a regressor
    """
    checkpoint = load_checkpoint(path)
    meta = checkpoint.extra
    if meta.get("model") != "regressor":
        raise CheckpointError("Not a regressor checkpoint", str(path))
    try:
        variant = Variant(meta["variant"])
        model: SeverityRegressor
        if variant in (Variant.FUSION_MHA, Variant.FUSION_NOMHA):
            model = FusionModel(msgspec.convert(meta["config"], FusionConfig), bool(meta["with_mha"]), checkpoint.seed)
        else:
            model = UnimodalModel(
                meta["modality"],
                msgspec.convert(meta["branch"], BranchConfig),
                msgspec.convert(meta["head"], HeadConfig),
                checkpoint.seed,
            )
    except (KeyError, ValueError, msgspec.ValidationError) as e:
        raise CheckpointError("Invalid regressor metadata in checkpoint", str(e)) from e
    checkpoint.load_into(model.params)
    model.target_mean = float(meta.get("target_mean", 0.0))
    model.target_std = float(meta.get("target_std", 1.0))
    return model, meta.get("run", {})
