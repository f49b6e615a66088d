"""
Fixtures for fusion regressor testing.
"""

# Python imports
from collections.abc import Callable

import numpy as np
from pytest import fixture

# Local imports
from py_speech_severity.embeddings import SessionEmbeddingStack
from py_speech_severity.fusion import BranchConfig, ConvLayerSpec, FusionConfig, HeadConfig, SessionInputs

SPEECH_WIDTH = 8
ARTIC_WIDTH = 6


@fixture
def tiny_branch() -> Callable[..., BranchConfig]:
    """
    Factory for two-layer branches of width 4.

    Returns:
        Callable[..., BranchConfig]: factory(input_dim, **fields).
    """

    def create(input_dim: int, **fields) -> BranchConfig:
        values = {"conv_layers": (ConvLayerSpec(4), ConvLayerSpec(4)), "dropout": 0.0, "mha_heads": 2} | fields
        return BranchConfig(input_dim=input_dim, **values)

    return create


@fixture
def tiny_fusion_config(tiny_branch: Callable[..., BranchConfig]) -> FusionConfig:
    """
    Fusion config over 8-wide speech and 6-wide articulatory stacks.

    Returns:
        FusionConfig: Tiny branches and a 5-unit head.
    """
    return FusionConfig(speech=tiny_branch(SPEECH_WIDTH), artic=tiny_branch(ARTIC_WIDTH), head=HeadConfig(hidden=(5,)))


@fixture
def fusion_sessions() -> list[SessionInputs]:
    """
    Six sessions of three segments whose inputs shift with severity.

    Returns:
        list[SessionInputs]: Sessions with speech [3 x 8] and artic [3 x 6] stacks.
    """
    rng = np.random.default_rng(5)
    sessions = []
    for i, severity in enumerate((30, 45, 60, 75, 90, 105)):
        level = (severity - 18) / 108
        key = f"S{i:03d}/sess00"
        speech = level + 0.05 * rng.normal(size=(3, SPEECH_WIDTH))
        artic = -level + 0.05 * rng.normal(size=(3, ARTIC_WIDTH))
        sessions.append(
            SessionInputs(
                key=key,
                severity=float(severity),
                speech=SessionEmbeddingStack(speech, session_ref=key, source="test"),
                artic=SessionEmbeddingStack(artic, session_ref=key, source="test"),
            )
        )
    return sessions
