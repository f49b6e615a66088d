"""
Unit tests for the fusion regressor, its ablation and the unimodal baselines.
"""

# Python imports
from collections.abc import Callable
from pathlib import Path

import allure
import numpy as np
import pytest
from msgspec import structs
from pytest import mark, raises

# Local imports
from py_speech_severity.exceptions import CheckpointError, DataError, ShapeError
from py_speech_severity.fusion import (
    ARTIC,
    SPEECH,
    BranchConfig,
    ConvLayerSpec,
    FusionConfig,
    FusionModel,
    SessionInputs,
    SeverityRegressor,
    UnimodalModel,
    Variant,
    branch_forward,
    build_fusion,
    build_model,
    build_unimodal,
    fuse_and_predict,
    load_regressor,
    save_regressor,
)
from py_speech_severity.tensorcore import MHA_PARAMETER_NAMES, ParameterSet, Tensor, save_checkpoint

pytestmark = [pytest.mark.unit]


class TestConfigs:
    """Test architecture validation."""

    @mark.unit
    @allure.title("TC-FUSCFG-001: Branch validation")
    @allure.description("TC-FUSCFG-001: Test that invalid branch settings raise ValueError.")
    @pytest.mark.parametrize(
        "fields",
        [
            {"conv_layers": (ConvLayerSpec(6),), "mha_heads": 4},
            {"conv_layers": ()},
            {"dropout": 1.0},
            {"input_dim": 0},
        ],
    )
    def test_branch_validation(self, fields: dict) -> None:
        """
        Test that invalid branch settings raise ValueError.

        Args:
            fields: Overridden fields.
        """
        with raises(ValueError):
            BranchConfig(**fields)

    @mark.unit
    @allure.title("TC-FUSCFG-002: Attention may be disabled per branch")
    @allure.description("TC-FUSCFG-002: Test that head divisibility is not checked when attention is off.")
    def test_mha_disabled(self) -> None:
        """Test that head divisibility is not checked when attention is off."""
        config = BranchConfig(conv_layers=(ConvLayerSpec(6),), mha_heads=4, mha_enabled=False)
        assert config.output_dim == 6, "Output width is the last conv width"

    @mark.unit
    @allure.title("TC-FUSCFG-003: Cross attention needs equal widths")
    @allure.description("TC-FUSCFG-003: Test that cross attention between branches of different widths is rejected.")
    def test_cross_attention_widths(self, tiny_branch: Callable[..., BranchConfig]) -> None:
        """
        Test that cross attention between branches of different widths is rejected.

        Args:
            tiny_branch: Branch factory.
        """
        with raises(ValueError, match="equal branch widths"):
            FusionConfig(
                speech=tiny_branch(8),
                artic=tiny_branch(6, conv_layers=(ConvLayerSpec(6),)),
                cross_attention=True,
            )


class TestFusionModel:
    """Test the two-branch regressor."""

    @mark.unit
    @allure.title("TC-FUSION-001: Parameter layout")
    @allure.description("TC-FUSION-001: Test parameter names and shapes of the ablation variant.")
    def test_parameter_layout(self, tiny_fusion_config: FusionConfig) -> None:
        """
        Test parameter names and shapes of the ablation variant.

        Args:
            tiny_fusion_config: Tiny fusion config.
        """
        model = FusionModel(tiny_fusion_config, with_mha=False)
        assert model.params.names() == [
            "speech.conv0.weight",
            "speech.conv0.bias",
            "speech.conv1.weight",
            "speech.conv1.bias",
            "artic.conv0.weight",
            "artic.conv0.bias",
            "artic.conv1.weight",
            "artic.conv1.bias",
            "head.fc0.weight",
            "head.fc0.bias",
            "head.out.weight",
            "head.out.bias",
        ], "Unexpected parameter order"
        shapes = model.params.shapes()
        assert shapes["speech.conv0.weight"] == (4, 8, 3), "Conv weights are [C_out x E x k]"
        assert shapes["artic.conv0.weight"] == (4, 6, 3), "Conv weights are [C_out x E x k]"
        assert shapes["head.fc0.weight"] == (8, 5), "Head takes the concatenated pooled features"
        assert model.variant == Variant.FUSION_NOMHA and not model.with_mha, "Ablation must not use attention"

    @mark.unit
    @allure.title("TC-FUSION-002: Ablation differs only by attention")
    @allure.description("TC-FUSION-002: Test that both variants share every common parameter value.")
    def test_ablation_parameters(self, tiny_fusion_config: FusionConfig) -> None:
        """
        Test that both variants share every common parameter value.

        Args:
            tiny_fusion_config: Tiny fusion config.
        """
        with allure.step("Build both variants from one seed"):
            speech, artic, head = tiny_fusion_config.speech, tiny_fusion_config.artic, tiny_fusion_config.head
            with_mha = build_fusion(speech, artic, True, 3, head)
            without = build_fusion(speech, artic, False, 3, head)
        with allure.step("Compare parameter names"):
            extra = set(with_mha.params.names()) - set(without.params.names())
            expected = {f"{branch}.mha.{name}" for branch in (SPEECH, ARTIC) for name in MHA_PARAMETER_NAMES}
            assert extra == expected, "Variants must differ exactly by the attention parameters"
            assert set(without.params.names()) <= set(with_mha.params.names()), "Ablation adds no parameters"
        with allure.step("Compare shared values"):
            for name, tensor in without.params.items():
                assert tensor.data.tobytes() == with_mha.params[name].data.tobytes(), f"{name} differs"

    @mark.unit
    @allure.title("TC-FUSION-003: Prediction")
    @allure.description("TC-FUSION-003: Test that eval-mode predictions are finite and reproducible.")
    def test_predict(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """
        Test that eval-mode predictions are finite and reproducible.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
        """
        model = FusionModel(tiny_fusion_config, seed=1)
        session = fusion_sessions[0]
        value = model.predict(session)
        assert np.isfinite(value), "Prediction must be finite"
        assert model.predict(session) == value, "Eval mode must be deterministic"
        assert fuse_and_predict(model, session.speech, session.artic) == value, "fuse_and_predict must agree"
        assert model.forward(session, training=True, seed=[0, 1]).item() == value, "Dropout 0 changes nothing"

    @mark.unit
    @allure.title("TC-FUSION-004: Input errors")
    @allure.description("TC-FUSION-004: Test segment count mismatches, wrong widths and missing inputs.")
    def test_input_errors(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """
        Test segment count mismatches, wrong widths and missing inputs.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
        """
        model = FusionModel(tiny_fusion_config)
        session = fusion_sessions[0]
        with raises(DataError, match="Segment count mismatch"):
            model.fuse(session.speech, session.artic.values[:2])
        with raises(ShapeError, match="width mismatch"):
            model.fuse(session.speech.values[:, :6], session.artic)
        with raises(DataError):
            model.forward(SessionInputs(session.key, session.severity, speech=session.speech))

    @mark.unit
    @allure.title("TC-FUSION-005: Branch output shape")
    @allure.description("TC-FUSION-005: Test that a branch maps [S x E] to [S x F] with same-padding convolutions.")
    def test_branch_forward(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """
        Test that a branch maps [S x E] to [S x F] with same-padding convolutions.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
        """
        model = FusionModel(tiny_fusion_config)
        assert branch_forward(fusion_sessions[0].speech, model.speech).shape == (3, 4), "Unexpected branch shape"
        assert branch_forward(fusion_sessions[0].artic, model.artic).shape == (3, 4), "Unexpected branch shape"

    @mark.unit
    @allure.title("TC-FUSION-006: Cross attention")
    @allure.description("TC-FUSION-006: Test that branches of equal width can attend to each other.")
    def test_cross_attention(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """
        Test that branches of equal width can attend to each other.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
        """
        config = FusionConfig(
            speech=tiny_fusion_config.speech,
            artic=tiny_fusion_config.artic,
            head=tiny_fusion_config.head,
            cross_attention=True,
        )
        model = FusionModel(config, seed=1)
        assert model.cross_attention, "Cross attention not enabled"
        assert np.isfinite(model.predict(fusion_sessions[0])), "Prediction must be finite"
        assert not FusionModel(config, with_mha=False).cross_attention, "Ablation drops cross attention too"

    @mark.unit
    @allure.title("TC-FUSION-007: Target scaling")
    @allure.description("TC-FUSION-007: Test that the output mapping is mean + std * raw output.")
    def test_target_scaling(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """
        Test that the output mapping is mean + std * raw output.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
        """
        model = FusionModel(tiny_fusion_config)
        raw = model.predict(fusion_sessions[0])
        model.set_target_scaling([20.0, 40.0])
        assert (model.target_mean, model.target_std) == (30.0, 10.0), "Population mean and std expected"
        assert model.predict(fusion_sessions[0]) == pytest.approx(30.0 + 10.0 * raw), "Scaled prediction"
        model.set_target_scaling([50.0, 50.0])
        assert model.target_std == 1.0, "Constant targets keep unit scale"
        with raises(DataError):
            model.set_target_scaling([])


class TestUnimodalAndBuilders:
    """Test the single-branch baselines and the variant builder."""

    @mark.unit
    @allure.title("TC-UNI-001: Unimodal replicates the fusion branch")
    @allure.description("TC-UNI-001: Test that a unimodal branch shares its parameters with the fusion branch.")
    def test_replicates_branch(self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs]) -> None:
        """
        Test that a unimodal branch shares its parameters with the fusion branch.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
        """
        fusion = FusionModel(tiny_fusion_config, seed=2)
        unimodal = build_unimodal(SPEECH, tiny_fusion_config.speech, tiny_fusion_config.head, seed=2)
        for name, tensor in unimodal.params.items():
            if name.startswith(f"{SPEECH}."):
                assert tensor.data.tobytes() == fusion.params[name].data.tobytes(), f"{name} differs"
        assert unimodal.params.shapes()["head.fc0.weight"] == (4, 5), "Head takes one pooled branch"
        speech_only = SessionInputs("k", 50.0, speech=fusion_sessions[0].speech)
        assert np.isfinite(unimodal.predict(speech_only)), "Speech-only input must suffice"
        with raises(DataError, match="Missing"):
            unimodal.predict(SessionInputs("k", 50.0, artic=fusion_sessions[0].artic))
        with raises(ValueError):
            UnimodalModel("video", tiny_fusion_config.speech, tiny_fusion_config.head)

    @mark.unit
    @allure.title("TC-UNI-002: Variant builder")
    @allure.description("TC-UNI-002: Test that every variant name builds the matching model.")
    @pytest.mark.parametrize(
        ("variant", "model_type", "with_mha"),
        [
            (Variant.FUSION_MHA, FusionModel, True),
            (Variant.FUSION_NOMHA, FusionModel, False),
            (Variant.UNIMODAL_SSL, UnimodalModel, True),
            ("unimodal-artic", UnimodalModel, True),
        ],
    )
    def test_build_model(
        self, tiny_fusion_config: FusionConfig, variant: str, model_type: type, with_mha: bool
    ) -> None:
        """
        Test that every variant name builds the matching model.

        Args:
            tiny_fusion_config: Tiny fusion config.
            variant: Variant name.
            model_type: Expected class.
            with_mha: Expected attention flag.
        """
        model = build_model(variant, tiny_fusion_config, seed=0)
        assert isinstance(model, model_type), f"{variant} built {type(model).__name__}"
        assert model.variant == Variant(variant), "Variant not recorded"
        assert model.with_mha is with_mha, "Unexpected attention flag"
        with raises(ValueError):
            build_model("trimodal", tiny_fusion_config)


class TestRegressorCheckpoint:
    """Test regressor checkpoints."""

    @mark.unit
    @allure.title("TC-REGCKPT-001: Fusion round trip")
    @allure.description("TC-REGCKPT-001: Test that a saved fusion model predicts identically after loading.")
    def test_fusion_round_trip(
        self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs], tmp_path: Path
    ) -> None:
        """
        Test that a saved fusion model predicts identically after loading.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
            tmp_path: Temporary directory.
        """
        model = FusionModel(tiny_fusion_config, with_mha=False, seed=4)
        model.set_target_scaling([s.severity for s in fusion_sessions])
        path = save_regressor(tmp_path / "model.ckpt", model, epoch=9, extra={"seed": 4, "fold": "test"})
        restored, run = load_regressor(path)
        assert isinstance(restored, FusionModel) and restored.variant == Variant.FUSION_NOMHA, "Wrong variant"
        assert run == {"seed": 4, "fold": "test"}, "Run metadata lost"
        for session in fusion_sessions:
            assert restored.predict(session) == model.predict(session), f"{session.key} prediction differs"

    @mark.unit
    @allure.title("TC-REGCKPT-002: Unimodal round trip")
    @allure.description("TC-REGCKPT-002: Test that a unimodal baseline is rebuilt with its modality.")
    def test_unimodal_round_trip(
        self, tiny_fusion_config: FusionConfig, fusion_sessions: list[SessionInputs], tmp_path: Path
    ) -> None:
        """
        Test that a unimodal baseline is rebuilt with its modality.

        Args:
            tiny_fusion_config: Tiny fusion config.
            fusion_sessions: Synthetic sessions.
            tmp_path: Temporary directory.
        """
        model = build_model(Variant.UNIMODAL_ARTIC, tiny_fusion_config, seed=6)
        restored, run = load_regressor(save_regressor(tmp_path / "artic.ckpt", model))
        assert isinstance(restored, UnimodalModel) and restored.modality == ARTIC, "Wrong modality"
        assert run == {}, "No run metadata was saved"
        assert restored.predict(fusion_sessions[1]) == model.predict(fusion_sessions[1]), "Prediction differs"

    @mark.unit
    @allure.title("TC-REGCKPT-003: Foreign checkpoints")
    @allure.description("TC-REGCKPT-003: Test that checkpoints of other models are rejected.")
    def test_foreign(self, tmp_path: Path) -> None:
        """
        Test that checkpoints of other models are rejected.

        Args:
            tmp_path: Temporary directory.
        """
        params = ParameterSet()
        params.add("w", Tensor(np.zeros(2)))
        with raises(CheckpointError, match="Not a regressor"):
            load_regressor(save_checkpoint(tmp_path / "x.ckpt", params, extra={"model": "vqvae"}))


class TestVariantLabel:
    """Test that the variant label follows the attention layers actually built."""

    @mark.unit
    @allure.title("TC-VARIANT-001: Label follows the branches")
    @allure.description(
        "TC-VARIANT-001: Test that a fusion model is labelled fusion-mha only when some branch has attention."
    )
    @pytest.mark.parametrize(
        ("speech_mha", "artic_mha", "expected"),
        [
            (True, True, Variant.FUSION_MHA),
            (True, False, Variant.FUSION_MHA),
            (False, True, Variant.FUSION_MHA),
            (False, False, Variant.FUSION_NOMHA),
        ],
    )
    def test_label_from_branches(
        self,
        tiny_fusion_config: FusionConfig,
        tmp_path: Path,
        speech_mha: bool,
        artic_mha: bool,
        expected: Variant,
    ) -> None:
        """
        Test that the label follows the branches and survives a checkpoint.

        Args:
            tiny_fusion_config: Tiny fusion config.
            tmp_path: Temporary directory.
            speech_mha: Attention flag of the speech branch.
            artic_mha: Attention flag of the articulatory branch.
            expected: Expected variant.
        """
        config = structs.replace(
            tiny_fusion_config,
            speech=structs.replace(tiny_fusion_config.speech, mha_enabled=speech_mha),
            artic=structs.replace(tiny_fusion_config.artic, mha_enabled=artic_mha),
        )
        model = FusionModel(config, with_mha=True)
        with allure.step("Verify the label of the built model"):
            assert model.variant == expected, f"Built {model.variant}, expected {expected}"
            assert model.with_mha is (expected == Variant.FUSION_MHA), "Label and attention flag disagree"
        with allure.step("Verify the label after a checkpoint round trip"):
            restored, _ = load_regressor(save_regressor(tmp_path / "model.ckpt", model))
            assert restored.variant == model.variant, "Label changed across save and load"
            assert restored.params.names() == model.params.names(), "Parameters changed across save and load"

    @mark.unit
    @allure.title("TC-VARIANT-002: Requested attention without attention layers")
    @allure.description("TC-VARIANT-002: Test that build_model reports fusion-nomha when no branch has attention.")
    def test_build_model_without_attention(self, tiny_fusion_config: FusionConfig) -> None:
        """
        Test that build_model reports fusion-nomha when no branch has attention.

        Args:
            tiny_fusion_config: Tiny fusion config.
        """
        config = structs.replace(
            tiny_fusion_config,
            speech=structs.replace(tiny_fusion_config.speech, mha_enabled=False),
            artic=structs.replace(tiny_fusion_config.artic, mha_enabled=False),
        )
        model = build_model(Variant.FUSION_MHA, config)
        assert model.variant == Variant.FUSION_NOMHA, "A model without attention must not claim fusion-mha"

    @mark.unit
    @allure.title("TC-VARIANT-003: Regressor base is abstract")
    @allure.description("TC-VARIANT-003: Test that the shared regressor base cannot be instantiated.")
    def test_base_is_abstract(self, tiny_fusion_config: FusionConfig) -> None:
        """
        Test that the shared regressor base cannot be instantiated.

        Args:
            tiny_fusion_config: Tiny fusion config.
        """
        with raises(TypeError, match="abstract"):
            SeverityRegressor(tiny_fusion_config.head, seed=0)  # type: ignore[abstract]
