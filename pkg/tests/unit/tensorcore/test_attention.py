"""
Unit tests for multi-head attention.
"""

# Python imports
import allure
import numpy as np
import pytest
from pytest import mark, raises

# Local imports
from py_speech_severity.exceptions import DataError, ShapeError
from py_speech_severity.tensorcore import MHA_PARAMETER_NAMES, ParameterSet, Tensor, init_mha_parameters, mha_forward

pytestmark = [pytest.mark.unit]


@pytest.fixture
def mha_params():
    """Attention projections of width 4."""
    params = ParameterSet()
    return params, init_mha_parameters(params, "mha", embed_dim=4, seed=0)


class TestMHA:
    """Test the attention layer."""

    @mark.unit
    @allure.title("TC-MHA-001: Registered projections")
    @allure.description("TC-MHA-001: Test that the seven projections are registered with the key bias omitted.")
    def test_parameters(self, mha_params) -> None:
        """
        Test that the seven projections are registered with the key bias omitted.

        Args:
            mha_params: Parameter set and projections.
        """
        params, mha = mha_params
        assert params.names() == [f"mha.{name}" for name in MHA_PARAMETER_NAMES], "Unexpected parameter names"
        assert "mha.k_bias" not in params, "Key projection has no bias"
        assert mha.embed_dim == 4, "Embedding width not recorded"
        assert params.num_parameters() == 4 * 16 + 3 * 4, "Four 4x4 weights and three biases"

    @mark.unit
    @allure.title("TC-MHA-002: Output and weight shapes")
    @allure.description("TC-MHA-002: Test output [B x S x E] and weights [B x h x S x S_k] that sum to one.")
    def test_shapes(self, mha_params, rng: np.random.Generator) -> None:
        """
        Test output [B x S x E] and weights [B x h x S x S_k] that sum to one.

        Args:
            mha_params: Parameter set and projections.
            rng: Seeded generator.
        """
        _, mha = mha_params
        q = Tensor(rng.normal(size=(2, 3, 4)))
        kv = Tensor(rng.normal(size=(2, 5, 4)))
        with allure.step("Forward with weights"):
            out, weights = mha_forward(q, kv, kv, mha, heads=2, return_weights=True)
        with allure.step("Verify shapes"):
            assert out.shape == (2, 3, 4), "Output shape mismatch"
            assert weights.shape == (2, 2, 3, 5), "Weight shape mismatch"
            np.testing.assert_allclose(weights.data.sum(axis=-1), 1.0)

    @mark.unit
    @allure.title("TC-MHA-003: Masked keys get no weight")
    @allure.description("TC-MHA-003: Test that masked keys have zero weight and do not affect the output.")
    def test_mask(self, mha_params, rng: np.random.Generator) -> None:
        """
        Test that masked keys have zero weight and do not affect the output.

        Args:
            mha_params: Parameter set and projections.
            rng: Seeded generator.
        """
        _, mha = mha_params
        q = Tensor(rng.normal(size=(1, 2, 4)))
        kv = rng.normal(size=(1, 4, 4))
        mask = np.array([[True, False, True, False]])
        out, weights = mha_forward(q, Tensor(kv), Tensor(kv), mha, heads=2, mask=mask, return_weights=True)
        with allure.step("Verify masked weights"):
            assert np.all(weights.data[..., [1, 3]] == 0.0), "Masked keys must get zero weight"
        with allure.step("Change masked keys"):
            changed = kv.copy()
            changed[0, [1, 3]] = 100.0
            again = mha_forward(q, Tensor(changed), Tensor(changed), mha, heads=2, mask=mask)
            np.testing.assert_allclose(again.data, out.data, rtol=1e-12, atol=1e-12)

    @mark.unit
    @allure.title("TC-MHA-004: Attention errors")
    @allure.description("TC-MHA-004: Test width/head mismatches and fully masked rows.")
    def test_errors(self, mha_params) -> None:
        """
        Test width/head mismatches and fully masked rows.

        Args:
            mha_params: Parameter set and projections.
        """
        _, mha = mha_params
        x = Tensor(np.ones((1, 2, 4)))
        with raises(ShapeError, match="divisible"):
            mha_forward(x, x, x, mha, heads=3)
        with raises(ShapeError):
            mha_forward(x, Tensor(np.ones((1, 2, 3))), Tensor(np.ones((1, 2, 3))), mha, heads=2)
        with raises(ShapeError):
            mha_forward(x, x, x, mha, heads=2, mask=np.ones((1, 3), dtype=bool))
        with raises(DataError):
            mha_forward(x, x, x, mha, heads=2, mask=np.zeros((1, 2), dtype=bool))
