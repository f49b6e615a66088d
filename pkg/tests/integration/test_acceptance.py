"""
Acceptance tests: oracles, randomized properties and synthetic-corpus training runs.

Training runs are marked slow and are skipped by the default `-m "not slow"`.
"""

# Python imports
import math
import operator
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
from allure import description, step, title
from pytest import mark

# Local imports
from py_speech_severity.datamodel import (
    Fold,
    Manifest,
    SegmentRef,
    Session,
    SyntheticConfig,
    TimeSeriesSegment,
    apportion,
    load_segment_series,
    make_splits,
    synth_dataset,
)
from py_speech_severity.embeddings import SessionEmbeddingStack
from py_speech_severity.fusion import (
    BranchConfig,
    ConvLayerSpec,
    FusionConfig,
    FusionModel,
    HeadConfig,
    RegressorTrainingConfig,
    SessionInputs,
    predict_dataset,
    train_regressor,
)
from py_speech_severity.fvtc import N_PAIRS, PAIR_ORDER, FVTCConfig, extract_fvtc, fvtc_matrix
from py_speech_severity.metrics import from_json, mae, rmse, spearman_rho
from py_speech_severity.tensorcore import dropout_count
from py_speech_severity.vqvae import VQForward, VQVAEConfig, VQVAETrainingConfig, train_vqvae

pytestmark = [mark.integration, mark.acceptance]


def _oracle_fvtc(channels: np.ndarray, D: int) -> np.ndarray:
    n = channels.shape[1]
    rows = []
    for row in channels:
        values = [float(v) for v in row]
        mean = math.fsum(values) / n
        sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
        rows.append([(v - mean) / sd for v in values])
    out = np.empty((N_PAIRS, D + 1))
    for p, (i, j) in enumerate(PAIR_ORDER):
        x, y = rows[i - 1], rows[j - 1]
        for d in range(D + 1):
            out[p, d] = math.fsum(map(operator.mul, x[: n - d], y[d:])) / (n - d)
    return out


def _oracle_rho(actual: list[float], pred: list[float]) -> float:
    n = len(actual)
    rank_a = [1 + sum(1 for b in actual if b < a) for a in actual]
    rank_p = [1 + sum(1 for b in pred if b < p) for p in pred]
    d2 = sum((ra - rp) ** 2 for ra, rp in zip(rank_a, rank_p, strict=True))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


def _random_manifest(rng: np.random.Generator, n_subjects: int) -> Manifest:
    sessions = []
    for s in range(n_subjects):
        for k in range(int(rng.integers(1, 4))):
            sessions.append(
                Session(
                    subject_id=f"P{s:03d}",
                    session_id=f"v{k}",
                    severity=int(rng.integers(18, 127)),
                    segments=[SegmentRef(index=0, tv_path="tv.fmat", ssl_path="ssl.fmat")],
                )
            )
    order = rng.permutation(len(sessions))
    return Manifest(sessions=[sessions[i] for i in order])


class TestOracles:
    """Test implementations against independently coded references."""

    @title("FVTC matches a loop oracle")
    @description("Test 1000 random 8 x 200 segments at D = 10 against an fsum triple loop.")
    def test_fvtc_oracle(self) -> None:
        """Test 1000 random 8 x 200 segments at D = 10 against an fsum triple loop."""
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            channels = rng.normal(size=(8, 200)) * rng.uniform(0.5, 3.0, size=(8, 1)) + rng.normal(size=(8, 1))
            got = fvtc_matrix(TimeSeriesSegment(channels=channels), D=10).values
            expected = _oracle_fvtc(channels, 10)
            np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-12)
            worst = max(worst, float(np.max(np.abs(got - expected))))
        assert worst < 1e-12

    @title("Spearman's rho matches the rank oracle")
    @description("Test 1000 random untied inputs against the squared rank difference formula.")
    def test_rho_oracle(self) -> None:
        """Test 1000 random untied inputs against the squared rank difference formula."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 40))
            actual = rng.permutation(n * 10)[:n].astype(float).tolist()
            pred = rng.normal(size=n).tolist()
            assert abs(spearman_rho(actual, pred) - _oracle_rho(actual, pred)) <= 1e-12

    @title("RMSE bounds MAE")
    @description("Test rmse >= mae over 1000 random pairs.")
    def test_rmse_bounds_mae(self) -> None:
        """Test rmse >= mae over 1000 random pairs."""
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 50))
            actual, pred = rng.uniform(18, 126, size=n), rng.uniform(18, 126, size=n)
            assert rmse(actual, pred) >= mae(actual, pred) - 1e-12


class TestSplitProperties:
    """Test subject-independent splits on random manifests."""

    @title("Random manifests")
    @description("Test disjoint subjects, exact apportionment and session coverage on 100 manifests.")
    def test_random_manifests(self) -> None:
        """Test disjoint subjects, exact apportionment and session coverage on 100 manifests."""
        rng = np.random.default_rng(5)
        ratios = (0.70, 0.15, 0.15)
        for trial in range(100):
            manifest = _random_manifest(rng, int(rng.integers(3, 60)))
            split = make_splits(manifest, ratios, seed=trial)
            folds = [set(split.subjects(fold)) for fold in Fold]
            assert folds[0].isdisjoint(folds[1]) and folds[0].isdisjoint(folds[2]) and folds[1].isdisjoint(folds[2])
            assert set().union(*folds) == set(manifest.subjects)
            assert list(split.counts()) == apportion(len(manifest.subjects), ratios)
            assert sum(len(split.sessions(manifest, fold)) for fold in Fold) == len(manifest.sessions)

    @title("Forty subjects")
    @description("Test the 70:15:15 split of 40 subjects.")
    def test_forty_subjects(self) -> None:
        """Test the 70:15:15 split of 40 subjects."""
        manifest = _random_manifest(np.random.default_rng(0), 40)
        assert make_splits(manifest, (0.70, 0.15, 0.15), seed=1).counts() == (28, 6, 6)


@mark.slow
class TestTrainingRuns:
    """Test convergence on synthetic data."""

    @title("VQ-VAE invariants hold on every step")
    @description("Test the loss identity, nearest-code optimality and mask counts on a 64-matrix run.")
    def test_vqvae_run(self, tmp_path: Path) -> None:
        """Test the loss identity, nearest-code optimality and mask counts on a 64-matrix run."""
        with step("Extract 64 FVTC matrices from a synthetic corpus"):
            corpus = SyntheticConfig(n_subjects=8, sessions_per_subject=2, segments_per_session=4, segment_seconds=10.0)
            manifest, _ = synth_dataset(corpus, tmp_path / "corpus")
            matrices = []
            for session in manifest.sessions:
                matrices.extend(extract_fvtc(load_segment_series(manifest, session, corpus.frame_rate), FVTCConfig()))
            assert len(matrices) == 64
        config = VQVAEConfig()
        expected_masked = dropout_count(config.mask_fraction, N_PAIRS * (config.D + 1))
        steps: list[float] = []

        def check(result: VQForward) -> None:
            total = float(result.total_loss.data)
            parts = (
                float(result.reconstruction_loss.data)
                + config.beta * float(result.commitment_loss.data)
                + float(result.codebook_loss.data)
            )
            assert abs(total - parts) <= 1e-6
            latents = result.latents.data
            distances = ((latents[:, :, None, :] - result.codebook[None, None, :, :]) ** 2).sum(axis=-1)
            np.testing.assert_array_equal(result.indices, distances.argmin(axis=-1))
            assert result.masks.reshape(len(result.masks), -1).sum(axis=1).tolist() == [expected_masked]
            steps.append(total)

        with step("Train with defaults"):
            _, history = train_vqvae(matrices, config, VQVAETrainingConfig(), on_step=check)
        assert len(steps) == 64 * len(history)
        assert history[-1].train.total <= 0.5 * history[0].train.total

    @title("Fusion overfits eight sessions")
    @description("Test that fusion-mha reaches train MAE < 1.0 within 400 epochs, deterministically.")
    def test_overfit(self) -> None:
        """Test that fusion-mha reaches train MAE < 1.0 within 400 epochs, deterministically."""
        rng = np.random.default_rng(3)
        sessions = []
        for i, severity in enumerate(np.linspace(25, 115, 8)):
            level = (severity - 18) / 108
            key = f"S{i:03d}/sess00"
            speech = level + 0.1 * rng.normal(size=(3, 768))
            artic = -level + 0.1 * rng.normal(size=(3, 1024))
            sessions.append(
                SessionInputs(
                    key=key,
                    severity=float(severity),
                    speech=SessionEmbeddingStack(speech, session_ref=key, source="synthetic"),
                    artic=SessionEmbeddingStack(artic, session_ref=key, source="synthetic"),
                )
            )
        layers = (ConvLayerSpec(16), ConvLayerSpec(16))
        config = FusionConfig(
            speech=BranchConfig(input_dim=768, conv_layers=layers, dropout=0.0, mha_heads=2),
            artic=BranchConfig(input_dim=1024, conv_layers=layers, dropout=0.0, mha_heads=2),
            head=HeadConfig(hidden=(16,)),
        )
        hyper = RegressorTrainingConfig(epochs=400, lr=1e-3, patience=400, seed=0)

        def fit() -> list[float]:
            model, _ = train_regressor(FusionModel(config, seed=0), sessions, sessions, hyper)
            return [p.predicted for p in predict_dataset(model, sessions)]

        predicted = fit()
        assert mae([s.severity for s in sessions], predicted) < 1.0
        assert fit() == predicted

    @title("Planted severity is recoverable")
    @description("Test held-out rho >= 0.8 and the MHA ablation direction on a 32-subject corpus.")
    def test_recoverability(
        self, run_cli: Callable[..., Path], write_config: Callable[[dict[str, Any]], Path]
    ) -> None:
        """Test held-out rho >= 0.8 and the MHA ablation direction on a 32-subject corpus."""
        config = write_config({"seed": 0, "synth": {"n_subjects": 32, "coupling_gain": 1.0, "noise_sd": 0.1}})
        with step("Corpus, representations and both variants"):
            manifest = str(run_cli("synth", "synth", config=config) / "corpus" / "manifest.json")
            model = run_cli("vqvae", "train-vqvae", "--manifest", manifest, config=config) / "vqvae.ckpt"
            artic = str(run_cli("encode", "encode", "--model", str(model), "--manifest", manifest, config=config))
            checkpoints = []
            for variant in ("fusion-mha", "fusion-nomha"):
                args = ("--variant", variant, "--manifest", manifest, "--artic", f"{artic}/artic")
                run = run_cli(variant, "train", *args, config=config)
                checkpoints.extend(["--model", str(run / "model.ckpt")])
        with step("Evaluate on the test fold"):
            report = run_cli("eval", "eval", *checkpoints, config=config) / "report.json"
            with_mha, without_mha = from_json(report.read_bytes())
        assert with_mha.rho is not None and with_mha.rho >= 0.8, report.read_text(encoding="utf-8")
        assert with_mha.mae <= without_mha.mae
