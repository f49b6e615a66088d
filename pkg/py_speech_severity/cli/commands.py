"""
Pipeline commands: each one delegates to the library and writes its outputs
into the run directory it is given.

Per-segment artifacts mirror the corpus layout:
<dir>/<subject_id>/<session_id>/seg_NNN.fmat.
"""

# Python imports
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

# Local imports
from ..config import RunConfig
from ..datamodel import (
    DEFAULT_RATIOS,
    Fold,
    Manifest,
    Session,
    SplitAssignment,
    load_manifest,
    load_segment_series,
    make_splits,
    synth_dataset,
)
from ..embeddings import (
    SegmentEmbedding,
    SessionEmbeddingStack,
    WindowRepMatrix,
    mean_pool_windows,
    read_fmat,
    stack_session,
    write_fmat,
)
from ..exceptions import ConfigurationError, DataError, NumericError, ShapeError
from ..fusion import (
    Prediction,
    SessionInputs,
    SeverityRegressor,
    Variant,
    build_model,
    load_regressor,
    predict_dataset,
    save_regressor,
    train_regressor,
)
from ..fvtc import FVTCConfig, FVTCMatrix, extract_fvtc, load_fvtc, save_fvtc
from ..metrics import EvalReport, evaluate, render_text, write_report
from ..tensorcore import TrainingMetrics
from ..vqvae import (
    EMBEDDING_DIM,
    concise_representation,
    evaluate_vqvae,
    load_vqvae,
    save_vqvae,
    train_vqvae,
)
from .gradcheck_suite import GRADCHECK_TOLERANCE, GradCheckResult, run_gradcheck_suite
from .rundir import RunDirectory

ARTIC_SOURCE = "concise-articulatory"

MODEL_LABELS = {
    Variant.FUSION_MHA: "Feature-Fusion with MHA",
    Variant.FUSION_NOMHA: "Feature-Fusion without MHA",
    Variant.UNIMODAL_SSL: "CNN-MHA (speech)",
    Variant.UNIMODAL_ARTIC: "CNN-MHA (articulatory)",
}


def segment_file(root: str | Path, session: Session, index: int) -> Path:
    """Per-segment artifact path under a root directory."""
    return Path(root) / session.subject_id / session.session_id / f"seg_{index:03d}.fmat"


def split_manifest(manifest: Manifest, config: RunConfig) -> SplitAssignment:
    """Subject-independent folds from the split settings."""
    return make_splits(manifest, config.splits.ratios, config.splits.seed)


def _split_document(split: SplitAssignment) -> dict[str, Any]:
    return {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "folds": {str(fold): split.subjects(fold) for fold in Fold},
    }


def corpus_frame_rate(manifest: Manifest, config: RunConfig) -> float:
    """
    Frame rate for segments whose files carry none: the manifest's, else the configured one.

    Per-file metadata still takes precedence inside load_segment_series.
    """
    if manifest.frame_rate is not None:
        return manifest.frame_rate
    logger.debug(f"Manifest declares no frame rate; using {config.synth.frame_rate} Hz from the config")
    return config.synth.frame_rate


def session_fvtc(
    manifest: Manifest,
    session: Session,
    fvtc: FVTCConfig,
    fvtc_dir: str | Path | None = None,
    frame_rate: float = 100.0,
) -> list[FVTCMatrix]:
    """
    FVTC matrices of a session, read from `fvtc_dir` or extracted from the manifest.

    Raises:
        DataError: If stored matrices do not match the requested lag
    """
    if fvtc_dir is None:
        return extract_fvtc(load_segment_series(manifest, session, frame_rate), fvtc)
    matrices = [load_fvtc(segment_file(fvtc_dir, session, ref.index)) for ref in session.segments]
    for matrix in matrices:
        if matrix.D != fvtc.D:
            raise DataError(
                "Stored FVTC lag does not match the config", f"{matrix.segment_ref}: D={matrix.D}, expected {fvtc.D}"
            )
    return matrices


def _fold_matrices(
    manifest: Manifest,
    sessions: Sequence[Session],
    config: RunConfig,
    fvtc_dir: str | Path | None,
) -> list[FVTCMatrix]:
    matrices: list[FVTCMatrix] = []
    frame_rate = corpus_frame_rate(manifest, config)
    for session in sessions:
        matrices.extend(session_fvtc(manifest, session, config.fvtc, fvtc_dir, frame_rate))
    return matrices


def speech_stack(manifest: Manifest, session: Session) -> SessionEmbeddingStack:
    """Mean-pooled speech representations of every segment, stacked."""
    embeddings = [
        mean_pool_windows(WindowRepMatrix.from_file(manifest.resolve(ref.ssl_path)), f"{session.key}#{ref.index}")
        for ref in session.segments
    ]
    return stack_session(embeddings, session.key)


def artic_stack(artic_dir: str | Path, session: Session) -> SessionEmbeddingStack:
    """
    Concise articulatory representations of every segment, stacked.

    Raises:
        ShapeError: If a stored representation is not 1024 wide
    """
    embeddings = []
    for ref in session.segments:
        values, metadata = read_fmat(segment_file(artic_dir, session, ref.index))
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        if flat.size != EMBEDDING_DIM:
            raise ShapeError(
                "Concise representation must have 1024 values", f"{session.key}#{ref.index}: {values.shape}"
            )
        embeddings.append(
            SegmentEmbedding(flat, f"{session.key}#{ref.index}", str(metadata.get("source", ARTIC_SOURCE)))
        )
    return stack_session(embeddings, session.key)


def session_inputs(
    manifest: Manifest,
    sessions: Sequence[Session],
    variant: Variant,
    artic_dir: str | Path | None,
) -> list[SessionInputs]:
    """
    Model inputs of the sessions, loading only the modalities the variant uses.

    Raises:
        ConfigurationError: If the variant needs articulatory inputs and no directory is given
    """
    needs_speech = variant != Variant.UNIMODAL_ARTIC
    needs_artic = variant != Variant.UNIMODAL_SSL
    if needs_artic and artic_dir is None:
        raise ConfigurationError("An articulatory representation directory is required", f"variant {variant}")
    return [
        SessionInputs(
            key=session.key,
            severity=float(session.severity),
            speech=speech_stack(manifest, session) if needs_speech else None,
            artic=artic_stack(artic_dir, session) if needs_artic and artic_dir is not None else None,
        )
        for session in sessions
    ]


def model_label(model: SeverityRegressor) -> str:
    """Report label of a regressor."""
    return MODEL_LABELS[model.variant]


def features_label(model: SeverityRegressor, inputs: Sequence[SessionInputs]) -> str:
    """Report features label built from the provenance tags of the inputs."""
    first = inputs[0] if inputs else None
    speech = first.speech.source if first is not None and first.speech is not None else "speech"
    artic = first.artic.source if first is not None and first.artic is not None else ARTIC_SOURCE
    match model.variant:
        case Variant.UNIMODAL_SSL:
            return speech
        case Variant.UNIMODAL_ARTIC:
            return artic
        case _:
            return f"{speech} + {artic}"


def cmd_synth(run: RunDirectory, out: str | Path | None = None) -> Path:
    """
    Generate the synthetic corpus.

    Returns:
        Path of the written manifest
    """
    target = Path(out) if out is not None else run.file("corpus")
    _, manifest_path = synth_dataset(run.config.synth, target)
    run.record_output("manifest", manifest_path)
    return manifest_path


def cmd_fvtc(run: RunDirectory, manifest_path: str | Path, out: str | Path | None = None, max_workers: int = 1) -> Path:
    """
    Extract and store an FVTC matrix for every segment of a manifest.

    Lag and normalization come from the run config.

    Returns:
        Directory holding the matrices
    """
    manifest = load_manifest(manifest_path)
    target = Path(out) if out is not None else run.file("fvtc")
    fvtc = run.config.fvtc
    frame_rate = corpus_frame_rate(manifest, run.config)
    count = 0
    for session in manifest.sessions:
        segments = load_segment_series(manifest, session, frame_rate)
        for ref, matrix in zip(session.segments, extract_fvtc(segments, fvtc, max_workers), strict=True):
            save_fvtc(segment_file(target, session, ref.index), matrix)
            count += 1
    logger.info(f"Wrote {count} FVTC matrices (D={fvtc.D}, normalize={fvtc.normalize}) to {target}")
    run.record_output("fvtc", target)
    return target


def cmd_train_vqvae(run: RunDirectory, manifest_path: str | Path, fvtc_dir: str | Path | None = None) -> Path:
    """
    Train the VQ-VAE on the training fold, validating on the validation fold.

    Writes vqvae.ckpt, history.json, metrics.json, splits.json and
    vqvae_eval.json (loss breakdown and perplexity per fold).

    Returns:
        Checkpoint path
    """
    config = run.config
    manifest = load_manifest(manifest_path)
    split = split_manifest(manifest, config)
    run.write_json("splits.json", _split_document(split))
    folds = {fold: _fold_matrices(manifest, split.sessions(manifest, fold), config, fvtc_dir) for fold in Fold}
    metrics = TrainingMetrics()
    model, history = train_vqvae(
        folds[Fold.TRAIN],
        config.vqvae,
        config.vqvae_training,
        validation=folds[Fold.VAL] or None,
        metrics=metrics,
    )
    checkpoint = save_vqvae(run.file("vqvae.ckpt"), model, epoch=len(history))
    run.record_output("checkpoint", checkpoint)
    run.write_json("history.json", [record.to_dict() for record in history])
    run.write_json("metrics.json", metrics.to_dict())
    evaluation: dict[str, Any] = {}
    for fold, matrices in folds.items():
        if matrices:
            breakdown, perplexity = evaluate_vqvae(model, matrices)
            evaluation[str(fold)] = {**breakdown.to_dict(), "perplexity": perplexity, "n": len(matrices)}
    run.write_json("vqvae_eval.json", evaluation)
    return checkpoint


def cmd_encode(
    run: RunDirectory,
    model_path: str | Path,
    manifest_path: str | Path,
    out: str | Path | None = None,
    fvtc_dir: str | Path | None = None,
) -> Path:
    """
    Concise articulatory representation of every segment of a manifest.

    The lag comes from the checkpoint; normalization from the run config.

    Returns:
        Directory holding one [1024] FMAT per segment
    """
    model = load_vqvae(model_path)
    manifest = load_manifest(manifest_path)
    target = Path(out) if out is not None else run.file("artic")
    fvtc = FVTCConfig(D=model.config.D, normalize=run.config.fvtc.normalize)
    frame_rate = corpus_frame_rate(manifest, run.config)
    for session in manifest.sessions:
        matrices = session_fvtc(manifest, session, fvtc, fvtc_dir, frame_rate)
        for ref, matrix in zip(session.segments, matrices, strict=True):
            write_fmat(
                segment_file(target, session, ref.index),
                concise_representation(model, matrix),
                {"source": ARTIC_SOURCE, "segment_ref": f"{session.key}#{ref.index}", "D": model.config.D},
            )
    logger.info(f"Encoded {manifest.n_segments} segments of {len(manifest.sessions)} sessions to {target}")
    run.record_output("artic", target)
    return target


def cmd_train(
    run: RunDirectory,
    variant: Variant | str,
    manifest_path: str | Path,
    artic_dir: str | Path | None = None,
) -> Path:
    """
    Train one regressor variant on the training fold.

    Writes model.ckpt (with the manifest, representation directory and split
    stored alongside), history.json, metrics.json and splits.json.

    Returns:
        Checkpoint path
    """
    config = run.config
    variant = Variant(variant)
    manifest = load_manifest(manifest_path)
    split = split_manifest(manifest, config)
    run.write_json("splits.json", _split_document(split))
    train = session_inputs(manifest, split.sessions(manifest, Fold.TRAIN), variant, artic_dir)
    val = session_inputs(manifest, split.sessions(manifest, Fold.VAL), variant, artic_dir)
    model = build_model(variant, config.fusion, seed=config.regressor.seed)
    metrics = TrainingMetrics()
    model, history = train_regressor(model, train, val, config.regressor, metrics)
    checkpoint = save_regressor(
        run.file("model.ckpt"),
        model,
        epoch=len(history),
        extra={
            "manifest": str(Path(manifest_path).resolve()),
            "artic_dir": None if artic_dir is None else str(Path(artic_dir).resolve()),
            "split_seed": split.seed,
            "split_ratios": list(split.ratios),
            "features": features_label(model, train),
        },
    )
    run.record_output("checkpoint", checkpoint)
    run.write_json("history.json", [record.to_dict() for record in history])
    run.write_json("metrics.json", metrics.to_dict())
    return checkpoint


def _fold_predictions(
    model: SeverityRegressor,
    run_meta: dict[str, Any],
    fold: Fold,
    manifest_path: str | Path | None,
    artic_dir: str | Path | None,
) -> tuple[list[Prediction], list[SessionInputs]]:
    manifest_path = manifest_path or run_meta.get("manifest")
    if manifest_path is None:
        raise ConfigurationError("No manifest given and none stored with the model")
    artic_dir = artic_dir or run_meta.get("artic_dir")
    manifest = load_manifest(manifest_path)
    ratios = tuple(run_meta.get("split_ratios") or DEFAULT_RATIOS)
    split = make_splits(manifest, ratios, int(run_meta.get("split_seed", 0)))  # type: ignore[arg-type]
    inputs = session_inputs(manifest, split.sessions(manifest, fold), model.variant, artic_dir)
    return predict_dataset(model, inputs), inputs


def cmd_eval(
    run: RunDirectory,
    model_paths: Sequence[str | Path],
    fold: Fold | str = Fold.TEST,
    manifest_path: str | Path | None = None,
    artic_dir: str | Path | None = None,
    baseline: str | None = None,
) -> list[EvalReport]:
    """
    Evaluate one or more regressors on a fold with the split they were trained on.

    Writes report.json, report.txt and predictions.json.

    Returns:
        One report row per model, in argument order
    """
    fold = Fold(fold)
    reports: list[EvalReport] = []
    predictions: dict[str, list[dict[str, Any]]] = {}
    for path in model_paths:
        model, run_meta = load_regressor(path)
        fold_predictions, inputs = _fold_predictions(model, run_meta, fold, manifest_path, artic_dir)
        label = model_label(model)
        features = str(run_meta.get("features") or features_label(model, inputs))
        reports.append(evaluate(fold_predictions, label, features))
        predictions[str(path)] = [
            {"key": p.key, "predicted": p.predicted, "actual": p.actual} for p in fold_predictions
        ]
        logger.info(f"{label} on {fold}: MAE={reports[-1].mae:.4f} RMSE={reports[-1].rmse:.4f} rho={reports[-1].rho}")
    json_path, text_path = write_report(run.path, reports, baseline)
    run.record_output("report", json_path)
    run.record_output("report_text", text_path)
    run.write_json("predictions.json", predictions)
    print(render_text(reports, baseline), end="")
    return reports


def cmd_gradcheck(run: RunDirectory, seed: int = 0) -> list[GradCheckResult]:
    """
    Run the gradient-check suite and print one line per case.

    Raises:
        NumericError: If any case exceeds the tolerance
    """
    results = run_gradcheck_suite(seed)
    width = max(len(r.name) for r in results)
    for result in results:
        status = "ok" if result.passed else "FAIL"
        print(f"{result.name.ljust(width)}  {result.error:.3e}  {status}")
    run.write_json("gradcheck.json", {"tolerance": GRADCHECK_TOLERANCE, "results": [r.to_dict() for r in results]})
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericError(f"Gradient check failed for {len(failed)} case(s)", ", ".join(failed))
    logger.info(f"All {len(results)} gradient checks within {GRADCHECK_TOLERANCE:g}")
    return results
