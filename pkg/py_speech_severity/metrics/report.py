"""
Evaluation reports in the Model / Features / MAE / RMSE / rho table layout.
"""

# Python imports
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Protocol

import msgspec
from msgspec import Struct

# Local imports
from ..exceptions import DataError
from .regression import mae, rmse, spearman_rho


class PredictionLike(Protocol):
    """Anything with a predicted and an actual severity."""

    predicted: float
    actual: float


class EvalReport(Struct, frozen=True):
    """
    One report row.

    Attributes:
        model: Model label, e.g. "Feature-Fusion with MHA"
        features: Features label, e.g. "wav2vec2-base + concise articulatory"
        mae: Mean absolute error
        rmse: Root mean squared error
        rho: Spearman's rho, None when undefined
        n: Number of sessions
        modality: Input modality label
    """

    model: str
    features: str
    mae: float
    rmse: float
    rho: float | None
    n: int
    modality: str = "Audio"


class _ReportDocument(Struct):
    rows: list[EvalReport]


def _unpack(item: PredictionLike | tuple[str, float, float]) -> tuple[float, float]:
    if isinstance(item, tuple):
        _, predicted, actual = item
        return float(predicted), float(actual)
    return float(item.predicted), float(item.actual)


def evaluate(
    predictions: Sequence[PredictionLike | tuple[str, float, float]],
    model: str,
    features: str,
    modality: str = "Audio",
) -> EvalReport:
    """
    MAE, RMSE and rho of (id, predicted, actual) triples or Prediction records.

    Raises:
        DataError: If fewer than 2 predictions are given
    """
    if not predictions:
        raise DataError("Cannot evaluate an empty prediction set", model)
    pairs = [_unpack(item) for item in predictions]
    pred = [p for p, _ in pairs]
    actual = [a for _, a in pairs]
    return EvalReport(
        model=model,
        features=features,
        mae=mae(actual, pred),
        rmse=rmse(actual, pred),
        rho=spearman_rho(actual, pred),
        n=len(pairs),
        modality=modality,
    )


def relative_improvement(baseline: EvalReport, candidate: EvalReport) -> dict[str, float]:
    """
    Percentage reduction of MAE and RMSE of `candidate` relative to `baseline`.

    Raises:
        DataError: If a baseline error is zero
    """
    if baseline.mae == 0 or baseline.rmse == 0:
        raise DataError("Relative improvement over a zero-error baseline is undefined", baseline.model)
    return {
        "mae": 100.0 * (baseline.mae - candidate.mae) / baseline.mae,
        "rmse": 100.0 * (baseline.rmse - candidate.rmse) / baseline.rmse,
    }


def _rho_text(rho: float | None) -> str:
    return "undefined" if rho is None else f"{rho:.4f}"


def render_text(reports: Sequence[EvalReport], baseline: str | None = None) -> str:
    """
    Plain-text table; MAE and RMSE to 2 decimals, rho to 4.

    When `baseline` names a row, every other row gets a line with its relative
    MAE/RMSE improvement over that row.
    """
    header = ("Model", "Modality", "Features", "MAE↓", "RMSE↓", "ρ↑")
    rows = [(r.model, r.modality, r.features, f"{r.mae:.2f}", f"{r.rmse:.2f}", _rho_text(r.rho)) for r in reports]
    widths = [max(len(str(row[i])) for row in [header, *rows]) for i in range(len(header))]
    lines = [" | ".join(cell.ljust(w) for cell, w in zip(header, widths, strict=True))]
    lines.append("-+-".join("-" * w for w in widths))
    lines.extend(" | ".join(cell.ljust(w) for cell, w in zip(row, widths, strict=True)) for row in rows)
    if baseline is not None:
        base = next((r for r in reports if r.model == baseline), None)
        if base is None:
            raise DataError("Unknown baseline row", baseline)
        for r in reports:
            if r is base:
                continue
            gain = relative_improvement(base, r)
            lines.append(f"{r.model} vs {base.model}: MAE {gain['mae']:+.2f}%, RMSE {gain['rmse']:+.2f}%")
    return "\n".join(lines) + "\n"


def to_json(reports: Sequence[EvalReport]) -> bytes:
    """Report JSON {"rows": [...]} at full precision; an undefined rho is null."""
    return msgspec.json.format(msgspec.json.encode(_ReportDocument(rows=list(reports))), indent=2)


def from_json(data: bytes | str) -> list[EvalReport]:
    """
    Parse report JSON written by to_json.

    Raises:
        DataError: If the document is malformed
    """
    try:
        return msgspec.json.decode(data, type=_ReportDocument).rows
    except (msgspec.DecodeError, msgspec.ValidationError) as e:
        raise DataError("Malformed report", str(e)) from e


def write_report(
    directory: str | Path,
    reports: Sequence[EvalReport],
    baseline: str | None = None,
) -> tuple[Path, Path]:
    """Write report.json and report.txt into a directory."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    json_path = target / "report.json"
    text_path = target / "report.txt"
    json_path.write_bytes(to_json(reports) + b"\n")
    text_path.write_text(render_text(reports, baseline), encoding="utf-8")
    return json_path, text_path
