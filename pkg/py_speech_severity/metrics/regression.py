"""
Regression metrics: MAE, RMSE and Spearman's rank correlation.
"""

# Python imports
from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata

# Local imports
from ..exceptions import DataError


def _pair(actual: Sequence[float] | np.ndarray, pred: Sequence[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    if a.size != p.size:
        raise DataError("Length mismatch", f"actual has {a.size} values, pred has {p.size}")
    if a.size == 0:
        raise DataError("Metrics need at least one value")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise DataError("Metrics need finite values")
    return a, p


def mae(actual: Sequence[float] | np.ndarray, pred: Sequence[float] | np.ndarray) -> float:
    """
    Mean absolute error.

    Raises:
        DataError: On empty input or a length mismatch
    """
    a, p = _pair(actual, pred)
    return float(np.mean(np.abs(a - p)))


def rmse(actual: Sequence[float] | np.ndarray, pred: Sequence[float] | np.ndarray) -> float:
    """
    Root mean squared error.

    Raises:
        DataError: On empty input or a length mismatch
    """
    a, p = _pair(actual, pred)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def spearman_rho(actual: Sequence[float] | np.ndarray, pred: Sequence[float] | np.ndarray) -> float | None:
    """
    Spearman's rank correlation 1 - 6 * sum(d_i^2) / (n (n^2 - 1)).

    Ties share the average of their rank positions and the closed formula is
    applied to those ranks as is (no Pearson-on-ranks correction).

    Returns:
        The coefficient, or None when either list has a single distinct value

    Raises:
        DataError: If fewer than 2 pairs are given or lengths differ
    """
    a, p = _pair(actual, pred)
    n = a.size
    if n < 2:
        raise DataError("Spearman's rho needs at least 2 pairs", f"got {n}")
    if np.all(a == a[0]) or np.all(p == p[0]):
        return None
    d = rankdata(a, method="average") - rankdata(p, method="average")
    return float(1.0 - 6.0 * float(np.sum(d * d)) / (n * (n * n - 1)))
