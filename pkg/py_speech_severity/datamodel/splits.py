"""
Subject-independent train/validation/test splitting.

Subjects (never sessions or segments) are shuffled by seed and apportioned to
folds by the largest-remainder method; a fold left empty is then given one
subject taken from the largest fold.
"""

# Python imports
from __future__ import annotations

import math

import numpy as np
from loguru import logger

# Local imports
from ..exceptions import ConfigurationError, DataError
from .types import Fold, Manifest, SplitAssignment

DEFAULT_RATIOS: tuple[float, float, float] = (0.70, 0.15, 0.15)


def apportion(n: int, ratios: tuple[float, ...]) -> list[int]:
    """
    Largest-remainder apportionment of n items over ratios, with nonempty repair.

    Floors of n * ratio are assigned first; leftover items go to the largest
    fractional parts (ties to the earlier fold). Afterwards every empty fold
    takes one item from the currently largest fold (ties to the earlier fold).

    Args:
        n: Number of items (>= number of folds)
        ratios: Positive ratios summing to 1

    Returns:
        Item count per fold
    """
    quotas = [n * r for r in ratios]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    for i in range(len(counts)):
        if counts[i] == 0:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def make_splits(
    manifest: Manifest,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> SplitAssignment:
    """
    Assign every subject of a manifest to exactly one fold.

    Args:
        manifest: Dataset manifest
        ratios: (train, val, test) ratios, all positive, summing to 1
        seed: Shuffle seed

    Returns:
        Deterministic SplitAssignment for the given seed

    Raises:
        DataError: If fewer than 3 distinct subjects exist
        ConfigurationError: If the ratios are degenerate
    """
    if len(ratios) != 3 or any(not math.isfinite(r) or r <= 0 for r in ratios):
        raise ConfigurationError("Degenerate split ratios", f"{ratios}: need three positive ratios")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigurationError("Degenerate split ratios", f"{ratios} sum to {sum(ratios)}, expected 1")
    subjects = manifest.subjects
    if len(subjects) < 3:
        raise DataError("Need at least 3 subjects to split", f"got {len(subjects)}")
    rng = np.random.default_rng(seed)
    shuffled = [subjects[i] for i in rng.permutation(len(subjects))]
    counts = apportion(len(shuffled), ratios)
    assignment: dict[str, Fold] = {}
    start = 0
    for fold, count in zip(Fold, counts, strict=True):
        for subject in shuffled[start : start + count]:
            assignment[subject] = fold
        start += count
    split = SplitAssignment(assignment=assignment, seed=seed, ratios=tuple(ratios))  # type: ignore[arg-type]
    logger.debug(f"Split {len(subjects)} subjects with seed {seed}: train/val/test = {tuple(counts)}")
    return split
