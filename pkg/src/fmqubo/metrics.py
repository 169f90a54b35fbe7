"""Regression quality metrics and repeat-run aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantInputError, DimensionMismatchError, ValidationError

__all__ = ["pearson", "spearman", "mse_loss", "MetricSummary", "summarize"]


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValidationError("inputs must be 1-d")
    if a.shape != b.shape:
        raise DimensionMismatchError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise ValidationError("need at least 2 points")
    return a, b


def pearson(y_true, y_pred) -> float:
    """Linear correlation coefficient; rejects constant inputs."""
    a, b = _paired(y_true, y_pred)
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.sum(da * da))
    nb = np.sqrt(np.sum(db * db))
    if na == 0.0 or nb == 0.0:
        raise ConstantInputError("correlation undefined for constant input")
    return float(np.sum(da * db) / (na * nb))


def spearman(y_true, y_pred) -> float:
    """Pearson correlation of average ranks (ties share the mean rank)."""
    a, b = _paired(y_true, y_pred)
    return pearson(rankdata(a), rankdata(b))


def mse_loss(y_true, y_pred) -> float:
    a = np.asarray(y_true, dtype=np.float64)
    b = np.asarray(y_pred, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValidationError("need at least 1 point")
    return float(np.mean((a - b) ** 2))


@dataclass(frozen=True)
class MetricSummary:
    """Correlation means/stds over the converged cases of a batch of runs."""

    pearson_mean: float
    pearson_std: float
    spearman_mean: float
    spearman_std: float
    n_cases: int
    n_failed: int


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    # sample std (n-1 denominator); a single case has spread 0
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), std


def summarize(per_case, converged) -> MetricSummary:
    """Aggregate per-case (pearson, spearman) pairs, skipping failed cases.

    ``converged`` flags which cases count; non-converged ones are excluded
    from the statistics but tallied in ``n_failed``.  NaN metrics in a
    converged case also mark it failed.
    """
    pairs = np.asarray(list(per_case), dtype=np.float64)
    flags = np.asarray(list(converged), dtype=bool)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValidationError("per_case must be (pearson, spearman) pairs")
    if flags.shape != (pairs.shape[0],):
        raise DimensionMismatchError(
            f"{flags.shape[0]} flags for {pairs.shape[0]} cases"
        )
    keep = flags & ~np.isnan(pairs).any(axis=1)
    kept = pairs[keep]
    if kept.shape[0] == 0:
        raise ValidationError("all cases failed; nothing to summarize")
    p_mean, p_std = _mean_std(kept[:, 0])
    s_mean, s_std = _mean_std(kept[:, 1])
    return MetricSummary(
        p_mean, p_std, s_mean, s_std,
        int(kept.shape[0]), int(pairs.shape[0] - kept.shape[0]),
    )
