"""Accuracy and parity metrics for fitted predictions.

Group arguments follow one convention: with explicit k, all groups 0..k-1
must be present; with k omitted, the observed distinct codes define the
groups (useful on evaluation splits that may miss a group).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import wasserstein_distance

from .errors import DimensionError, MissingGroupError, NumericError
from .linalg import as_matrix, as_vector, center_gram


def _group_index(group_codes, k: Optional[int]) -> list[np.ndarray]:
    codes = np.asarray(group_codes)
    if codes.ndim != 1 or codes.size == 0:
        raise DimensionError("group_codes must be a non-empty 1-D array")
    if codes.min() < 0:
        raise ValueError("group codes must be non-negative")
    if k is None:
        return [np.flatnonzero(codes == g) for g in np.unique(codes)]
    if codes.max() >= k:
        raise ValueError(f"group code {codes.max()} out of range for k={k}")
    masks = [np.flatnonzero(codes == g) for g in range(k)]
    empty = [g for g, idx in enumerate(masks) if idx.size == 0]
    if empty:
        raise MissingGroupError(f"groups {empty} have no samples (k={k})")
    return masks


def mse(pred, y) -> float:
    """Mean squared error."""
    pred, y = as_vector(pred, "pred"), as_vector(y, "y")
    if pred.shape != y.shape:
        raise DimensionError(f"length mismatch: pred {pred.shape}, y {y.shape}")
    if pred.size == 0:
        raise DimensionError("mse needs at least one sample")
    return float(np.mean((pred - y) ** 2))


def group_means(pred, group_codes, k: Optional[int] = None) -> np.ndarray:
    """Per-group prediction means, indexed by group."""
    pred = as_vector(pred, "pred")
    return np.array([pred[idx].mean() for idx in _group_index(group_codes, k)])


def smd(pred, group_codes, k: Optional[int] = None) -> float:
    """Sum over groups of |group mean - overall mean| of the predictions.

    This is both the sample mean discrepancy and the empirical mean-parity
    deviation; the two names measure the same quantity.
    """
    pred = as_vector(pred, "pred")
    means = group_means(pred, group_codes, k)
    return float(np.sum(np.abs(means - pred.mean())))


mpd = smd


def w1_empirical(a, b) -> float:
    """First Wasserstein distance between two empirical distributions.

    Equals the integral of |F_a - F_b| over the merged support.
    """
    a, b = as_vector(a, "a"), as_vector(b, "b")
    if a.size == 0 or b.size == 0:
        raise DimensionError("w1_empirical needs non-empty samples")
    return float(wasserstein_distance(a, b))


def dpd(pred, group_codes, k: Optional[int] = None) -> float:
    """Sum over groups of W1(predictions in group, all predictions)."""
    pred = as_vector(pred, "pred")
    total = 0.0
    for idx in _group_index(group_codes, k):
        total += w1_empirical(pred[idx], pred)
    return float(total)


def cov_norm(pred, gram_s) -> float:
    """RKHS norm of the empirical cross-covariance with the sensitive kernel.

    (1/n) * sqrt(p~^T H K_S H p~) with p~ the centered predictions. The
    quadratic form is non-negative for a PSD K_S; a materially negative value
    indicates a broken Gram matrix and raises.
    """
    pred = as_vector(pred, "pred")
    gram_s = as_matrix(gram_s, "gram_s")
    n = pred.size
    if gram_s.shape != (n, n):
        raise DimensionError(f"gram_s must be ({n}, {n}), got {gram_s.shape}")
    centered_pred = pred - pred.mean()
    q = float(centered_pred @ center_gram(gram_s) @ centered_pred)
    scale = max(1.0, float(np.linalg.norm(gram_s)) * float(centered_pred @ centered_pred))
    if q < -1e-10 * scale:
        raise NumericError(f"covariance quadratic form is negative: {q:.3e}")
    return float(np.sqrt(max(q, 0.0)) / n)


@dataclass(frozen=True)
class MetricReport:
    """All metrics of one prediction vector on one split."""

    split: str
    mse: float
    smd: float
    mpd: float
    dpd: float
    cov_norm: Optional[float]
    per_group_means: np.ndarray


def evaluate(pred, y, group_codes, gram_s=None, split: str = "train") -> MetricReport:
    """Bundle every metric for one split; cov_norm only when K_S is given."""
    parity = smd(pred, group_codes)
    return MetricReport(
        split=split,
        mse=mse(pred, y),
        smd=parity,
        mpd=parity,
        dpd=dpd(pred, group_codes),
        cov_norm=None if gram_s is None else cov_norm(pred, gram_s),
        per_group_means=group_means(pred, group_codes),
    )
