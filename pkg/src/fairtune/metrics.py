"""Threshold-based performance and group-fairness metrics.

Group naming convention used everywhere: group a is attribute value 0,
group b is attribute value 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, MetricError

__all__ = [
    "ConfusionCounts",
    "GroupRates",
    "MetricsReport",
    "group_rates",
    "eod",
    "auroc",
    "classification_metrics",
    "aux_fairness_metrics",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class GroupRates:
    """Per-group TPR/FPR for one binary sensitive attribute.

    Holds hard rates when built from thresholded predictions and soft rates
    when built from sigmoid-relaxed indicators; the shape is identical.
    """

    attribute: str
    tpr_a: float
    fpr_a: float
    tpr_b: float
    fpr_b: float


@dataclass(frozen=True)
class MetricsReport:
    auroc: float
    sensitivity: float
    specificity: float
    eod_by_attribute: dict[str, float]
    dp_diff: dict[str, float]
    eopp_diff: dict[str, float]
    calibration_gap: dict[str, float]


def group_rates(
    probabilities: np.ndarray, data: Dataset, attribute: str, threshold: float = 0.5
) -> GroupRates:
    """Exact per-group TPR/FPR of the thresholded predictions."""
    if attribute not in data.sensitive:
        raise ConfigError(f"unknown sensitive attribute {attribute!r}")
    probs = np.asarray(probabilities, dtype=np.float64)
    predicted = probs >= threshold
    z = data.sensitive[attribute]
    y = data.labels

    def rate(group: int, label: int) -> float:
        cell = (z == group) & (y == label)
        return float(predicted[cell].mean())

    return GroupRates(
        attribute=attribute,
        tpr_a=rate(0, 1),
        fpr_a=rate(0, 0),
        tpr_b=rate(1, 1),
        fpr_b=rate(1, 0),
    )


def eod(rates: GroupRates) -> float:
    """Equalized-odds disparity: mean of the absolute TPR and FPR gaps."""
    return 0.5 * (abs(rates.tpr_a - rates.tpr_b) + abs(rates.fpr_a - rates.fpr_b))


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based Mann-Whitney estimate; ties receive half credit.

    Equals the all-pairs count of score_pos > score_neg (0.5 per tie)
    divided by the number of (negative, positive) pairs.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUROC needs at least one positive and one negative label")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def classification_metrics(
    probabilities: np.ndarray, labels: np.ndarray, threshold: float = 0.5
) -> tuple[float, float, ConfusionCounts]:
    """(sensitivity, specificity, confusion counts) at the given threshold."""
    probs = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels)
    if not ((y == 1).any() and (y == 0).any()):
        raise MetricError("classification metrics need both classes present")
    predicted = probs >= threshold
    tp = int(np.sum(predicted & (y == 1)))
    fp = int(np.sum(predicted & (y == 0)))
    fn = int(np.sum(~predicted & (y == 1)))
    tn = int(np.sum(~predicted & (y == 0)))
    counts = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
    return tp / (tp + fn), tn / (tn + fp), counts


def aux_fairness_metrics(
    probabilities: np.ndarray,
    data: Dataset,
    attribute: str,
    threshold: float = 0.5,
    bins: int = 10,
) -> tuple[float, float, float]:
    """Diagnostic gaps: demographic parity, equal opportunity, calibration.

    The calibration gap is the largest per-bin difference in empirical
    positive fraction between the two groups, over equal-width probability
    bins; bins with fewer than 10 samples in either group are skipped (0.0
    if no bin qualifies).
    """
    if attribute not in data.sensitive:
        raise ConfigError(f"unknown sensitive attribute {attribute!r}")
    if bins < 1:
        raise ConfigError("bins must be positive")
    probs = np.asarray(probabilities, dtype=np.float64)
    predicted = probs >= threshold
    z = data.sensitive[attribute]
    y = data.labels

    dp_diff = abs(float(predicted[z == 0].mean()) - float(predicted[z == 1].mean()))
    rates = group_rates(probs, data, attribute, threshold)
    eopp_diff = abs(rates.tpr_a - rates.tpr_b)

    edges = np.linspace(0.0, 1.0, bins + 1)
    bin_idx = np.clip(np.digitize(probs, edges[1:-1]), 0, bins - 1)
    gap = 0.0
    for b in range(bins):
        in_bin = bin_idx == b
        cell_a = in_bin & (z == 0)
        cell_b = in_bin & (z == 1)
        if cell_a.sum() < 10 or cell_b.sum() < 10:
            continue
        gap = max(gap, abs(float(y[cell_a].mean()) - float(y[cell_b].mean())))
    return dp_diff, eopp_diff, gap
