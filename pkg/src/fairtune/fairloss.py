"""Differentiable fairness objectives.

The hard prediction indicator (logit >= 0) is relaxed to a steepness-k
sigmoid of the logit, which makes per-group TPR/FPR, the per-attribute
fairness loss, and the equalized-odds surrogate differentiable in the model
parameters. Band penalties keep metrics of interest near a reference value
from the previous optimization phase; for gradients the indicator band is
relaxed to a one-sided squared hinge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ConfigError
from .metrics import GroupRates
from .model import ModelParams, bce_loss_and_grad, predict_proba

__all__ = [
    "SoftRateConfig",
    "PenaltySpec",
    "CompositeObjective",
    "soft_sigmoid",
    "soft_group_rates",
    "soft_eod_and_grad",
    "fairness_loss_and_grad",
    "penalty",
    "composite_loss_and_grad",
]

_RATE_EPS = 1e-12


@dataclass(frozen=True)
class SoftRateConfig:
    """Steepness of the sigmoid that replaces the 0/1 prediction indicator."""

    steepness: float = 5.0

    def __post_init__(self):
        if self.steepness <= 0:
            raise ConfigError("steepness must be positive")


@dataclass(frozen=True)
class PenaltySpec:
    """Keep a metric within a tolerance band around a reference value.

    ``metric_kind`` is either "performance_loss" (full-train BCE) or
    "attribute_eod" (soft equalized-odds disparity of ``attribute``).
    The relaxed penalty is weight * max(0, violation)**2, one-sided in the
    penalized direction; the hard band check is the two-sided indicator
    reference - tolerance <= current <= reference + tolerance.
    """

    metric_kind: str
    reference_value: float
    attribute: str | None = None
    tolerance: float = 0.02
    weight: float = 1.0
    direction: str = "penalize_increase"

    def __post_init__(self):
        if self.metric_kind not in ("performance_loss", "attribute_eod"):
            raise ConfigError(f"unknown metric_kind {self.metric_kind!r}")
        if self.metric_kind == "attribute_eod" and not self.attribute:
            raise ConfigError("attribute_eod penalty needs an attribute name")
        if self.direction not in ("penalize_increase", "penalize_decrease"):
            raise ConfigError(f"unknown direction {self.direction!r}")
        if self.tolerance < 0 or self.weight < 0:
            raise ConfigError("tolerance and weight must be non-negative")

    @property
    def term_name(self) -> str:
        if self.metric_kind == "performance_loss":
            return "penalty_bce"
        return f"penalty_eod_{self.attribute}"


@dataclass(frozen=True)
class CompositeObjective:
    """Active fairness losses plus accumulated band penalties."""

    fairness_attributes: tuple[str, ...]
    penalties: tuple[PenaltySpec, ...] = ()
    soft_config: SoftRateConfig = field(default_factory=SoftRateConfig)

    def __post_init__(self):
        object.__setattr__(self, "fairness_attributes", tuple(self.fairness_attributes))
        object.__setattr__(self, "penalties", tuple(self.penalties))
        names = self.fairness_attributes
        if len(set(names)) != len(names):
            raise ConfigError("fairness attributes must be distinct")
        n_perf = sum(p.metric_kind == "performance_loss" for p in self.penalties)
        if n_perf > 1:
            raise ConfigError("at most one performance penalty is allowed")


def soft_sigmoid(x, k: float):
    """1 / (1 + exp(-k*x)), overflow-safe, clipped into the open unit interval."""
    if k <= 0:
        raise ConfigError("steepness k must be positive")
    kx = np.multiply(k, x, dtype=np.float64)
    out = np.where(
        kx >= 0,
        1.0 / (1.0 + np.exp(-np.abs(kx))),
        np.exp(-np.abs(kx)) / (1.0 + np.exp(-np.abs(kx))),
    )
    out = np.clip(out, _RATE_EPS, 1.0 - _RATE_EPS)
    return float(out) if np.isscalar(x) else out


def _soft_cells(params: ModelParams, data: Dataset, attribute: str, k: float):
    """Soft rate and its parameter gradient for each (group, label) cell.

    Returns {(group, label): (rate, d_rate/d_weights, d_rate/d_bias)}.
    """
    if attribute not in data.sensitive:
        raise ConfigError(f"unknown sensitive attribute {attribute!r}")
    logits, _ = predict_proba(params, data.features)
    s = soft_sigmoid(logits, k)
    slope = k * s * (1.0 - s)  # d soft indicator / d logit
    z = data.sensitive[attribute]
    y = data.labels
    cells = {}
    for group in (0, 1):
        for label in (0, 1):
            mask = (z == group) & (y == label)
            m = int(mask.sum())
            rate = float(s[mask].mean())
            d_w = data.features[mask].T @ slope[mask] / m
            d_b = float(slope[mask].mean())
            cells[(group, label)] = (rate, d_w, d_b)
    return cells


def soft_group_rates(params: ModelParams, data: Dataset, attribute: str, k: float) -> GroupRates:
    """Sigmoid-relaxed TPR/FPR per group (differentiable counterpart of the
    hard rates at the 0-logit threshold)."""
    cells = _soft_cells(params, data, attribute, k)
    return GroupRates(
        attribute=attribute,
        tpr_a=cells[(0, 1)][0],
        fpr_a=cells[(0, 0)][0],
        tpr_b=cells[(1, 1)][0],
        fpr_b=cells[(1, 0)][0],
    )


def fairness_loss_and_grad(
    params: ModelParams, data: Dataset, attribute: str, k: float
) -> tuple[float, ModelParams]:
    """Half the squared soft-TPR gap plus half the squared soft-FPR gap."""
    cells = _soft_cells(params, data, attribute, k)
    tpr_a, dw_ta, db_ta = cells[(0, 1)]
    tpr_b, dw_tb, db_tb = cells[(1, 1)]
    fpr_a, dw_fa, db_fa = cells[(0, 0)]
    fpr_b, dw_fb, db_fb = cells[(1, 0)]
    d_tpr = tpr_a - tpr_b
    d_fpr = fpr_a - fpr_b
    loss = 0.5 * d_tpr**2 + 0.5 * d_fpr**2
    grad_w = d_tpr * (dw_ta - dw_tb) + d_fpr * (dw_fa - dw_fb)
    grad_b = d_tpr * (db_ta - db_tb) + d_fpr * (db_fa - db_fb)
    return loss, ModelParams(weights=grad_w, bias=grad_b)


def soft_eod_and_grad(
    params: ModelParams, data: Dataset, attribute: str, k: float
) -> tuple[float, ModelParams]:
    """Differentiable equalized-odds disparity: mean of absolute soft gaps."""
    cells = _soft_cells(params, data, attribute, k)
    tpr_a, dw_ta, db_ta = cells[(0, 1)]
    tpr_b, dw_tb, db_tb = cells[(1, 1)]
    fpr_a, dw_fa, db_fa = cells[(0, 0)]
    fpr_b, dw_fb, db_fb = cells[(1, 0)]
    d_tpr = tpr_a - tpr_b
    d_fpr = fpr_a - fpr_b
    value = 0.5 * (abs(d_tpr) + abs(d_fpr))
    s_t = np.sign(d_tpr)
    s_f = np.sign(d_fpr)
    grad_w = 0.5 * (s_t * (dw_ta - dw_tb) + s_f * (dw_fa - dw_fb))
    grad_b = 0.5 * (s_t * (db_ta - db_tb) + s_f * (db_fa - db_fb))
    return value, ModelParams(weights=grad_w, bias=grad_b)


def penalty(spec: PenaltySpec, current_value: float) -> tuple[bool, float]:
    """Hard band indicator and the relaxed one-sided squared hinge value."""
    ref, eps = spec.reference_value, spec.tolerance
    hard_in_band = ref - eps <= current_value <= ref + eps
    if spec.direction == "penalize_increase":
        violation = current_value - ref - eps
    else:
        violation = ref - eps - current_value
    relaxed = spec.weight * max(0.0, violation) ** 2
    return hard_in_band, relaxed


def _penalty_slope(spec: PenaltySpec, current_value: float) -> float:
    """d relaxed / d current_value."""
    ref, eps = spec.reference_value, spec.tolerance
    if spec.direction == "penalize_increase":
        violation = current_value - ref - eps
        sign = 1.0
    else:
        violation = ref - eps - current_value
        sign = -1.0
    if violation <= 0:
        return 0.0
    return sign * 2.0 * spec.weight * violation


def composite_loss_and_grad(
    objective: CompositeObjective, params: ModelParams, data: Dataset
) -> tuple[float, ModelParams, dict[str, float]]:
    """Sum of active fairness losses and relaxed penalties, with gradient.

    The performance penalty tracks the full-train BCE; attribute penalties
    track the soft equalized-odds disparity of their attribute. ``per_term``
    maps each addend's name to its value for tracing.
    """
    k = objective.soft_config.steepness
    total = 0.0
    grad_w = np.zeros(params.d)
    grad_b = 0.0
    per_term: dict[str, float] = {}

    for attr in objective.fairness_attributes:
        loss, grad = fairness_loss_and_grad(params, data, attr, k)
        total += loss
        grad_w += grad.weights
        grad_b += grad.bias
        per_term[f"fairness_{attr}"] = loss

    for spec in objective.penalties:
        if spec.metric_kind == "performance_loss":
            current, current_grad = bce_loss_and_grad(params, data)
        else:
            current, current_grad = soft_eod_and_grad(params, data, spec.attribute, k)
        _, relaxed = penalty(spec, current)
        slope = _penalty_slope(spec, current)
        total += relaxed
        grad_w += slope * current_grad.weights
        grad_b += slope * current_grad.bias
        per_term[spec.term_name] = relaxed

    return total, ModelParams(weights=grad_w, bias=grad_b), per_term
