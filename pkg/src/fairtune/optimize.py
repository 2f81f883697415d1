"""Fairness fine-tuning: sequential and simultaneous strategies.

Both strategies start from the performance-optimized parameters and take
full-batch Adam steps on a composite objective (fairness losses plus band
penalties). After every step the hard training-set disparities are
evaluated; the best iterate satisfying the thresholds and the penalty bands
is kept as the snapshot. Per-batch group cells can be empty or tiny, so
fairness-phase gradients always use the full training set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, NumericError
from .fairloss import CompositeObjective, PenaltySpec, SoftRateConfig, composite_loss_and_grad
from .metrics import MetricsReport, aux_fairness_metrics, auroc, classification_metrics, eod, group_rates
from .model import AdamState, ModelParams, TrainConfig, adam_step, bce_loss_and_grad, predict_proba

__all__ = [
    "FairnessSpec",
    "TraceStep",
    "OptimizationTrace",
    "FairModelResult",
    "optimize_sequential",
    "optimize_simultaneous",
    "evaluate_model",
    "export_trace",
]

DEFAULT_EOD_THRESHOLD = 0.05

# The relaxed hinge has zero gradient inside its band, so a trajectory
# balancing fairness pressure against the hinge settles slightly OUTSIDE the
# banded region. Gradient penalties therefore get a tighter band than the
# snapshot acceptance check, keeping accepted iterates strictly inside the
# full tolerance.
HINGE_TOLERANCE_FRACTION = 0.5


@dataclass(frozen=True)
class FairnessSpec:
    """Which attributes to optimize, in priority order, and how hard to try."""

    attributes: tuple[str, ...]
    thresholds: dict[str, float] = field(default_factory=dict)
    step_budget: int = 1000
    tolerance: float = 0.02
    steepness: float = 5.0
    fairness_learning_rate: float = 0.001
    penalty_weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if len(set(self.attributes)) != len(self.attributes):
            raise ConfigError("fairness attributes must be distinct")
        thresholds = {a: self.thresholds.get(a, DEFAULT_EOD_THRESHOLD) for a in self.attributes}
        for name, zeta in thresholds.items():
            if not 0.0 < zeta <= 1.0:
                raise ConfigError(f"threshold for {name!r} must lie in (0,1], got {zeta}")
        object.__setattr__(self, "thresholds", thresholds)
        if self.step_budget < 1:
            raise ConfigError("step_budget must be positive")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be non-negative")
        if self.steepness <= 0:
            raise ConfigError("steepness must be positive")
        if self.fairness_learning_rate <= 0:
            raise ConfigError("fairness_learning_rate must be positive")
        if self.penalty_weight < 0:
            raise ConfigError("penalty_weight must be non-negative")


@dataclass(frozen=True)
class TraceStep:
    step: int
    phase: str  # attribute being optimized, or "all" for the simultaneous strategy
    total_loss: float
    terms: dict[str, float]
    eod: dict[str, float]  # hard training-set disparity per attribute
    bce: float
    accepted: bool


@dataclass(frozen=True)
class OptimizationTrace:
    steps: tuple[TraceStep, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        indices = [s.step for s in self.steps]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ConfigError("trace step indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class FairModelResult:
    params: ModelParams
    strategy: str  # "sequential" or "simultaneous"
    attribute_order: tuple[str, ...]
    found_fair: dict[str, bool]
    trace: OptimizationTrace
    recorded_eods: dict[str, float]


def _check_spec(train: Dataset, spec: FairnessSpec) -> None:
    for attr in spec.attributes:
        if attr not in train.sensitive:
            raise ConfigError(f"fairness attribute {attr!r} not present in the dataset")


def _hard_eods(params: ModelParams, train: Dataset, spec: FairnessSpec) -> dict[str, float]:
    _, probs = predict_proba(params, train.features)
    return {a: eod(group_rates(probs, train, a)) for a in spec.attributes}


def _fairness_adam_config(spec: FairnessSpec) -> TrainConfig:
    return TrainConfig(learning_rate=spec.fairness_learning_rate)


def _step(params, grad, state, adam_cfg, total):
    if not np.isfinite(total):
        raise NumericError("non-finite composite loss during fairness optimization")
    return adam_step(params, grad, state, adam_cfg)


def optimize_sequential(
    theta_po: ModelParams, train: Dataset, spec: FairnessSpec
) -> FairModelResult:
    """Optimize one attribute at a time, guarding earlier achievements.

    For each attribute in order, up to ``step_budget`` full-batch steps
    minimize that attribute's fairness loss plus all accumulated penalties
    (performance first, then one disparity band per finished attribute).
    A step becomes the phase snapshot when its hard disparity is within the
    threshold, no worse than the best so far, and the accumulated bands
    hold; the phase stops early once fairness is lost after a snapshot
    exists. When a phase finds no fair iterate, the next phase continues
    from its lowest-loss iterate instead.
    """
    _check_spec(train, spec)
    adam_cfg = _fairness_adam_config(spec)
    soft_cfg = SoftRateConfig(spec.steepness)
    bce_ref, _ = bce_loss_and_grad(theta_po, train)
    hinge_tol = HINGE_TOLERANCE_FRACTION * spec.tolerance
    penalties: list[PenaltySpec] = [
        PenaltySpec(
            "performance_loss",
            reference_value=bce_ref,
            tolerance=hinge_tol,
            weight=spec.penalty_weight,
        )
    ]
    # acceptance caps on hard metrics: reference + tolerance, tightened to the
    # threshold for attributes whose phase succeeded (so found_fair stays honest)
    eod_caps: dict[str, float] = {}
    phase_found: dict[str, bool] = {}
    current = theta_po
    steps: list[TraceStep] = []
    step_no = 0

    for attr in spec.attributes:
        zeta = spec.thresholds[attr]
        objective = CompositeObjective((attr,), tuple(penalties), soft_cfg)
        params = current
        state = AdamState.zeros(train.d)
        total, grad, _ = composite_loss_and_grad(objective, params, train)
        min_eod = np.inf
        snapshot = None
        best_loss = np.inf
        best_iterate = params
        for _ in range(spec.step_budget):
            params, state = _step(params, grad, state, adam_cfg, total)
            total, grad, terms = composite_loss_and_grad(objective, params, train)
            eods = _hard_eods(params, train, spec)
            bce_val, _ = bce_loss_and_grad(params, train)
            step_no += 1
            if total < best_loss:
                best_loss = total
                best_iterate = params
            bands_ok = bce_val <= bce_ref + spec.tolerance and all(
                eods[a] <= cap for a, cap in eod_caps.items()
            )
            accepted = eods[attr] <= zeta and eods[attr] <= min_eod and bands_ok
            if accepted:
                min_eod = eods[attr]
                snapshot = params
            steps.append(TraceStep(step_no, attr, total, terms, eods, bce_val, accepted))
            if eods[attr] >= zeta and np.isfinite(min_eod):
                break
        if snapshot is not None:
            current = snapshot
            phase_found[attr] = True
            reference = min_eod
            eod_caps[attr] = min(reference + spec.tolerance, zeta)
        else:
            current = best_iterate
            phase_found[attr] = False
            reference = _hard_eods(current, train, spec)[attr]
            eod_caps[attr] = reference + spec.tolerance
        penalties.append(
            PenaltySpec(
                "attribute_eod",
                reference_value=reference,
                attribute=attr,
                tolerance=hinge_tol,
                weight=spec.penalty_weight,
            )
        )

    recorded = _hard_eods(current, train, spec)
    found_fair = {
        a: phase_found[a] and recorded[a] <= spec.thresholds[a] for a in spec.attributes
    }
    return FairModelResult(
        params=current,
        strategy="sequential",
        attribute_order=spec.attributes,
        found_fair=found_fair,
        trace=OptimizationTrace(tuple(steps)),
        recorded_eods=recorded,
    )


def optimize_simultaneous(
    theta_po: ModelParams, train: Dataset, spec: FairnessSpec
) -> FairModelResult:
    """Optimize all attributes in a single phase.

    Up to ``step_budget`` full-batch steps minimize the sum of all fairness
    losses plus the performance band penalty. A step becomes the snapshot
    when every hard disparity is within its threshold, their sum improves
    on the best so far, and the performance band holds; the loop stops
    early once fairness is lost after a snapshot exists. Without any fair
    step the starting parameters are returned unchanged.
    """
    _check_spec(train, spec)
    if not spec.attributes:
        return FairModelResult(
            params=theta_po,
            strategy="simultaneous",
            attribute_order=(),
            found_fair={},
            trace=OptimizationTrace(),
            recorded_eods={},
        )
    adam_cfg = _fairness_adam_config(spec)
    bce_ref, _ = bce_loss_and_grad(theta_po, train)
    objective = CompositeObjective(
        spec.attributes,
        (
            PenaltySpec(
                "performance_loss",
                reference_value=bce_ref,
                tolerance=HINGE_TOLERANCE_FRACTION * spec.tolerance,
                weight=spec.penalty_weight,
            ),
        ),
        SoftRateConfig(spec.steepness),
    )
    params = theta_po
    state = AdamState.zeros(train.d)
    total, grad, _ = composite_loss_and_grad(objective, params, train)
    snapshot = None
    min_eod_total = np.inf
    steps: list[TraceStep] = []
    for step_no in range(1, spec.step_budget + 1):
        params, state = _step(params, grad, state, adam_cfg, total)
        total, grad, terms = composite_loss_and_grad(objective, params, train)
        eods = _hard_eods(params, train, spec)
        bce_val, _ = bce_loss_and_grad(params, train)
        eod_total = sum(eods.values())
        fair_all = all(eods[a] <= spec.thresholds[a] for a in spec.attributes)
        accepted = (
            fair_all and eod_total < min_eod_total and bce_val <= bce_ref + spec.tolerance
        )
        if accepted:
            min_eod_total = eod_total
            snapshot = params
        steps.append(TraceStep(step_no, "all", total, terms, eods, bce_val, accepted))
        if not fair_all and snapshot is not None:
            break

    final = snapshot if snapshot is not None else theta_po
    recorded = _hard_eods(final, train, spec)
    found = snapshot is not None
    return FairModelResult(
        params=final,
        strategy="simultaneous",
        attribute_order=spec.attributes,
        found_fair={a: found for a in spec.attributes},
        trace=OptimizationTrace(tuple(steps)),
        recorded_eods=recorded,
    )


def evaluate_model(
    params: ModelParams, data: Dataset, spec: FairnessSpec, threshold: float = 0.5
) -> MetricsReport:
    """Full metrics report for the given parameters on one data surface."""
    _check_spec(data, spec)
    _, probs = predict_proba(params, data.features)
    sens, specificity, _ = classification_metrics(probs, data.labels, threshold)
    eods, dp, eopp, calib = {}, {}, {}, {}
    for attr in spec.attributes:
        eods[attr] = eod(group_rates(probs, data, attr, threshold))
        dp[attr], eopp[attr], calib[attr] = aux_fairness_metrics(probs, data, attr, threshold)
    return MetricsReport(
        auroc=auroc(probs, data.labels),
        sensitivity=sens,
        specificity=specificity,
        eod_by_attribute=eods,
        dp_diff=dp,
        eopp_diff=eopp,
        calibration_gap=calib,
    )


def export_trace(trace: OptimizationTrace, path) -> None:
    """One CSV row per step: step, total_loss, per-term columns, per-attribute
    disparity, full-train BCE, accepted flag."""
    term_names: list[str] = []
    attr_names: list[str] = []
    for s in trace.steps:
        for name in s.terms:
            if name not in term_names:
                term_names.append(name)
        for name in s.eod:
            if name not in attr_names:
                attr_names.append(name)
    header = ["step", "total_loss", *term_names, *[f"eod_{a}" for a in attr_names], "bce", "accepted"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in trace.steps:
            row = [s.step, f"{s.total_loss:.17g}"]
            row += [f"{s.terms[t]:.17g}" if t in s.terms else "" for t in term_names]
            row += [f"{s.eod[a]:.17g}" for a in attr_names]
            row += [f"{s.bce:.17g}", int(s.accepted)]
            writer.writerow(row)
