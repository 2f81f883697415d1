"""fairtune: logistic-regression training with multi-attribute
equalized-odds fine-tuning.

Workflow: train a performance-optimized model (`train_performance`), then
fine-tune it toward equalized odds over one or more binary sensitive
attributes with `optimize_sequential` or `optimize_simultaneous`. The
`experiment` module runs multi-seed pipelines over scenarios and emits
aggregated reports; `synthgen` provides biased synthetic data for
experimentation without clinical records.
"""

from .dataset import Dataset, SplitSpec, group_view, load_csv, save_csv, standardize_split, stratified_split
from .errors import ConfigError, DataError, FairtuneError, GenerationError, MetricError, NumericError
from .fairloss import (
    CompositeObjective,
    PenaltySpec,
    SoftRateConfig,
    composite_loss_and_grad,
    fairness_loss_and_grad,
    penalty,
    soft_group_rates,
    soft_sigmoid,
)
from .metrics import (
    ConfusionCounts,
    GroupRates,
    MetricsReport,
    auroc,
    aux_fairness_metrics,
    classification_metrics,
    eod,
    group_rates,
)
from .model import (
    AdamState,
    ModelParams,
    TrainConfig,
    adam_step,
    bce_loss_and_grad,
    load_params,
    predict_proba,
    save_params,
    train_performance,
)
from .optimize import (
    FairModelResult,
    FairnessSpec,
    OptimizationTrace,
    evaluate_model,
    export_trace,
    optimize_sequential,
    optimize_simultaneous,
)
from .synthgen import SynthConfig, generate, preset

__version__ = "0.1.0"
