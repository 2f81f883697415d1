"""Logistic-regression predictor and its performance-phase trainer.

The trainer runs minibatch Adam on binary cross-entropy from a zero
initialization. Run-to-run variation is injected through the batch-shuffle
seed (and optionally a small Gaussian init perturbation), keeping the seeded
baseline fully reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, NumericError

__all__ = [
    "ModelParams",
    "TrainConfig",
    "AdamState",
    "predict_proba",
    "predict_labels",
    "bce_loss_and_grad",
    "adam_step",
    "train_performance",
    "save_params",
    "load_params",
]

PROB_EPS = 1e-12  # probability clip used inside logarithms


@dataclass(frozen=True)
class ModelParams:
    """Weight vector and bias of the logistic model.

    Also used as the container for gradients and optimizer moments, which
    share the parameter shape.
    """

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def zeros(cls, d: int) -> "ModelParams":
        return cls(weights=np.zeros(d), bias=0.0)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.isfinite(self.bias))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 1000
    max_epochs: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    early_stop_window: int = 10
    early_stop_delta: float = 1e-6
    init_noise: float = 0.0  # optional Gaussian init scale; 0 keeps exact zero init
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in (0,1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be positive")


@dataclass(frozen=True)
class AdamState:
    first_moment: ModelParams
    second_moment: ModelParams
    step_count: int = 0

    @classmethod
    def zeros(cls, d: int) -> "AdamState":
        return cls(ModelParams.zeros(d), ModelParams.zeros(d), 0)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # overflow-safe piecewise form
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def predict_proba(params: ModelParams, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (logits, probabilities) for each row of ``features``."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.d:
        raise ConfigError(
            f"feature width {features.shape[1] if features.ndim == 2 else '?'} "
            f"does not match model dimension {params.d}"
        )
    logits = features @ params.weights + params.bias
    return logits, _sigmoid(logits)


def predict_labels(params: ModelParams, features: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    _, probs = predict_proba(params, features)
    return (probs >= threshold).astype(np.int64)


def bce_loss_and_grad(
    params: ModelParams, data: Dataset, row_subset: np.ndarray | None = None
) -> tuple[float, ModelParams]:
    """Mean binary cross-entropy and its analytic gradient on a row subset.

    Probabilities are clipped to [1e-12, 1-1e-12] inside the logarithms only.
    """
    if row_subset is None:
        rows = np.arange(data.n)
    else:
        rows = np.asarray(row_subset, dtype=np.int64)
    if rows.size == 0:
        raise ConfigError("bce_loss_and_grad called with an empty row subset")
    x = data.features[rows]
    y = data.labels[rows].astype(np.float64)
    _, p = predict_proba(params, x)
    p_safe = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    loss = -float(np.mean(y * np.log(p_safe) + (1.0 - y) * np.log(1.0 - p_safe)))
    residual = p - y
    grad = ModelParams(weights=x.T @ residual / rows.size, bias=float(residual.mean()))
    return loss, grad


def adam_step(
    params: ModelParams, grad: ModelParams, state: AdamState, config: TrainConfig
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update."""
    if grad.weights.shape != params.weights.shape:
        raise ConfigError("gradient shape does not match parameters")
    if not grad.is_finite():
        raise NumericError("non-finite gradient entry; aborting the run")
    t = state.step_count + 1
    b1, b2 = config.beta1, config.beta2
    m_w = b1 * state.first_moment.weights + (1 - b1) * grad.weights
    m_b = b1 * state.first_moment.bias + (1 - b1) * grad.bias
    v_w = b2 * state.second_moment.weights + (1 - b2) * grad.weights**2
    v_b = b2 * state.second_moment.bias + (1 - b2) * grad.bias**2
    mhat_w = m_w / (1 - b1**t)
    mhat_b = m_b / (1 - b1**t)
    vhat_w = v_w / (1 - b2**t)
    vhat_b = v_b / (1 - b2**t)
    lr, eps = config.learning_rate, config.adam_epsilon
    new_params = ModelParams(
        weights=params.weights - lr * mhat_w / (np.sqrt(vhat_w) + eps),
        bias=params.bias - lr * mhat_b / (np.sqrt(vhat_b) + eps),
    )
    new_state = AdamState(
        first_moment=ModelParams(weights=m_w, bias=m_b),
        second_moment=ModelParams(weights=v_w, bias=v_b),
        step_count=t,
    )
    return new_params, new_state


def train_performance(data: Dataset, config: TrainConfig) -> tuple[ModelParams, list[float]]:
    """Phase-1 training: minimize BCE with minibatch Adam.

    Starts from zeros (plus optional seeded init noise), shuffles batches
    with a seeded generator each epoch, and stops early once the best
    full-train loss has not improved by ``early_stop_delta`` within
    ``early_stop_window`` epochs. Returns the parameters with the lowest
    recorded full-train loss and the per-epoch loss history.
    """
    rng = np.random.default_rng(config.seed)
    params = ModelParams.zeros(data.d)
    if config.init_noise > 0:
        params = ModelParams(
            weights=config.init_noise * rng.standard_normal(data.d),
            bias=config.init_noise * float(rng.standard_normal()),
        )
    state = AdamState.zeros(data.d)
    best_params = params
    best_loss = np.inf
    best_epoch = 0
    history: list[float] = []
    for epoch in range(config.max_epochs):
        order = rng.permutation(data.n)
        for start in range(0, data.n, config.batch_size):
            batch = order[start : start + config.batch_size]
            _, grad = bce_loss_and_grad(params, data, batch)
            params, state = adam_step(params, grad, state, config)
        full_loss, _ = bce_loss_and_grad(params, data)
        if not np.isfinite(full_loss):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        history.append(full_loss)
        if full_loss < best_loss - config.early_stop_delta:
            best_loss = full_loss
            best_params = params
            best_epoch = epoch
        elif epoch - best_epoch >= config.early_stop_window:
            break
    return best_params, history


def save_params(params: ModelParams, path) -> None:
    """Plain-text persistence: 'bias <v>' then one 'w<i> <v>' line per weight."""
    lines = [f"bias {params.bias:.17g}"]
    lines += [f"w{i} {w:.17g}" for i, w in enumerate(params.weights)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path) -> ModelParams:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such model file: {path}")
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("bias "):
        raise ConfigError(f"{path}: expected first line 'bias <value>'")
    try:
        bias = float(lines[0].split()[1])
        weights = np.array([float(ln.split()[1]) for ln in lines[1:]], dtype=np.float64)
    except (IndexError, ValueError):
        raise ConfigError(f"{path}: malformed model file") from None
    if weights.size == 0:
        raise ConfigError(f"{path}: model file has no weights")
    return ModelParams(weights=weights, bias=bias)
