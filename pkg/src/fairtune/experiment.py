"""Multi-seed experiment pipelines and report emission.

The pipeline fixes one stratified split, then per repetition r trains a
performance model with training seed ``base + r`` and applies each
configured fine-tuning scenario, evaluating every resulting model on both
the train and test surfaces. Aggregates are reported as mean and standard
deviation over repetitions; the raw per-repetition rows are always written
alongside so the aggregation can be audited.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import Dataset, SplitSpec, load_csv, standardize_split, stratified_split
from .errors import ConfigError, FairtuneError
from .model import TrainConfig, train_performance
from .optimize import FairnessSpec, evaluate_model, optimize_sequential, optimize_simultaneous
from .synthgen import SynthConfig, generate, preset

__all__ = [
    "Scenario",
    "DataConfig",
    "ExperimentConfig",
    "MetricRow",
    "RunReport",
    "parse_config",
    "load_config",
    "run_experiment",
    "emit_report",
]

SURFACES = ("train", "test")


@dataclass(frozen=True)
class Scenario:
    """One fine-tuning variant: none, single:<attr>, sequential:<a,b,..>,
    or simultaneous."""

    kind: str
    attributes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if self.kind not in ("none", "single", "sequential", "simultaneous"):
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "single" and len(self.attributes) != 1:
            raise ConfigError("single scenario takes exactly one attribute")
        if self.kind == "sequential" and len(self.attributes) < 1:
            raise ConfigError("sequential scenario needs an attribute order")
        if self.kind in ("none", "simultaneous") and self.attributes:
            raise ConfigError(f"{self.kind} scenario takes no attributes")

    @property
    def token(self) -> str:
        if self.attributes:
            return f"{self.kind}:{','.join(self.attributes)}"
        return self.kind

    @property
    def method_label(self) -> str:
        return "None" if self.kind == "none" else "Fine-Tuned"

    @property
    def model_label(self) -> str:
        if self.kind == "none":
            return "Best Performing Model"
        if self.kind == "single":
            return f"{self.attributes[0]}-Fair Model"
        if self.kind == "sequential":
            return f"Multi-Fair Sequential({', '.join(self.attributes)})"
        return "Multi-Fair Simultaneous"

    @classmethod
    def parse(cls, token: str) -> "Scenario":
        token = token.strip()
        if ":" in token:
            kind, _, rest = token.partition(":")
            attrs = tuple(a.strip() for a in rest.split(",") if a.strip())
            return cls(kind=kind.strip(), attributes=attrs)
        return cls(kind=token)


@dataclass(frozen=True)
class DataConfig:
    """Where the dataset comes from: a CSV file, a named preset, or an
    inline generator configuration."""

    source: str  # "csv" | "preset" | "synth"
    csv_path: str | None = None
    label_column: str = "y"
    sensitive_columns: tuple[str, ...] = ()
    preset_name: str | None = None
    synth: SynthConfig | None = None
    standardize: bool = False

    def load(self) -> Dataset:
        if self.source == "csv":
            if not self.csv_path:
                raise ConfigError("data.csv is required when data.source = csv")
            if not self.sensitive_columns:
                raise ConfigError("data.sensitive_columns is required when data.source = csv")
            return load_csv(self.csv_path, self.label_column, list(self.sensitive_columns))
        if self.source == "preset":
            if not self.preset_name:
                raise ConfigError("data.preset is required when data.source = preset")
            return generate(preset(self.preset_name))
        if self.source == "synth":
            if self.synth is None:
                raise ConfigError("synth.* keys are required when data.source = synth")
            return generate(self.synth)
        raise ConfigError(f"unknown data source {self.source!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig
    split: SplitSpec
    train: TrainConfig
    fairness: FairnessSpec
    scenarios: tuple[Scenario, ...]
    repetitions: int = 5
    output_dir: str = "out"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        known = set(self.fairness.attributes)
        for sc in self.scenarios:
            for attr in sc.attributes:
                if attr not in known:
                    raise ConfigError(
                        f"scenario {sc.token!r} uses attribute {attr!r} not listed in "
                        "fairness.attributes"
                    )


@dataclass(frozen=True)
class MetricRow:
    scenario: str
    repetition: int
    surface: str
    auroc: float
    sensitivity: float
    specificity: float
    eods: dict[str, float]


@dataclass(frozen=True)
class RunReport:
    attributes: tuple[str, ...]
    repetitions: int
    scenarios: tuple[Scenario, ...]
    rows: tuple[MetricRow, ...]
    errors: dict[str, str] = field(default_factory=dict)

    def metric_values(self, scenario: str, surface: str, metric: str) -> np.ndarray:
        values = []
        for row in self.rows:
            if row.scenario != scenario or row.surface != surface:
                continue
            if metric.startswith("eod_"):
                values.append(row.eods[metric[4:]])
            else:
                values.append(getattr(row, metric))
        return np.array(values)

    def summary(self, scenario: str, surface: str) -> dict[str, tuple[float, float]]:
        """metric -> (mean, population std) over repetitions."""
        metrics = ["auroc", "sensitivity", "specificity"] + [f"eod_{a}" for a in self.attributes]
        out = {}
        for metric in metrics:
            values = self.metric_values(scenario, surface, metric)
            out[metric] = (float(values.mean()), float(values.std()))
        return out


# ---------------------------------------------------------------------------
# config file parsing: flat "section.key = value" lines, '#' comments


def _parse_pairs(value: str, key: str) -> dict[str, float]:
    out = {}
    for item in value.split():
        name, sep, num = item.partition(":")
        if not sep:
            raise ConfigError(f"{key}: expected name:value items, got {item!r}")
        try:
            out[name] = float(num)
        except ValueError:
            raise ConfigError(f"{key}: bad number in {item!r}") from None
    return out


def _parse_flips(value: str, key: str) -> dict[str, tuple[float, float]]:
    out = {}
    for item in value.split():
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key}: expected name:rate0:rate1 items, got {item!r}")
        try:
            out[parts[0]] = (float(parts[1]), float(parts[2]))
        except ValueError:
            raise ConfigError(f"{key}: bad number in {item!r}") from None
    return out


def _parse_bool(value: str, key: str) -> bool:
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


_INT_KEYS = {
    "synth.n", "synth.d", "synth.seed", "split.seed", "train.batch_size",
    "train.max_epochs", "train.early_stop_window", "train.seed",
    "fairness.step_budget", "run.repetitions",
}
_FLOAT_KEYS = {
    "synth.positive_rate", "synth.attr_correlation", "synth.signal_scale",
    "split.train_fraction", "train.learning_rate", "train.beta1", "train.beta2",
    "train.adam_epsilon", "train.early_stop_delta", "train.init_noise",
    "fairness.tolerance", "fairness.steepness", "fairness.learning_rate",
    "fairness.penalty_weight",
}
_STR_KEYS = {
    "data.source", "data.preset", "data.csv", "data.label_column",
    "data.sensitive_columns", "data.standardize", "synth.attributes",
    "synth.bias_shift", "synth.flip_rate", "synth.proxy_strength", "fairness.attributes",
    "fairness.thresholds", "run.scenarios", "run.output_dir",
}


def parse_config(text: str) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key = value, got {line!r}")
        key = key.strip()
        value = value.strip()
        if key in raw:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        if key not in _INT_KEYS | _FLOAT_KEYS | _STR_KEYS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        raw[key] = value

    def get_int(key: str, default: int) -> int:
        if key not in raw:
            return default
        try:
            return int(raw[key])
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw[key]!r}") from None

    def get_float(key: str, default: float) -> float:
        if key not in raw:
            return default
        try:
            return float(raw[key])
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw[key]!r}") from None

    source = raw.get("data.source", "preset")
    synth = None
    if source == "synth":
        attrs = _parse_pairs(raw.get("synth.attributes", ""), "synth.attributes")
        if not attrs:
            raise ConfigError("synth.attributes is required when data.source = synth")
        synth = SynthConfig(
            n=get_int("synth.n", 2000),
            d=get_int("synth.d", 8),
            attribute_specs=attrs,
            class_positive_rate=get_float("synth.positive_rate", 0.3),
            attr_correlation=get_float("synth.attr_correlation", 0.0),
            bias_shift=_parse_pairs(raw.get("synth.bias_shift", ""), "synth.bias_shift"),
            flip_rate=_parse_flips(raw.get("synth.flip_rate", ""), "synth.flip_rate"),
            proxy_strength=_parse_pairs(raw.get("synth.proxy_strength", ""), "synth.proxy_strength"),
            signal_scale=get_float("synth.signal_scale", 2.5),
            seed=get_int("synth.seed", 0),
        )
    data = DataConfig(
        source=source,
        csv_path=raw.get("data.csv"),
        label_column=raw.get("data.label_column", "y"),
        sensitive_columns=tuple(raw.get("data.sensitive_columns", "").split()),
        preset_name=raw.get("data.preset"),
        synth=synth,
        standardize=_parse_bool(raw.get("data.standardize", "false"), "data.standardize"),
    )
    split = SplitSpec(
        train_fraction=get_float("split.train_fraction", 0.8),
        seed=get_int("split.seed", 0),
    )
    train = TrainConfig(
        learning_rate=get_float("train.learning_rate", 0.001),
        batch_size=get_int("train.batch_size", 1000),
        max_epochs=get_int("train.max_epochs", 200),
        beta1=get_float("train.beta1", 0.9),
        beta2=get_float("train.beta2", 0.999),
        adam_epsilon=get_float("train.adam_epsilon", 1e-8),
        early_stop_window=get_int("train.early_stop_window", 10),
        early_stop_delta=get_float("train.early_stop_delta", 1e-6),
        init_noise=get_float("train.init_noise", 0.0),
        seed=get_int("train.seed", 0),
    )
    fairness_attrs = tuple(raw.get("fairness.attributes", "").split())
    if not fairness_attrs:
        raise ConfigError("fairness.attributes is required")
    fairness = FairnessSpec(
        attributes=fairness_attrs,
        thresholds=_parse_pairs(raw.get("fairness.thresholds", ""), "fairness.thresholds"),
        step_budget=get_int("fairness.step_budget", 1000),
        tolerance=get_float("fairness.tolerance", 0.02),
        steepness=get_float("fairness.steepness", 5.0),
        fairness_learning_rate=get_float("fairness.learning_rate", 0.001),
        penalty_weight=get_float("fairness.penalty_weight", 1.0),
    )
    scenario_tokens = raw.get("run.scenarios", "none").split()
    scenarios = tuple(Scenario.parse(tok) for tok in scenario_tokens)
    return ExperimentConfig(
        data=data,
        split=split,
        train=train,
        fairness=fairness,
        scenarios=scenarios,
        repetitions=get_int("run.repetitions", 5),
        output_dir=raw.get("run.output_dir", "out"),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------


def _apply_scenario(scenario: Scenario, theta_po, train, fairness: FairnessSpec):
    if scenario.kind == "none":
        return theta_po
    if scenario.kind in ("single", "sequential"):
        spec = replace(fairness, attributes=scenario.attributes)
        return optimize_sequential(theta_po, train, spec).params
    return optimize_simultaneous(theta_po, train, fairness).params


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Execute every (repetition, scenario) cell and aggregate the metrics.

    A failing scenario is recorded with context in the report and skipped;
    the remaining scenarios still run.
    """
    data = config.data.load()
    train, test = stratified_split(data, config.split)
    if config.data.standardize:
        train, test = standardize_split(train, test)

    rows: list[MetricRow] = []
    errors: dict[str, str] = {}
    theta_by_rep = []
    for r in range(config.repetitions):
        train_cfg = replace(config.train, seed=config.train.seed + r)
        theta_po, _ = train_performance(train, train_cfg)
        theta_by_rep.append(theta_po)

    for scenario in config.scenarios:
        try:
            for r, theta_po in enumerate(theta_by_rep):
                params = _apply_scenario(scenario, theta_po, train, config.fairness)
                for surface, surface_data in zip(SURFACES, (train, test)):
                    report = evaluate_model(params, surface_data, config.fairness)
                    rows.append(
                        MetricRow(
                            scenario=scenario.token,
                            repetition=r,
                            surface=surface,
                            auroc=report.auroc,
                            sensitivity=report.sensitivity,
                            specificity=report.specificity,
                            eods=dict(report.eod_by_attribute),
                        )
                    )
        except FairtuneError as exc:
            errors[scenario.token] = f"{type(exc).__name__}: {exc}"
            rows = [row for row in rows if row.scenario != scenario.token]

    return RunReport(
        attributes=config.fairness.attributes,
        repetitions=config.repetitions,
        scenarios=config.scenarios,
        rows=tuple(rows),
        errors=errors,
    )


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def render_markdown(report: RunReport) -> str:
    """Aggregated tables (one per surface), mean +/- std at 4 decimals."""
    eod_headers = [f"{a} EOD" for a in report.attributes]
    header = ["Fair Method", "Model", "AUROC", "Sensitivity", "Specificity", *eod_headers]
    out = io.StringIO()
    for surface in SURFACES:
        out.write(f"## {surface.capitalize()} surface\n\n")
        out.write("| " + " | ".join(header) + " |\n")
        out.write("|" + "---|" * len(header) + "\n")
        for scenario in report.scenarios:
            if scenario.token in report.errors:
                continue
            stats = report.summary(scenario.token, surface)
            cells = [scenario.method_label, scenario.model_label]
            for metric in ["auroc", "sensitivity", "specificity"] + [
                f"eod_{a}" for a in report.attributes
            ]:
                mean, std = stats[metric]
                cells.append(f"{mean:.4f} ± {std:.4f}")
            out.write("| " + " | ".join(cells) + " |\n")
        out.write("\n")
    if report.errors:
        out.write("## Aborted scenarios\n\n")
        for token, message in report.errors.items():
            out.write(f"- `{token}`: {message}\n")
        out.write("\n")
    return out.getvalue()


def render_summary_csv(report: RunReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    metrics = ["auroc", "sensitivity", "specificity"] + [f"eod_{a}" for a in report.attributes]
    header = ["scenario", "model", "surface"]
    for metric in metrics:
        header += [f"{metric}_mean", f"{metric}_std"]
    writer.writerow(header)
    for scenario in report.scenarios:
        if scenario.token in report.errors:
            continue
        for surface in SURFACES:
            stats = report.summary(scenario.token, surface)
            row = [scenario.token, scenario.model_label, surface]
            for metric in metrics:
                mean, std = stats[metric]
                row += [_fmt(mean), _fmt(std)]
            writer.writerow(row)
    return out.getvalue()


def render_runs_csv(report: RunReport) -> str:
    """Raw per-repetition rows backing the aggregated report."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["scenario", "repetition", "surface", "auroc", "sensitivity", "specificity"]
    header += [f"eod_{a}" for a in report.attributes]
    writer.writerow(header)
    for row in report.rows:
        record = [row.scenario, row.repetition, row.surface]
        record += [_fmt(row.auroc), _fmt(row.sensitivity), _fmt(row.specificity)]
        record += [_fmt(row.eods[a]) for a in report.attributes]
        writer.writerow(record)
    return out.getvalue()


def emit_report(report: RunReport, output_dir, fmt: str = "markdown") -> list[Path]:
    """Write the aggregated report plus the raw per-repetition CSV twin.

    Returns the written paths. ``fmt`` selects the aggregated rendering
    (markdown or csv); runs.csv is always produced.
    """
    if fmt not in ("markdown", "csv"):
        raise ConfigError(f"unknown report format {fmt!r}")
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt == "markdown":
            path = output_dir / "report.md"
            path.write_text(render_markdown(report), encoding="utf-8")
        else:
            path = output_dir / "report.csv"
            path.write_text(render_summary_csv(report), encoding="utf-8")
        written.append(path)
        runs_path = output_dir / "runs.csv"
        runs_path.write_text(render_runs_csv(report), encoding="utf-8")
        written.append(runs_path)
        return written
    except OSError as exc:
        raise FairtuneError(f"cannot write report to {output_dir}: {exc}") from exc
