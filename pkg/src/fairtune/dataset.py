"""Tabular datasets with binary labels and binary sensitive attributes.

A :class:`Dataset` is immutable after construction: arrays are copied and
marked read-only, so instances can be shared freely across threads and
repeated experiment runs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "Dataset",
    "SplitSpec",
    "load_csv",
    "save_csv",
    "group_view",
    "stratified_split",
    "standardize_split",
]


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus binary labels and named binary sensitive columns.

    Invariants (checked at construction):
      * labels and every sensitive column have exactly ``n`` entries;
      * labels and sensitive values are exactly 0 or 1;
      * every sensitive attribute has at least one row in each of the four
        (group, label) cells;
      * features are finite (missing values are not supported).
    """

    features: np.ndarray
    labels: np.ndarray
    sensitive: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        features = _frozen_array(self.features, np.float64)
        labels = _frozen_array(self.labels, np.int64)
        sensitive = {
            str(name): _frozen_array(col, np.int64)
            for name, col in self.sensitive.items()
        }
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sensitive", sensitive)
        self._validate()

    def _validate(self) -> None:
        if self.features.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n = self.features.shape[0]
        if n < 1 or self.features.shape[1] < 1:
            raise DataError("dataset needs at least one row and one feature")
        if not np.all(np.isfinite(self.features)):
            raise DataError("non-finite feature value; missing values are not supported")
        if self.labels.shape != (n,):
            raise DataError(f"labels have length {self.labels.shape}, expected {n}")
        if not np.isin(self.labels, (0, 1)).all():
            raise DataError("labels must be exactly 0 or 1")
        for name, col in self.sensitive.items():
            if col.shape != (n,):
                raise DataError(f"sensitive column {name!r} has length {col.shape[0]}, expected {n}")
            if not np.isin(col, (0, 1)).all():
                raise DataError(f"sensitive column {name!r} must be exactly 0 or 1")
            for group in (0, 1):
                for label in (0, 1):
                    if not np.any((col == group) & (self.labels == label)):
                        raise DataError(
                            f"empty (group,label) cell: attribute {name!r}, "
                            f"group={group}, label={label}"
                        )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(self.sensitive.keys())

    def take(self, rows: np.ndarray) -> "Dataset":
        """New Dataset restricted to the given row indices (original order kept)."""
        rows = np.sort(np.asarray(rows, dtype=np.int64))
        return Dataset(
            features=self.features[rows],
            labels=self.labels[rows],
            sensitive={name: col[rows] for name, col in self.sensitive.items()},
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split parameters."""

    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0,1), got {self.train_fraction}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


def group_view(data: Dataset, attribute: str, group: int, label: int) -> np.ndarray:
    """Row indices i with sensitive[attribute][i] == group and labels[i] == label."""
    if attribute not in data.sensitive:
        raise ConfigError(f"unknown sensitive attribute {attribute!r}")
    col = data.sensitive[attribute]
    return np.flatnonzero((col == group) & (data.labels == label))


def load_csv(path, label_column: str, sensitive_columns: list[str]) -> Dataset:
    """Parse a UTF-8 comma-separated file with a header row into a Dataset.

    Every column that is neither the label nor a sensitive column becomes a
    feature, in header order. Label and sensitive cells must be the literal
    characters 0 or 1; feature cells must parse as decimal reals.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    for required in [label_column, *sensitive_columns]:
        if required not in header:
            raise ConfigError(f"{path}: column {required!r} not found in header {header}")

    label_idx = header.index(label_column)
    sens_idx = {name: header.index(name) for name in sensitive_columns}
    feature_cols = [
        (j, name)
        for j, name in enumerate(header)
        if j != label_idx and j not in sens_idx.values()
    ]
    if not feature_cols:
        raise DataError(f"{path}: no feature columns remain")

    def parse_binary(cell: str, row: int, column: str) -> int:
        if cell not in ("0", "1"):
            raise DataError(
                f"{path}: non-binary value {cell!r} in data row {row}, column {column!r}"
            )
        return int(cell)

    features = np.empty((len(rows), len(feature_cols)), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64)
    sensitive = {name: np.empty(len(rows), dtype=np.int64) for name in sensitive_columns}
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: data row {i} has {len(row)} cells, expected {len(header)}")
        labels[i - 1] = parse_binary(row[label_idx].strip(), i, label_column)
        for name, j in sens_idx.items():
            sensitive[name][i - 1] = parse_binary(row[j].strip(), i, name)
        for k, (j, name) in enumerate(feature_cols):
            cell = row[j].strip()
            if cell == "":
                raise DataError(f"{path}: empty cell in data row {i}, column {name!r}")
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric feature value {cell!r} in data row {i}, "
                    f"column {name!r}"
                ) from None
            if not np.isfinite(value):
                raise DataError(f"{path}: non-finite value {cell!r} in data row {i}, column {name!r}")
            features[i - 1, k] = value

    return Dataset(features=features, labels=labels, sensitive=sensitive)


def save_csv(data: Dataset, path, label_column: str = "y") -> None:
    """Write a Dataset in the same CSV dialect load_csv reads.

    Features are named f1..fd; floats keep 17 significant digits so a
    round-trip through load_csv is lossless.
    """
    path = Path(path)
    header = [f"f{j + 1}" for j in range(data.d)] + list(data.attribute_names) + [label_column]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = [f"{v:.17g}" for v in data.features[i]]
            row += [str(int(data.sensitive[a][i])) for a in data.attribute_names]
            row.append(str(int(data.labels[i])))
            writer.writerow(row)


def _stratum_keys(data: Dataset) -> np.ndarray:
    """Per-row joint stratum key over (label, all sensitive attributes)."""
    cols = [data.labels] + [data.sensitive[a] for a in data.attribute_names]
    key = np.zeros(data.n, dtype=np.int64)
    for col in cols:
        key = key * 2 + col
    return key


def stratified_split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition rows into train/test, stratified on the joint (label x
    sensitive attributes) key.

    Within each stratum the train share equals ``train_fraction`` up to one
    row, with at least one row on each side. Rows inside a stratum are
    ordered by a content key (lexicographic over feature values) before the
    seeded shuffle, so the assignment depends on row contents, not file
    order.
    """
    n = data.n
    if spec.train_fraction * n < 1 or (1 - spec.train_fraction) * n < 1:
        raise ConfigError(f"train_fraction {spec.train_fraction} leaves an empty side for n={n}")
    keys = _stratum_keys(data)
    rng = np.random.default_rng(spec.seed)
    train_rows = []
    test_rows = []
    for key in np.unique(keys):
        idx = np.flatnonzero(keys == key)
        if idx.size < 2:
            raise DataError(
                f"stratum {key} has {idx.size} row(s); need at least 2 to place "
                "one row on each side of the split"
            )
        # content-keyed order: lexsort uses the last key as primary
        order = np.lexsort(tuple(data.features[idx, j] for j in range(data.d - 1, -1, -1)))
        idx = idx[order]
        idx = idx[rng.permutation(idx.size)]
        n_train = int(round(spec.train_fraction * idx.size))
        n_train = min(max(n_train, 1), idx.size - 1)
        train_rows.append(idx[:n_train])
        test_rows.append(idx[n_train:])
    return data.take(np.concatenate(train_rows)), data.take(np.concatenate(test_rows))


def standardize_split(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset]:
    """Per-column (x - mean) / std using train statistics, reused for test.

    Columns with zero variance on train are only centered.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)

    def apply(data: Dataset) -> Dataset:
        return Dataset(
            features=(data.features - mean) / std,
            labels=data.labels,
            sensitive=dict(data.sensitive),
        )

    return apply(train), apply(test)
