"""CSV ingestion for real tabular experiments: schema-driven loading with
row-wise missing-data drops, one-hot encoding of declared categoricals, and
splitting into environments by a designated column. Standardization
statistics always come from the training split alone.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .numeric import standardize_columns

log = logging.getLogger(__name__)

MISSING_TOKENS = {"", "?", "na", "n/a", "null", "none"}

TASKS = ("regression", "binary_classification")


@dataclass
class TabularSchema:
    feature_columns: list[str]
    target_column: str
    environment_column: str | None = None
    task: str = "regression"
    categorical_columns: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.target_column in self.feature_columns:
            raise ValueError("target column must not be among the features")
        if (
            self.environment_column is not None
            and self.environment_column in self.feature_columns
        ):
            raise ValueError("environment column must not be among the features")
        unknown = set(self.categorical_columns) - set(self.feature_columns)
        if unknown:
            raise ValueError(f"categorical columns not in features: {sorted(unknown)}")


@dataclass
class TabularDataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    env_values: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]


def _is_missing(token: str) -> bool:
    return token.strip().lower() in MISSING_TOKENS


def load_csv(path, schema: TabularSchema) -> TabularDataset:
    """Load a header-row CSV into a numeric matrix and target vector.

    Rows with a missing value in any used column are dropped (count logged).
    Declared categorical features are one-hot encoded with the first level
    (sorted order) dropped; any other feature must parse as a number.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file or missing header row")
        needed = list(schema.feature_columns) + [schema.target_column]
        if schema.environment_column is not None:
            needed.append(schema.environment_column)
        absent = [c for c in needed if c not in reader.fieldnames]
        if absent:
            raise ValueError(f"{path}: missing columns {absent}")
        raw_rows = list(reader)

    kept_rows = []
    dropped = 0
    for row in raw_rows:
        if any(_is_missing(row[c]) for c in needed):
            dropped += 1
        else:
            kept_rows.append(row)
    if dropped:
        log.info("dropped %d of %d rows with missing values", dropped, len(raw_rows))
    if not kept_rows:
        raise ValueError(f"{path}: no complete rows left after dropping missing values")

    categorical = set(schema.categorical_columns)
    levels: dict[str, list[str]] = {}
    for col in schema.categorical_columns:
        levels[col] = sorted({row[col].strip() for row in kept_rows})

    columns: list[np.ndarray] = []
    names: list[str] = []
    for col in schema.feature_columns:
        if col in categorical:
            for level in levels[col][1:]:  # first level dropped
                columns.append(
                    np.array(
                        [1.0 if row[col].strip() == level else 0.0 for row in kept_rows]
                    )
                )
                names.append(f"{col}={level}")
        else:
            columns.append(_numeric_column(kept_rows, col))
            names.append(col)

    y = _numeric_column(kept_rows, schema.target_column)
    if schema.task == "binary_classification":
        bad = set(np.unique(y)) - {0.0, 1.0}
        if bad:
            raise ValueError(
                f"binary target {schema.target_column!r} has values outside "
                f"{{0, 1}}: {sorted(bad)}"
            )

    env = None
    if schema.environment_column is not None:
        env = np.array([row[schema.environment_column].strip() for row in kept_rows])

    x = np.column_stack(columns) if columns else np.empty((len(kept_rows), 0))
    return TabularDataset(x=x, y=y, feature_names=names, env_values=env)


def _numeric_column(rows: list[dict], col: str) -> np.ndarray:
    values = []
    for i, row in enumerate(rows):
        try:
            values.append(float(row[col]))
        except ValueError:
            raise ValueError(
                f"column {col!r} is not numeric (row {i}: {row[col]!r}); "
                "declare it in categorical_columns if it is categorical"
            ) from None
    return np.asarray(values)


def split_environments(
    ds: TabularDataset, schema: TabularSchema
) -> dict[str, TabularDataset]:
    """Partition by environment value; the splits are disjoint and cover ds."""
    if schema.environment_column is None or ds.env_values is None:
        raise ValueError("dataset has no environment column to split on")
    values = sorted(set(ds.env_values))
    if len(values) < 2:
        raise ValueError(
            f"environment column has a single value {values!r}; nothing to split"
        )
    out = {}
    for value in values:
        mask = ds.env_values == value
        out[value] = TabularDataset(
            x=ds.x[mask],
            y=ds.y[mask],
            feature_names=ds.feature_names,
            env_values=ds.env_values[mask],
        )
    return out


def standardize_train_tests(
    train: TabularDataset, tests: dict[str, TabularDataset]
) -> tuple[TabularDataset, dict[str, TabularDataset]]:
    """Standardize features using statistics of the training split only."""
    z, means, sds = standardize_columns(train.x)
    train_std = TabularDataset(z, train.y, train.feature_names, train.env_values)
    tests_std = {
        key: TabularDataset(
            (ds.x - means) / sds, ds.y, ds.feature_names, ds.env_values
        )
        for key, ds in tests.items()
    }
    return train_std, tests_std
