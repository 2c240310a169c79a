"""Evaluation across test environments and repeated runs: coefficient error,
per-environment losses with their mean / spread / worst case, and the bias
and variance of coefficient estimates over seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .regress import LinearModel, predict, predict_class

LOSSES = ("rmse", "misclassification")


@dataclass
class MetricsReport:
    per_env_loss: dict = field(default_factory=dict)
    mean_error: float = 0.0
    std_error: float = 0.0
    max_error: float = 0.0
    beta_error: float | None = None
    degenerate_std: bool = False  # single environment: std reported as 0


def beta_error(est: LinearModel, truth: np.ndarray) -> float:
    """L1 distance between estimated and true coefficients (no intercept)."""
    truth = np.asarray(truth, dtype=float)
    if est.beta.shape != truth.shape:
        raise ValueError(
            f"coefficient shapes differ: {est.beta.shape} vs {truth.shape}"
        )
    return float(np.abs(est.beta - truth).sum())


def _one_loss(model, ds, loss: str) -> float:
    x, y = ds.x, ds.y
    if len(y) == 0:
        raise ValueError("empty test environment")
    if loss == "rmse":
        pred = predict(model, x)
        return float(np.sqrt(np.mean((pred - y) ** 2)))
    if loss == "misclassification":
        pred = predict_class(model, x)
        return float(np.mean(pred != y))
    raise ValueError(f"loss must be one of {LOSSES}")


def env_errors(model, tests, loss: str = "rmse") -> MetricsReport:
    """Per-environment losses and their summary statistics.

    ``tests`` maps environment keys to datasets (anything with .x and .y);
    a plain sequence is keyed by position. Std uses the sample (m - 1)
    denominator and is reported as 0 with degenerate_std set when there is
    only one environment.
    """
    if not isinstance(tests, Mapping):
        tests = {i: ds for i, ds in enumerate(tests)}
    if len(tests) == 0:
        raise ValueError("need at least one test environment")
    per_env = {key: _one_loss(model, ds, loss) for key, ds in tests.items()}
    values = np.array(list(per_env.values()))
    degenerate = len(values) < 2
    return MetricsReport(
        per_env_loss=per_env,
        mean_error=float(values.mean()),
        std_error=0.0 if degenerate else float(values.std(ddof=1)),
        max_error=float(values.max()),
        degenerate_std=degenerate,
    )


def bias_variance_report(
    beta_hats: list[np.ndarray], truth: np.ndarray
) -> tuple[float, float]:
    """Across seeds: bias = ||mean(beta_hat) - truth||_2 and variance =
    mean ||beta_hat - mean(beta_hat)||_2^2."""
    if len(beta_hats) < 2:
        raise ValueError("need estimates from at least two seeds")
    stack = np.stack([np.asarray(b, dtype=float) for b in beta_hats])
    truth = np.asarray(truth, dtype=float)
    center = stack.mean(axis=0)
    bias = float(np.linalg.norm(center - truth))
    variance = float(((stack - center) ** 2).sum(axis=1).mean())
    return bias, variance
