"""Downstream predictors: ordinary, ridge, lasso and weighted least squares,
weighted logistic regression, and a weighted MLP regressor. Intercepts are
always fitted and never penalized.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .mlp import MlpModel, TrainConfig, mlp_forward, mlp_init, mlp_train, sigmoid
from .numeric import NotPositiveDefiniteError, solve_spd, standardize_columns
from .reweight import WeightSet


@dataclass
class LinearModel:
    beta: np.ndarray
    intercept: float
    converged: bool = True

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if not (np.all(np.isfinite(self.beta)) and np.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")


def _weight_vector(w, n: int) -> np.ndarray:
    if w is None:
        return np.ones(n)
    wv = np.asarray(getattr(w, "w", w), dtype=float)
    if wv.shape != (n,):
        raise ValueError(f"weights have shape {wv.shape}, expected ({n},)")
    if np.any(wv < 0):
        raise ValueError("weights must be nonnegative")
    mean = wv.mean()
    if mean <= 0:
        raise ValueError("weights must not be all zero")
    return wv / mean  # scale invariance: only relative weights matter


def wls_fit(
    x: np.ndarray, y: np.ndarray, w: WeightSet | np.ndarray | None, ridge: float = 0.0
) -> LinearModel:
    """Minimize sum_i w_i (y_i - x_i beta - b)^2 + ridge ||beta||^2 via the
    normal equations (intercept unpenalized)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    if n <= p:
        raise ValueError(f"need more samples than features, got n={n}, p={p}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    wv = _weight_vector(w, n)
    xa = np.column_stack([x, np.ones(n)])
    lhs = xa.T @ (wv[:, None] * xa) / n
    lhs[np.arange(p), np.arange(p)] += ridge / n
    rhs = xa.T @ (wv * y) / n
    try:
        sol = solve_spd(lhs, rhs)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            f"normal equations are singular ({exc}); try ridge > 0"
        ) from exc
    return LinearModel(beta=sol[:p], intercept=float(sol[p]))


def ols_fit(x: np.ndarray, y: np.ndarray) -> LinearModel:
    return wls_fit(x, y, None, ridge=0.0)


def ridge_fit(x: np.ndarray, y: np.ndarray, lam: float) -> LinearModel:
    return wls_fit(x, y, None, ridge=lam)


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lasso_fit(
    x: np.ndarray,
    y: np.ndarray,
    lam: float,
    max_iters: int = 1000,
    tol: float = 1e-7,
) -> LinearModel:
    """Cyclic coordinate descent with soft-thresholding on internally
    standardized columns; objective (1/2n) ||y - x beta - b||^2 + lam ||beta||_1.

    All-zero coefficients whenever lam >= max |x_std^T y_centered| / n. On
    non-convergence the result carries converged=False (with a warning), not
    an error.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    n = x.shape[0]
    z, means, sds = standardize_columns(x)
    y_mean = y.mean()
    yc = y - y_mean
    p = z.shape[1]
    beta = np.zeros(p)
    resid = yc.copy()
    # each standardized column has (1/n) sum z_j^2 == 1 exactly
    objective = 0.5 * float(resid @ resid) / n
    converged = False
    for _ in range(max_iters):
        for j in range(p):
            zj = z[:, j]
            rho = float(zj @ resid) / n + beta[j]
            new = _soft_threshold(rho, lam)
            if new != beta[j]:
                resid += zj * (beta[j] - new)
                beta[j] = new
        new_objective = 0.5 * float(resid @ resid) / n + lam * float(
            np.abs(beta).sum()
        )
        if abs(objective - new_objective) <= tol * max(1.0, abs(objective)):
            converged = True
            break
        objective = new_objective
    if not converged:
        warnings.warn("lasso coordinate descent did not converge", RuntimeWarning)
    beta_orig = beta / sds
    intercept = float(y_mean - means @ beta_orig)
    return LinearModel(beta=beta_orig, intercept=intercept, converged=converged)


@dataclass
class LogisticConfig:
    learning_rate: float = 1.0
    max_iters: int = 5000
    tol: float = 1e-6


def weighted_logistic_fit(
    x: np.ndarray,
    y: np.ndarray,
    w: WeightSet | np.ndarray | None = None,
    ridge: float = 0.0,
    cfg: LogisticConfig | None = None,
) -> LinearModel:
    """Gradient descent on the weighted negative log-likelihood plus
    (ridge/2) ||beta||^2; stops when the gradient norm falls below tol."""
    if cfg is None:
        cfg = LogisticConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    classes = set(np.unique(y))
    if not classes <= {0.0, 1.0}:
        raise ValueError(f"labels must be 0/1, got {sorted(classes)}")
    if len(classes) < 2:
        raise ValueError("both classes must be present")
    wv = _weight_vector(w, n)
    # curvature bound of the weighted NLL plus ridge keeps the fixed step
    # stable for any penalty strength
    xa = np.column_stack([x, np.ones(n)])
    hess_bound = np.linalg.eigvalsh(xa.T @ (wv[:, None] * xa) / n).max() / 4.0 + ridge
    step = cfg.learning_rate / hess_bound
    beta = np.zeros(p)
    intercept = 0.0
    converged = False
    for _ in range(cfg.max_iters):
        prob = sigmoid(x @ beta + intercept)
        err = wv * (prob - y) / n
        grad_beta = x.T @ err + ridge * beta
        grad_b = float(err.sum())
        gnorm = float(np.sqrt(grad_beta @ grad_beta + grad_b * grad_b))
        if gnorm <= cfg.tol:
            converged = True
            break
        beta -= step * grad_beta
        intercept -= step * grad_b
    return LinearModel(beta=beta, intercept=intercept, converged=converged)


def mlp_regress_fit(
    x: np.ndarray,
    y: np.ndarray,
    w: WeightSet | np.ndarray | None,
    cfg: TrainConfig,
    rng: np.random.Generator,
    hidden: tuple[int, ...] = (32,),
) -> MlpModel:
    """Weighted nonlinear regressor: relu MLP trained on weighted MSE."""
    x = np.asarray(x, dtype=float)
    model = mlp_init((x.shape[1], *hidden, 1), "relu", "linear", rng)
    return mlp_train(model, x, y, w, "weighted_mse", cfg, rng)


def predict(model, x: np.ndarray) -> np.ndarray:
    """Real-valued predictions: x beta + intercept for linear models, the
    forward pass for MLPs."""
    x = np.asarray(x, dtype=float)
    if isinstance(model, LinearModel):
        if x.shape[1] != model.beta.size:
            raise ValueError(
                f"input has {x.shape[1]} features, model expects {model.beta.size}"
            )
        return x @ model.beta + model.intercept
    if isinstance(model, MlpModel):
        return mlp_forward(model, x)
    raise TypeError(f"cannot predict with {type(model).__name__}")


def predict_class(model, x: np.ndarray) -> np.ndarray:
    """0/1 labels by thresholding the model's probability at 0.5."""
    scores = predict(model, x)
    if isinstance(model, MlpModel) and model.output_head == "sigmoid":
        return (scores >= 0.5).astype(float)
    return (scores >= 0.0).astype(float)  # linear score 0 is probability 0.5


def save_linear_json(model: LinearModel, path, metadata: dict | None = None) -> None:
    doc = {
        "beta": model.beta.tolist(),
        "intercept": model.intercept,
        "converged": model.converged,
        "metadata": metadata or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_linear_json(path) -> LinearModel:
    with open(path) as fh:
        doc = json.load(fh)
    return LinearModel(
        beta=np.asarray(doc["beta"], dtype=float),
        intercept=float(doc["intercept"]),
        converged=bool(doc.get("converged", True)),
    )
