"""Sample-weight learning for independence-based reweighting.

Two families of weight learners are provided. The decorrelation learner
drives weighted second-moment residuals between covariate pairs to zero by
gradient descent over a softmax weight parameterization. The density-ratio
learners estimate the ratio between the product-of-marginals distribution
(obtained by per-column resampling) and the joint training distribution,
either with a binary MLP classifier or with a closed-form kernel least
squares fit.

All learners return a WeightSet: nonnegative per-sample weights with unit
mean, ready for weighted least squares downstream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .mlp import TrainConfig, mlp_forward, mlp_init, mlp_train
from .numeric import NotPositiveDefiniteError, solve_spd

MEAN_TOL = 1e-8


@dataclass
class WeightSet:
    """Nonnegative per-sample weights with mean exactly one (within 1e-8)."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.ndim != 1 or self.w.size == 0:
            raise ValueError("weights must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.w)):
            raise ValueError("weights must be finite")
        if np.any(self.w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(self.w.mean() - 1.0) > MEAN_TOL:
            raise ValueError(f"weights must have unit mean, got {self.w.mean()!r}")

    def __len__(self) -> int:
        return self.w.size

    @classmethod
    def uniform(cls, n: int) -> "WeightSet":
        return cls(np.ones(n))


def weighted_cov(x: np.ndarray, w: WeightSet, i: int, j: int) -> float:
    """Weighted covariance of columns i and j:
    (1/n) sum w x_i x_j  -  [(1/n) sum w x_i] [(1/n) sum w x_j].
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    wv = w.w
    mi = wv @ x[:, i] / n
    mj = wv @ x[:, j] / n
    return float(wv @ (x[:, i] * x[:, j]) / n - mi * mj)


def weighted_cov_matrix(x: np.ndarray, wv: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    m = wv @ x / n
    second = x.T @ (wv[:, None] * x) / n
    return second - np.outer(m, m)


def weighted_corr_matrix(x: np.ndarray, wv: np.ndarray) -> np.ndarray:
    cov = weighted_cov_matrix(x, wv)
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def dwr_objective(x: np.ndarray, w: WeightSet) -> float:
    """Sum over ordered pairs i != j of squared weighted covariances."""
    x = np.asarray(x, dtype=float)
    if x.shape[1] < 2:
        raise ValueError("need at least two columns to form pairs")
    cov = weighted_cov_matrix(x, w.w)
    np.fill_diagonal(cov, 0.0)
    return float((cov * cov).sum())


def constraint_residuals(x: np.ndarray, wv: np.ndarray) -> np.ndarray:
    """Linear-in-w residual vector: weighted second moments of mean-centered
    column pairs (i < j) followed by weighted means of centered columns."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    xc = x - x.mean(axis=0)
    second = xc.T @ (wv[:, None] * xc) / n
    iu = np.triu_indices(p, k=1)
    means = wv @ xc / n
    return np.concatenate([second[iu], means])


@dataclass
class DwrConfig:
    """Settings for the decorrelation weight learner.

    ``learning_rate`` is a per-sample scale: the gradient step on the softmax
    parameters is learning_rate * n, clipped at ``max_step`` per coordinate,
    so behavior is stable across sample sizes. ``uniformity_penalty`` adds
    lambda * mean((w - 1)^2) to the internal loss; without it the fully
    decorrelated optimum concentrates weight on a handful of samples and the
    effective sample size collapses.
    """

    learning_rate: float = 0.005
    max_iters: int = 5000
    objective_tol: float = 1e-6
    init_sd: float = 1.0
    uniformity_penalty: float = 0.05
    mean_penalty: float = 1.0
    max_step: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.init_sd < 0 or self.uniformity_penalty < 0 or self.mean_penalty < 0:
            raise ValueError("penalties and init_sd must be nonnegative")


_TOL_WINDOW = 50


def _softmax_weights(theta: np.ndarray, n: int) -> np.ndarray:
    t = theta - theta.max(axis=1, keepdims=True)
    e = np.exp(t)
    return n * e / e.sum(axis=1, keepdims=True)


def dwr_learn_many(
    x: np.ndarray, cfg: DwrConfig, rngs: list[np.random.Generator]
) -> list[WeightSet]:
    """Run the decorrelation learner once per rng, batched over members.

    Members share the gradient-descent schedule but start from independent
    standard-normal softmax parameters, so each converges to its own point
    of the (underdetermined) zero-residual set. The internal loss is the
    squared norm of the linear constraint residuals (pairwise second moments
    and means of centered columns) plus the uniformity penalty; since those
    residuals are linear in w, averages of solutions remain solutions.
    """
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if n <= p:
        raise ValueError(f"need more samples than columns, got n={n}, p={p}")
    if p < 2:
        raise ValueError("need at least two columns to decorrelate")
    k = len(rngs)
    if k == 0:
        return []

    xc = x - x.mean(axis=0)
    offdiag = ~np.eye(p, dtype=bool)
    lam_u = cfg.uniformity_penalty
    lam_m = cfg.mean_penalty
    step = cfg.learning_rate * n

    theta = np.stack([rng.standard_normal(n) * cfg.init_sd for rng in rngs])
    w = _softmax_weights(theta, n)
    w_init = w.copy()

    def residuals(wmat):
        wx = wmat[:, :, None] * xc[None, :, :]
        pair = np.matmul(wx.transpose(0, 2, 1), xc) / n
        pair *= offdiag[None, :, :]
        means = wmat @ xc / n
        return pair, means

    def loss_of(pair, means, wmat):
        return (
            (pair * pair).sum(axis=(1, 2))
            + lam_m * (means * means).sum(axis=1)
            + lam_u * ((wmat - 1.0) ** 2).mean(axis=1)
        )

    pair, means = residuals(w)
    loss = loss_of(pair, means, w)
    best_loss = loss.copy()
    best_w = w.copy()
    window_loss = loss.copy()

    for it in range(cfg.max_iters):
        u = np.matmul(xc[None, :, :], pair)
        quad = (u * xc[None, :, :]).sum(axis=2)
        meanterm = np.matmul(xc[None, :, :], means[:, :, None])[:, :, 0]
        grad_w = (2.0 / n) * (quad + lam_m * meanterm) + lam_u * 2.0 * (w - 1.0) / n
        gw_dot = (grad_w * w).sum(axis=1) / n
        grad_theta = w * (grad_w - gw_dot[:, None])
        update = step * grad_theta
        peak = np.abs(update).max(axis=1, keepdims=True)
        theta -= update * np.minimum(1.0, cfg.max_step / np.maximum(peak, 1e-300))

        w = _softmax_weights(theta, n)
        pair, means = residuals(w)
        loss = loss_of(pair, means, w)
        if not np.all(np.isfinite(loss)):
            bad = int(np.flatnonzero(~np.isfinite(loss))[0])
            raise RuntimeError(
                f"non-finite objective for member {bad} at iteration {it}"
            )
        improved = loss < best_loss
        if improved.any():
            best_loss = np.where(improved, loss, best_loss)
            best_w[improved] = w[improved]
        if (it + 1) % _TOL_WINDOW == 0:
            rel = (window_loss - loss) / np.maximum(window_loss, 1e-300)
            if np.all(rel < cfg.objective_tol):
                break
            window_loss = loss.copy()

    out = []
    for member in range(k):
        cand = best_w[member]
        ws = WeightSet(cand / cand.mean())
        init = WeightSet(w_init[member] / w_init[member].mean())
        # never worse than the projected initialization on the pair objective
        if dwr_objective(x, ws) > dwr_objective(x, init):
            ws = init
        out.append(ws)
    return out


def dwr_learn(x: np.ndarray, cfg: DwrConfig, rng: np.random.Generator) -> WeightSet:
    """Learn decorrelating sample weights from one random initialization."""
    return dwr_learn_many(x, cfg, [rng])[0]


def srdo_resample(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Permute each column independently, breaking the joint dependence while
    preserving every marginal exactly."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least two rows to resample")
    return np.column_stack([rng.permutation(x[:, j]) for j in range(x.shape[1])])


DEFAULT_SRDO_HIDDEN = (64, 64)
DEFAULT_SRDO_TRAIN = TrainConfig(
    learning_rate=0.5, max_epochs=40, batch_size=256, weight_decay=0.0
)


def srdo_learn_classifier(
    x: np.ndarray,
    hidden: tuple[int, ...] = DEFAULT_SRDO_HIDDEN,
    train_cfg: TrainConfig | None = None,
    rng: np.random.Generator | None = None,
    prob_clip: float = 1e-3,
    clip_quantile: float = 0.99,
) -> WeightSet:
    """Density-ratio weights from a binary classifier.

    Trains a sigmoid-head MLP to distinguish the column-resampled data
    (label 1) from the original data (label 0); the raw weight for sample i
    is p(1|x_i) / p(0|x_i) with probabilities clipped to [prob_clip,
    1 - prob_clip], then quantile-clipped and normalized to unit mean.
    """
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if n < 50:
        raise ValueError(f"need at least 50 samples to train a classifier, got {n}")
    if rng is None:
        raise ValueError("an explicit rng is required")
    if train_cfg is None:
        train_cfg = DEFAULT_SRDO_TRAIN

    x_tilde = srdo_resample(x, rng)
    features = np.vstack([x, x_tilde])
    labels = np.concatenate([np.zeros(n), np.ones(n)])
    model = mlp_init((p, *hidden, 1), "relu", "sigmoid", rng)
    model = mlp_train(model, features, labels, None, "weighted_bce", train_cfg, rng)

    prob = np.clip(mlp_forward(model, x), prob_clip, 1.0 - prob_clip)
    raw = prob / (1.0 - prob)
    return normalize_clip(raw, clip_quantile)


@dataclass
class LsifModel:
    """Closed-form least-squares density-ratio fit in a Gaussian kernel basis.

    theta has one coefficient per center plus a trailing constant-feature
    coefficient.
    """

    centers: np.ndarray
    bandwidth: float
    theta: np.ndarray
    ridge: float


def lsif_features(x: np.ndarray, centers: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian kernel features at the centers plus a constant column."""
    x = np.asarray(x, dtype=float)
    sq = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    feats = np.exp(-sq / (2.0 * bandwidth**2))
    return np.column_stack([feats, np.ones(x.shape[0])])


def lsif_loss(
    theta: np.ndarray,
    feats_train: np.ndarray,
    feats_resampled: np.ndarray,
    ridge: float,
) -> float:
    """Empirical least-squares importance-fitting loss
    mean_resampled[-w] + mean_train[w^2 / 2] + (ridge/2) ||theta||^2."""
    w_tr = feats_train @ theta
    w_nu = feats_resampled @ theta
    return float(
        -w_nu.mean() + 0.5 * (w_tr**2).mean() + 0.5 * ridge * (theta @ theta)
    )


def median_pairwise_bandwidth(
    x: np.ndarray, rng: np.random.Generator, max_rows: int = 500
) -> float:
    """Median pairwise Euclidean distance over a subsample of rows."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n > max_rows:
        idx = rng.choice(n, size=max_rows, replace=False)
        x = x[idx]
    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    iu = np.triu_indices(x.shape[0], k=1)
    med = float(np.sqrt(np.median(sq[iu])))
    if med <= 0:
        raise ValueError("degenerate data: median pairwise distance is zero")
    return med


def lsif_learn(
    x: np.ndarray,
    m_centers: int = 100,
    bandwidth: float | None = None,
    ridge: float = 1e-3,
    rng: np.random.Generator | None = None,
    clip_quantile: float = 0.99,
) -> tuple[LsifModel, WeightSet]:
    """Closed-form density-ratio weights (resampled vs. original data).

    Solves (H + ridge I) theta = h where H is the second-moment matrix of the
    kernel features on the training data and h is their mean under the
    column-resampled data. Raw weights are clamped at zero, quantile-clipped
    and normalized.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if m_centers > n:
        raise ValueError(f"m_centers={m_centers} exceeds sample count {n}")
    if rng is None:
        raise ValueError("an explicit rng is required")

    x_tilde = srdo_resample(x, rng)
    if bandwidth is None:
        bandwidth = median_pairwise_bandwidth(x, rng)
    centers = x[rng.choice(n, size=m_centers, replace=False)]

    feats_tr = lsif_features(x, centers, bandwidth)
    feats_nu = lsif_features(x_tilde, centers, bandwidth)
    h_mat = feats_tr.T @ feats_tr / n
    h_vec = feats_nu.mean(axis=0)
    m1 = h_mat.shape[0]
    try:
        theta = solve_spd(h_mat + ridge * np.eye(m1), h_vec)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            f"kernel moment matrix is singular ({exc}); use ridge > 0"
        ) from exc

    model = LsifModel(centers=centers, bandwidth=float(bandwidth), theta=theta, ridge=ridge)
    raw = np.maximum(feats_tr @ theta, 0.0)
    return model, normalize_clip(raw, clip_quantile)


def lsif_weights(model: LsifModel, x: np.ndarray) -> np.ndarray:
    """Raw (unnormalized, unclipped) fitted density ratios at x."""
    return lsif_features(x, model.centers, model.bandwidth) @ model.theta


def normalize_clip(raw: np.ndarray, clip_quantile: float = 0.99) -> WeightSet:
    """Clamp values above the given empirical quantile, then rescale to unit
    mean. clip_quantile must lie in (0.5, 1]; 1.0 disables clipping."""
    raw = np.asarray(raw, dtype=float)
    if not 0.5 < clip_quantile <= 1.0:
        raise ValueError("clip_quantile must be in (0.5, 1]")
    if np.any(raw < 0):
        raise ValueError("raw weights must be nonnegative")
    if not np.any(raw > 0):
        raise ValueError("raw weights must not be all zero")
    cap = np.quantile(raw, clip_quantile)
    clipped = np.minimum(raw, cap)
    return WeightSet(clipped / clipped.mean())


def effective_sample_size(w: WeightSet) -> float:
    """(sum w)^2 / sum w^2, in (0, n]; n for uniform weights."""
    wv = w.w
    return float(wv.sum() ** 2 / (wv @ wv))


def save_weights_csv(w: WeightSet, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["weight"])
        for value in w.w:
            writer.writerow([repr(float(value))])


def load_weights_csv(path) -> WeightSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["weight"]:
            raise ValueError(f"unexpected header {header!r}")
        values = [float(row[0]) for row in reader if row]
    return WeightSet(np.asarray(values))


def lsif_to_json(model: LsifModel, path) -> None:
    doc = {
        "centers": model.centers.tolist(),
        "bandwidth": model.bandwidth,
        "theta": model.theta.tolist(),
        "ridge": model.ridge,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def lsif_from_json(path) -> LsifModel:
    with open(path) as fh:
        doc = json.load(fh)
    return LsifModel(
        centers=np.asarray(doc["centers"], dtype=float),
        bandwidth=float(doc["bandwidth"]),
        theta=np.asarray(doc["theta"], dtype=float),
        ridge=float(doc["ridge"]),
    )
