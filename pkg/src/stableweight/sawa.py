"""Weight-averaging ensemble: run K independently seeded weight learners on
the same data and average the resulting sample weights elementwise. Because
valid weight sets form a convex set (nonnegative, unit mean) and the
decorrelation constraints are linear in w, the average is itself a valid
weight set, with lower variance than any single run.

Also provides the bias / variance / pairwise-diversity decomposition of the
squared weight-estimation error of the ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mlp import TrainConfig
from .numeric import derive_seed, make_rng
from .reweight import (
    DwrConfig,
    WeightSet,
    dwr_learn_many,
    lsif_learn,
    srdo_learn_classifier,
)

LEARNERS = ("dwr", "srdo_classifier", "srdo_lsif")


@dataclass
class SrdoClassifierConfig:
    hidden: tuple[int, ...] = (64, 64)
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(
            learning_rate=0.5, max_epochs=40, batch_size=256
        )
    )
    prob_clip: float = 1e-3
    clip_quantile: float = 0.99


@dataclass
class LsifConfig:
    m_centers: int = 100
    bandwidth: float | None = None
    ridge: float = 1e-3
    clip_quantile: float = 0.99


@dataclass
class SawaConfig:
    k: int = 10
    learner: str = "dwr"
    learner_config: object = None
    master_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.learner not in LEARNERS:
            raise ValueError(f"learner must be one of {LEARNERS}")
        if self.learner_config is None:
            self.learner_config = {
                "dwr": DwrConfig,
                "srdo_classifier": SrdoClassifierConfig,
                "srdo_lsif": LsifConfig,
            }[self.learner]()


def member_seed(master_seed: int, k: int) -> int:
    """Seed of ensemble member k; a fixed mix so prefixes of a larger
    ensemble coincide with smaller ensembles under the same master seed."""
    return derive_seed(master_seed, k)


def average_weights(sets: list[WeightSet]) -> WeightSet:
    """Elementwise mean; a convex combination, so validity is preserved."""
    if not sets:
        raise ValueError("need at least one weight set")
    n = len(sets[0])
    if any(len(s) != n for s in sets):
        raise ValueError("weight sets differ in length")
    return WeightSet(np.mean([s.w for s in sets], axis=0))


def run_members(x: np.ndarray, cfg: SawaConfig) -> list[WeightSet]:
    """Learn cfg.k weight sets with seeds derived from the master seed."""
    seeds = [member_seed(cfg.master_seed, k) for k in range(cfg.k)]
    if cfg.learner == "dwr":
        return dwr_learn_many(x, cfg.learner_config, [make_rng(s) for s in seeds])
    members = []
    for k, seed in enumerate(seeds):
        try:
            if cfg.learner == "srdo_classifier":
                lc: SrdoClassifierConfig = cfg.learner_config
                members.append(
                    srdo_learn_classifier(
                        x,
                        hidden=lc.hidden,
                        train_cfg=lc.train,
                        rng=make_rng(seed),
                        prob_clip=lc.prob_clip,
                        clip_quantile=lc.clip_quantile,
                    )
                )
            else:
                lc2: LsifConfig = cfg.learner_config
                _, ws = lsif_learn(
                    x,
                    m_centers=min(lc2.m_centers, x.shape[0]),
                    bandwidth=lc2.bandwidth,
                    ridge=lc2.ridge,
                    rng=make_rng(seed),
                    clip_quantile=lc2.clip_quantile,
                )
                members.append(ws)
        except Exception as exc:
            raise RuntimeError(f"weight learner failed for member {k}: {exc}") from exc
    return members


def sawa_run(x: np.ndarray, cfg: SawaConfig) -> tuple[WeightSet, list[WeightSet]]:
    """Ensemble weights and the individual members, ordered by member index."""
    members = run_members(x, cfg)
    return average_weights(members), members


def pairwise_diversity(members: list[WeightSet]) -> float:
    """Average over unordered member pairs of the per-sample covariance of
    deviations from the pool mean; negative values mean members disagree."""
    if len(members) < 2:
        raise ValueError("need at least two members")
    stack = np.stack([m.w for m in members])
    k, n = stack.shape
    dev = stack - stack.mean(axis=0)
    total = 0.0
    for l in range(k):
        for m in range(l + 1, k):
            total += float(dev[l] @ dev[m]) / n
    return total / (k * (k - 1) / 2)


@dataclass
class Decomposition:
    """Split of the ensemble's squared weight error against a reference into
    squared bias, member variance, and pairwise diversity; satisfies
    total = bias_sq + variance / k + ((k - 1) / k) * covariance."""

    bias_sq: float
    variance: float
    covariance: float
    total: float
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("decomposition needs a pool of at least 2")
        rhs = (
            self.bias_sq
            + self.variance / self.k
            + (self.k - 1) / self.k * self.covariance
        )
        if abs(self.total - rhs) > 1e-8:
            raise ValueError(
                f"decomposition identity violated: total={self.total}, rhs={rhs}"
            )


def decompose_error(members: list[WeightSet], reference: WeightSet) -> Decomposition:
    """Decompose the mean squared error of the averaged weights against a
    reference weight set. The pool mean plays the role of the expected
    weighting function, which makes the identity exact."""
    if len(members) < 2:
        raise ValueError("need at least two members")
    stack = np.stack([m.w for m in members])
    k, n = stack.shape
    ref = reference.w
    if ref.shape != (n,):
        raise ValueError("reference length does not match members")
    pool_mean = stack.mean(axis=0)
    ensemble = average_weights(members).w
    bias_sq = float(((pool_mean - ref) ** 2).mean())
    variance = float(((stack - pool_mean) ** 2).sum(axis=1).mean() / n)
    covariance = pairwise_diversity(members)
    total = float(((ensemble - ref) ** 2).mean())
    return Decomposition(
        bias_sq=bias_sq, variance=variance, covariance=covariance, total=total, k=k
    )
