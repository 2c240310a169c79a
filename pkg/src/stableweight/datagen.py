"""Synthetic covariate-shift data: block-correlated Gaussian covariates, a
stable-variable outcome (linear plus a cubic interaction, or a random MLP),
and selection-bias environments that induce tunable spurious correlation
between designated unstable variables and the outcome.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .mlp import MlpModel, mlp_forward, mlp_init
from .numeric import mvn_sample

DEFAULT_R_TEST_GRID = (-3.0, -2.5, -2.0, -1.5, 1.5, 2.0, 2.5, 3.0)


def default_beta_s(p_s: int) -> np.ndarray:
    """Alternating-sign coefficients scaled to unit norm."""
    beta = np.ones(p_s)
    beta[1::2] = -1.0
    return beta / np.linalg.norm(beta)


def default_biased_count(p: int) -> int:
    """Default number of biased unstable variables: 20% of all covariates,
    rounded down, at least one."""
    return max(1, int(0.2 * p))


@dataclass
class SyntheticSpec:
    p_s: int = 5
    p_v: int = 5
    rho_s: float = 0.9
    rho_v: float = 0.1
    beta_s: np.ndarray | None = None
    noise_sd: float = 0.3
    outcome_mode: str = "linear_poly"  # "linear_poly" | "mlp"
    gen_net: MlpModel | None = None

    def __post_init__(self):
        if self.p_s < 1 or self.p_v < 0:
            raise ValueError("need p_s >= 1 and p_v >= 0")
        for name, rho in (("rho_s", self.rho_s), ("rho_v", self.rho_v)):
            if not 0.0 <= rho < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {rho}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.outcome_mode not in ("linear_poly", "mlp"):
            raise ValueError(f"unknown outcome_mode {self.outcome_mode!r}")
        if self.beta_s is None:
            self.beta_s = default_beta_s(self.p_s)
        else:
            self.beta_s = np.asarray(self.beta_s, dtype=float)
            if self.beta_s.shape != (self.p_s,):
                raise ValueError(
                    f"beta_s has shape {self.beta_s.shape}, expected ({self.p_s},)"
                )
        if self.outcome_mode == "linear_poly" and self.p_s < 3:
            raise ValueError("linear_poly outcome needs p_s >= 3")
        if self.gen_net is not None and self.gen_net.n_inputs != self.p_s:
            raise ValueError("gen_net input size must equal p_s")

    @property
    def p(self) -> int:
        return self.p_s + self.p_v


@dataclass
class EnvironmentSpec:
    """One selection-bias environment: bias rate ``r`` with 1 < |r| <= 3 and
    the indices (into the unstable block) of the biased variables."""

    r: float
    v_b: tuple[int, ...]

    def __post_init__(self):
        if not 1.0 < abs(self.r) <= 3.0:
            raise ValueError(f"|r| must be in (1, 3], got {self.r}")
        self.v_b = tuple(int(i) for i in self.v_b)
        if len(self.v_b) == 0:
            raise ValueError("v_b must not be empty")
        if len(set(self.v_b)) != len(self.v_b):
            raise ValueError("v_b indices must be distinct")
        if any(i < 0 for i in self.v_b):
            raise ValueError("v_b indices must be nonnegative")


@dataclass
class LabeledDataset:
    x: np.ndarray
    y: np.ndarray
    f_noiseless: np.ndarray | None = None
    stable_idx: np.ndarray = field(default_factory=lambda: np.arange(0))
    unstable_idx: np.ndarray = field(default_factory=lambda: np.arange(0))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def block_cov(p_s: int, p_v: int, rho_s: float, rho_v: float) -> np.ndarray:
    """Block-diagonal covariance: unit diagonal, constant off-diagonal rho_s
    within the stable block and rho_v within the unstable block."""
    p = p_s + p_v
    cov = np.zeros((p, p))
    cov[:p_s, :p_s] = rho_s
    cov[p_s:, p_s:] = rho_v
    np.fill_diagonal(cov, 1.0)
    return cov


def make_generator_net(p_s: int, rng: np.random.Generator) -> MlpModel:
    """Random tanh network used as a nonlinear outcome function."""
    return mlp_init((p_s, 16, 1), "tanh", "linear", rng)


def gen_base(spec: SyntheticSpec, n: int, rng: np.random.Generator) -> LabeledDataset:
    """Unbiased draw of n samples: covariates from the block-covariance
    normal, outcome from stable variables only plus independent noise."""
    cov = block_cov(spec.p_s, spec.p_v, spec.rho_s, spec.rho_v)
    x = mvn_sample(np.zeros(spec.p), cov, n, rng)
    s = x[:, : spec.p_s]
    if spec.outcome_mode == "linear_poly":
        f = s @ spec.beta_s + s[:, 0] * s[:, 1] * s[:, 2]
    else:
        if spec.gen_net is None:
            raise ValueError(
                "mlp outcome mode needs spec.gen_net (see make_generator_net)"
            )
        f = mlp_forward(spec.gen_net, s)
    y = f + spec.noise_sd * rng.standard_normal(n)
    return LabeledDataset(
        x=x,
        y=y,
        f_noiseless=f,
        stable_idx=np.arange(spec.p_s),
        unstable_idx=np.arange(spec.p_s, spec.p),
    )


def selection_prob(f_s: float, v_vals: np.ndarray, r: float) -> float:
    """Keep probability |r| ** (-5 * sum_i |f_s - sign(r) v_i|) over the
    biased variables; always in (0, 1]."""
    if abs(r) <= 1.0:
        raise ValueError(f"|r| must exceed 1, got {r}")
    v_vals = np.atleast_1d(np.asarray(v_vals, dtype=float))
    dist = np.abs(f_s - np.sign(r) * v_vals)
    return float(np.abs(r) ** (-5.0 * dist.sum()))


def _selection_probs(
    f: np.ndarray, v_cols: np.ndarray, r: float
) -> np.ndarray:
    dist = np.abs(f[:, None] - np.sign(r) * v_cols)
    return np.abs(r) ** (-5.0 * dist.sum(axis=1))


def apply_selection_bias(
    ds: LabeledDataset, env: EnvironmentSpec, rng: np.random.Generator
) -> LabeledDataset:
    """Keep each sample independently with its selection probability.

    For r > 1 the kept data shows positive correlation between the biased
    variables and y; for r < -1, negative.
    """
    if ds.f_noiseless is None:
        raise ValueError("dataset lacks the noiseless outcome needed for selection")
    if max(env.v_b) >= len(ds.unstable_idx):
        raise ValueError("v_b index outside the unstable block")
    v_cols = ds.x[:, ds.unstable_idx[list(env.v_b)]]
    probs = _selection_probs(ds.f_noiseless, v_cols, env.r)
    keep = rng.random(ds.n) < probs
    if not keep.any():
        raise ValueError(
            "selection rejected every sample; generate a larger base dataset"
        )
    return LabeledDataset(
        x=ds.x[keep],
        y=ds.y[keep],
        f_noiseless=ds.f_noiseless[keep],
        stable_idx=ds.stable_idx,
        unstable_idx=ds.unstable_idx,
    )


_MAX_ROUNDS = 1000


def gen_biased(
    spec: SyntheticSpec,
    n: int,
    env: EnvironmentSpec,
    rng: np.random.Generator,
) -> LabeledDataset:
    """Generate exactly n selection-biased samples by oversampling in rounds
    of 10n base draws and trimming uniformly at random."""
    parts: list[LabeledDataset] = []
    total = 0
    for _ in range(_MAX_ROUNDS):
        base = gen_base(spec, 10 * n, rng)
        try:
            kept = apply_selection_bias(base, env, rng)
        except ValueError:
            continue
        parts.append(kept)
        total += kept.n
        if total >= n:
            break
    if total < n:
        raise ValueError(
            f"selection kept only {total} of the requested {n} samples after "
            f"{_MAX_ROUNDS} rounds; the keep rate for r={env.r} is too low"
        )
    x = np.concatenate([d.x for d in parts])
    y = np.concatenate([d.y for d in parts])
    f = np.concatenate([d.f_noiseless for d in parts])
    pick = rng.permutation(total)[:n]
    return LabeledDataset(
        x=x[pick],
        y=y[pick],
        f_noiseless=f[pick],
        stable_idx=parts[0].stable_idx,
        unstable_idx=parts[0].unstable_idx,
    )


def make_env_suite(
    spec: SyntheticSpec,
    n_train: int,
    r_train: float,
    n_test: int,
    r_test_list,
    rng: np.random.Generator,
    v_b: tuple[int, ...] | None = None,
) -> tuple[LabeledDataset, list[LabeledDataset]]:
    """One biased training environment plus one biased test environment per
    test bias rate, all sharing the same outcome mechanism."""
    if v_b is None:
        v_b = tuple(range(default_biased_count(spec.p)))
    if spec.outcome_mode == "mlp" and spec.gen_net is None:
        spec = replace(spec, gen_net=make_generator_net(spec.p_s, rng))
    train = gen_biased(spec, n_train, EnvironmentSpec(r_train, v_b), rng)
    tests = [
        gen_biased(spec, n_test, EnvironmentSpec(r, v_b), rng) for r in r_test_list
    ]
    return train, tests


def save_dataset_csv(ds: LabeledDataset, path) -> None:
    """Write S1..Sps, V1..Vpv, Y columns; stable/unstable split is encoded in
    the column names."""
    names = [f"S{i + 1}" for i in range(len(ds.stable_idx))] + [
        f"V{i + 1}" for i in range(len(ds.unstable_idx))
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["Y"])
        for row, target in zip(ds.x, ds.y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])


def load_dataset_csv(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if header[-1] != "Y":
        raise ValueError("last column must be Y")
    names = header[:-1]
    stable = [i for i, c in enumerate(names) if c.startswith("S")]
    unstable = [i for i, c in enumerate(names) if c.startswith("V")]
    if len(stable) + len(unstable) != len(names):
        raise ValueError("feature columns must be named S<i> or V<i>")
    data = np.asarray(rows)
    return LabeledDataset(
        x=data[:, :-1],
        y=data[:, -1],
        f_noiseless=None,
        stable_idx=np.asarray(stable),
        unstable_idx=np.asarray(unstable),
    )
