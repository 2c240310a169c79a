"""Config-driven experiment runner.

One TOML file describes one experiment: the data (synthetic generator
settings or a tabular file with an environment column), the methods to
compare, ensemble settings, and the number of repeats. The runner derives
every random stream from (master_seed, repeat, learner, member), so results
are a pure function of the config and identical runs produce byte-identical
outputs regardless of thread count.

For a weight learner configured both plain and with the averaging ensemble,
the plain variant is the first ensemble member, so the two variants are
paired on the same weight-learning draw within each repeat.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .datagen import (
    DEFAULT_R_TEST_GRID,
    LabeledDataset,
    SyntheticSpec,
    default_biased_count,
    make_env_suite,
)
from .metrics import MetricsReport, beta_error, env_errors
from .mlp import TrainConfig
from .numeric import derive_seed, make_rng, standardize_columns
from .regress import (
    lasso_fit,
    mlp_regress_fit,
    ols_fit,
    predict,
    predict_class,
    ridge_fit,
    weighted_logistic_fit,
    wls_fit,
)
from .reweight import DwrConfig, WeightSet, effective_sample_size
from .sawa import (
    LsifConfig,
    SawaConfig,
    SrdoClassifierConfig,
    average_weights,
    pairwise_diversity,
    run_members,
)
from .tabular import TabularSchema, load_csv, split_environments, standardize_train_tests

MODES = ("synthetic_linear", "synthetic_nonlinear", "tabular")
WEIGHT_LEARNERS = ("dwr", "srdo_classifier", "srdo_lsif")
BASELINES = ("ols", "ridge", "lasso", "mlp")
LEARNER_CODE = {"dwr": 1, "srdo_classifier": 2, "srdo_lsif": 3}

# stream labels for seed derivation
_DATA, _WEIGHTS, _FIT, _SELECT = 101, 202, 303, 404

DEFAULT_RIDGE_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_LASSO_GRID = (0.001, 0.01, 0.1)

# tuned for the selection-bias protocol: shorter budget than the library
# default keeps ensemble members diverse
EXPERIMENT_DWR_DEFAULTS = dict(
    learning_rate=0.005,
    max_iters=1500,
    objective_tol=1e-6,
    init_sd=1.0,
    uniformity_penalty=0.01,
)


@dataclass(frozen=True)
class MethodSpec:
    learner: str
    sawa: bool = False

    @property
    def name(self) -> str:
        return self.learner + ("+sawa" if self.sawa else "")


@dataclass
class SyntheticSettings:
    n_train: int = 2000
    n_test: int = 3000
    p_s: int = 5
    p_v: int = 5
    rho_s: float = 0.9
    rho_v: float = 0.1
    noise_sd: float = 0.3
    beta_s: list[float] | None = None
    r_train: float = 2.1
    r_test: tuple[float, ...] = DEFAULT_R_TEST_GRID
    n_biased: int | None = None

    def biased_indices(self) -> tuple[int, ...]:
        count = self.n_biased
        if count is None:
            count = default_biased_count(self.p_s + self.p_v)
        return tuple(range(count))

    def spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            p_s=self.p_s,
            p_v=self.p_v,
            rho_s=self.rho_s,
            rho_v=self.rho_v,
            beta_s=None if self.beta_s is None else np.asarray(self.beta_s),
            noise_sd=self.noise_sd,
            outcome_mode="linear_poly",
        )


@dataclass
class TabularSettings:
    path: str
    target: str
    features: list[str]
    train_environment: str
    environment_column: str
    categoricals: list[str] = field(default_factory=list)
    task: str = "regression"

    def schema(self) -> TabularSchema:
        return TabularSchema(
            feature_columns=list(self.features),
            target_column=self.target,
            environment_column=self.environment_column,
            task=self.task,
            categorical_columns=list(self.categoricals),
        )


@dataclass
class RegressorSettings:
    hidden: tuple[int, ...] = (32,)
    learning_rate: float = 0.05
    max_epochs: int = 80
    batch_size: int = 128

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            batch_size=self.batch_size,
        )


@dataclass
class ExperimentConfig:
    mode: str
    methods: list[MethodSpec]
    master_seed: int = 0
    repeats: int = 10
    output_dir: str = "results"
    sawa_k: int = 10
    sawa_reference: str = "none"  # "none" | "high_budget_dwr"
    reference_k: int = 50
    reference_iter_factor: int = 10
    synthetic: SyntheticSettings | None = None
    tabular: TabularSettings | None = None
    dwr: DwrConfig = field(default_factory=lambda: DwrConfig(**EXPERIMENT_DWR_DEFAULTS))
    srdo: SrdoClassifierConfig = field(default_factory=SrdoClassifierConfig)
    lsif: LsifConfig = field(default_factory=LsifConfig)
    regressor: RegressorSettings = field(default_factory=RegressorSettings)
    ridge_lambdas: tuple[float, ...] = DEFAULT_RIDGE_GRID
    lasso_lambdas: tuple[float, ...] = DEFAULT_LASSO_GRID


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _parse_methods(raw, mode: str, task: str, errors: list[str]) -> list[MethodSpec]:
    methods = []
    valid = set(BASELINES + WEIGHT_LEARNERS)
    if mode == "synthetic_linear":
        valid.discard("mlp")
    if task == "binary_classification":
        valid.discard("lasso")
        valid.discard("mlp")
    for item in raw:
        base, plus, suffix = str(item).partition("+")
        if plus and suffix != "sawa":
            errors.append(f"method {item!r}: only the '+sawa' variant exists")
            continue
        if base not in valid:
            errors.append(
                f"unknown method {base!r}; valid names: {sorted(valid)}"
            )
            continue
        if plus and base not in WEIGHT_LEARNERS:
            errors.append(f"method {item!r}: '+sawa' applies to weight learners only")
            continue
        methods.append(MethodSpec(base, bool(plus)))
    if not methods and not errors:
        errors.append("methods list is empty")
    return methods


def validate_config_dict(doc: dict) -> tuple[ExperimentConfig | None, list[str]]:
    """Build an ExperimentConfig, reporting every violation rather than the
    first one."""
    errors: list[str] = []

    mode = doc.get("mode")
    if mode not in MODES:
        errors.append(f"mode must be one of {MODES}, got {mode!r}")
        mode = "synthetic_linear"

    master_seed = doc.get("master_seed", 0)
    if not isinstance(master_seed, int):
        errors.append("master_seed must be an integer")
        master_seed = 0
    repeats = doc.get("repeats", 10)
    if not isinstance(repeats, int) or repeats < 1:
        errors.append(f"repeats must be a positive integer, got {repeats!r}")
        repeats = 1
    output_dir = doc.get("output_dir", "results")

    synthetic = None
    tabular = None
    task = "regression"
    if mode in ("synthetic_linear", "synthetic_nonlinear"):
        try:
            synthetic = SyntheticSettings(**doc.get("synthetic", {}))
            if synthetic.r_test:
                synthetic.r_test = tuple(float(r) for r in synthetic.r_test)
            for r in (synthetic.r_train, *synthetic.r_test):
                if not 1.0 < abs(r) <= 3.0:
                    errors.append(f"bias rate {r} outside (1, 3] in magnitude")
        except (TypeError, ValueError) as exc:
            errors.append(f"[synthetic] {exc}")
    else:
        tab = doc.get("tabular")
        if tab is None:
            errors.append("tabular mode needs a [tabular] section")
        else:
            try:
                tabular = TabularSettings(**tab)
                tabular.schema()  # validates column relationships
                task = tabular.task
            except (TypeError, ValueError) as exc:
                errors.append(f"[tabular] {exc}")
                tabular = None

    methods = _parse_methods(doc.get("methods", []), mode, task, errors)

    sawa_section = doc.get("sawa", {})
    sawa_k = sawa_section.get("k", 10)
    if not isinstance(sawa_k, int) or sawa_k < 1:
        errors.append(f"sawa.k must be a positive integer, got {sawa_k!r}")
        sawa_k = 1
    sawa_reference = sawa_section.get("reference", "none")
    if sawa_reference not in ("none", "high_budget_dwr"):
        errors.append(f"sawa.reference must be 'none' or 'high_budget_dwr'")
    reference_k = sawa_section.get("reference_k", 50)
    reference_iter_factor = sawa_section.get("reference_iter_factor", 10)

    try:
        dwr = DwrConfig(**{**EXPERIMENT_DWR_DEFAULTS, **doc.get("dwr", {})})
    except (TypeError, ValueError) as exc:
        errors.append(f"[dwr] {exc}")
        dwr = DwrConfig(**EXPERIMENT_DWR_DEFAULTS)

    srdo_section = dict(doc.get("srdo", {}))
    try:
        train_kwargs = {}
        for src_key, dst_key in (
            ("learning_rate", "learning_rate"),
            ("max_epochs", "max_epochs"),
            ("batch_size", "batch_size"),
            ("weight_decay", "weight_decay"),
            ("early_stop_patience", "early_stop_patience"),
        ):
            if src_key in srdo_section:
                train_kwargs[dst_key] = srdo_section.pop(src_key)
        srdo = SrdoClassifierConfig(
            hidden=tuple(srdo_section.pop("hidden", (64, 64))),
            prob_clip=srdo_section.pop("prob_clip", 1e-3),
            clip_quantile=srdo_section.pop("clip_quantile", 0.99),
        )
        if train_kwargs:
            srdo.train = replace(srdo.train, **train_kwargs)
        if srdo_section:
            errors.append(f"[srdo] unknown keys {sorted(srdo_section)}")
    except (TypeError, ValueError) as exc:
        errors.append(f"[srdo] {exc}")
        srdo = SrdoClassifierConfig()

    try:
        lsif = LsifConfig(**doc.get("lsif", {}))
    except (TypeError, ValueError) as exc:
        errors.append(f"[lsif] {exc}")
        lsif = LsifConfig()

    try:
        reg_section = dict(doc.get("regressor", {}))
        if "hidden" in reg_section:
            reg_section["hidden"] = tuple(reg_section["hidden"])
        regressor = RegressorSettings(**reg_section)
    except (TypeError, ValueError) as exc:
        errors.append(f"[regressor] {exc}")
        regressor = RegressorSettings()

    ridge_lambdas = tuple(doc.get("ridge", {}).get("lambdas", DEFAULT_RIDGE_GRID))
    lasso_lambdas = tuple(doc.get("lasso", {}).get("lambdas", DEFAULT_LASSO_GRID))

    if errors:
        return None, errors
    return (
        ExperimentConfig(
            mode=mode,
            methods=methods,
            master_seed=master_seed,
            repeats=repeats,
            output_dir=output_dir,
            sawa_k=sawa_k,
            sawa_reference=sawa_reference,
            reference_k=reference_k,
            reference_iter_factor=reference_iter_factor,
            synthetic=synthetic,
            tabular=tabular,
            dwr=dwr,
            srdo=srdo,
            lsif=lsif,
            regressor=regressor,
            ridge_lambdas=ridge_lambdas,
            lasso_lambdas=lasso_lambdas,
        ),
        [],
    )


def validate_config(path) -> tuple[ExperimentConfig | None, list[str]]:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        return None, [f"config file not found: {path}"]
    except tomllib.TOMLDecodeError as exc:
        return None, [f"config parse error in {path}: {exc}"]
    return validate_config_dict(doc)


def config_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# --------------------------------------------------------------------------
# running


@dataclass
class CellResult:
    repeat: int
    method: str
    report: MetricsReport
    ess: float | None = None
    bias_sq: float | None = None
    variance: float | None = None
    covariance: float | None = None
    total: float | None = None
    ess_members_mean: float | None = None


@dataclass
class RunSummary:
    cells: list[CellResult]
    failures: list[tuple[int, str, str]]
    aggregate: dict[str, dict[str, float | None]]
    output_dir: str


def _learner_members(cfg, x_std, rep, learner, count) -> list[WeightSet]:
    seed = derive_seed(cfg.master_seed, _WEIGHTS, rep, LEARNER_CODE[learner])
    learner_config = {
        "dwr": cfg.dwr,
        "srdo_classifier": cfg.srdo,
        "srdo_lsif": cfg.lsif,
    }[learner]
    sawa_cfg = SawaConfig(
        k=count, learner=learner, learner_config=learner_config, master_seed=seed
    )
    return run_members(x_std, sawa_cfg)


def _grid_select(cfg, rep, method, x, y, fit_fn, grid, loss: str):
    """Pick the grid value with the best loss on a held-out fifth of the
    training rows, then refit on everything."""
    rng = make_rng(derive_seed(cfg.master_seed, _SELECT, rep, LEARNER_CODE.get(method, 9)))
    n = len(y)
    order = rng.permutation(n)
    n_val = max(1, n // 5)
    val_idx, tr_idx = order[:n_val], order[n_val:]
    best_lam, best_loss = None, np.inf
    for lam in grid:
        model = fit_fn(x[tr_idx], y[tr_idx], lam)
        if loss == "rmse":
            err = float(np.sqrt(np.mean((predict(model, x[val_idx]) - y[val_idx]) ** 2)))
        else:
            err = float(np.mean(predict_class(model, x[val_idx]) != y[val_idx]))
        if err < best_loss:
            best_lam, best_loss = lam, err
    return fit_fn(x, y, best_lam)


def _fit_predictor(cfg, rep, method: MethodSpec, train, weights, task: str):
    """Fit the downstream model for one method on one training set."""
    x, y = train.x, train.y
    if task == "binary_classification":
        if method.learner == "ridge":
            return _grid_select(
                cfg, rep, "ridge", x, y,
                lambda a, b, lam: weighted_logistic_fit(a, b, None, ridge=lam),
                cfg.ridge_lambdas, "misclassification",
            )
        return weighted_logistic_fit(x, y, weights)
    if cfg.mode == "synthetic_nonlinear" and (
        method.learner in WEIGHT_LEARNERS or method.learner == "mlp"
    ):
        rng = make_rng(
            derive_seed(cfg.master_seed, _FIT, rep, LEARNER_CODE.get(method.learner, 8))
        )
        return mlp_regress_fit(
            x, y, weights, cfg.regressor.train_config(), rng, cfg.regressor.hidden
        )
    if method.learner == "ols":
        return ols_fit(x, y)
    if method.learner == "ridge":
        return _grid_select(
            cfg, rep, "ridge", x, y,
            lambda a, b, lam: ridge_fit(a, b, lam), cfg.ridge_lambdas, "rmse",
        )
    if method.learner == "lasso":
        return _grid_select(
            cfg, rep, "lasso", x, y,
            lambda a, b, lam: lasso_fit(a, b, lam), cfg.lasso_lambdas, "rmse",
        )
    if method.learner == "mlp":
        rng = make_rng(derive_seed(cfg.master_seed, _FIT, rep, 8))
        return mlp_regress_fit(
            x, y, weights, cfg.regressor.train_config(), rng, cfg.regressor.hidden
        )
    return wls_fit(x, y, weights)


def _reference_weights(cfg, x_std, rep) -> WeightSet:
    """High-budget decorrelation average used as the bias reference."""
    ref_dwr = replace(
        cfg.dwr, max_iters=cfg.dwr.max_iters * cfg.reference_iter_factor
    )
    seed = derive_seed(cfg.master_seed, _WEIGHTS, rep, 7777)
    sawa_cfg = SawaConfig(
        k=cfg.reference_k, learner="dwr", learner_config=ref_dwr, master_seed=seed
    )
    return average_weights(run_members(x_std, sawa_cfg))


def _run_repeat(cfg: ExperimentConfig, rep: int, shared) -> tuple[list, list]:
    cells: list[CellResult] = []
    failures: list[tuple[int, str, str]] = []

    if cfg.mode in ("synthetic_linear", "synthetic_nonlinear"):
        syn = cfg.synthetic
        rng = make_rng(derive_seed(cfg.master_seed, _DATA, rep))
        spec = syn.spec()
        if cfg.mode == "synthetic_nonlinear":
            spec = replace(spec, outcome_mode="mlp")
        train, tests = make_env_suite(
            spec, syn.n_train, syn.r_train, syn.n_test, syn.r_test, rng,
            v_b=syn.biased_indices(),
        )
        tests_map = dict(zip(syn.r_test, tests))
        truth = (
            np.concatenate([spec.beta_s, np.zeros(spec.p_v)])
            if cfg.mode == "synthetic_linear"
            else None
        )
        loss = "rmse"
        task = "regression"
    else:
        train, tests_map = shared
        truth = None
        task = cfg.tabular.task
        loss = "rmse" if task == "regression" else "misclassification"

    x_std = standardize_columns(train.x)[0]

    member_counts = {}
    for method in cfg.methods:
        if method.learner in WEIGHT_LEARNERS:
            need = cfg.sawa_k if method.sawa else 1
            member_counts[method.learner] = max(member_counts.get(method.learner, 0), need)
    members_by_learner = {}
    for learner, count in member_counts.items():
        try:
            members_by_learner[learner] = _learner_members(cfg, x_std, rep, learner, count)
        except Exception as exc:  # noqa: BLE001 - recorded per cell below
            members_by_learner[learner] = exc

    reference = None
    if cfg.sawa_reference == "high_budget_dwr" and any(m.sawa for m in cfg.methods):
        reference = _reference_weights(cfg, x_std, rep)

    for method in cfg.methods:
        try:
            weights = None
            cell = CellResult(repeat=rep, method=method.name, report=MetricsReport())
            if method.learner in WEIGHT_LEARNERS:
                members = members_by_learner[method.learner]
                if isinstance(members, Exception):
                    raise members
                if method.sawa:
                    pool = members[: cfg.sawa_k]
                    weights = average_weights(pool)
                    if len(pool) >= 2:
                        stack = np.stack([m.w for m in pool])
                        pool_mean = stack.mean(axis=0)
                        cell.variance = float(
                            ((stack - pool_mean) ** 2).sum(axis=1).mean() / stack.shape[1]
                        )
                        cell.covariance = pairwise_diversity(pool)
                        cell.ess_members_mean = float(
                            np.mean([effective_sample_size(m) for m in pool])
                        )
                        if reference is not None:
                            cell.bias_sq = float(
                                ((pool_mean - reference.w) ** 2).mean()
                            )
                            cell.total = float(
                                ((weights.w - reference.w) ** 2).mean()
                            )
                else:
                    weights = members[0]
                cell.ess = effective_sample_size(weights)
            model = _fit_predictor(cfg, rep, method, train, weights, task)
            cell.report = env_errors(model, tests_map, loss)
            if truth is not None and hasattr(model, "beta"):
                cell.report.beta_error = beta_error(model, truth)
            cells.append(cell)
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            failures.append((rep, method.name, f"{type(exc).__name__}: {exc}"))
    return cells, failures


def run_experiment(cfg: ExperimentConfig, digest: str = "") -> RunSummary:
    """Execute every (repeat, method) cell, write report files, and return
    the in-memory summary. Failures are contained per cell."""
    os.makedirs(cfg.output_dir, exist_ok=True)

    shared = None
    if cfg.mode == "tabular":
        schema = cfg.tabular.schema()
        ds = load_csv(cfg.tabular.path, schema)
        splits = split_environments(ds, schema)
        if cfg.tabular.train_environment not in splits:
            raise ConfigError(
                [
                    f"train_environment {cfg.tabular.train_environment!r} not in "
                    f"environment values {sorted(splits)}"
                ]
            )
        train = splits.pop(cfg.tabular.train_environment)
        train, tests_map = standardize_train_tests(train, splits)
        shared = (train, tests_map)

    threads = int(os.environ.get("STABLEWEIGHT_THREADS", "1") or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda r: _run_repeat(cfg, r, shared), range(cfg.repeats))
            )
    else:
        results = [_run_repeat(cfg, rep, shared) for rep in range(cfg.repeats)]

    cells = [c for cell_list, _ in results for c in cell_list]
    failures = [f for _, failure_list in results for f in failure_list]
    cells.sort(key=lambda c: (c.repeat, c.method))

    aggregate: dict[str, dict[str, float | None]] = {}
    for method in cfg.methods:
        rows = [c for c in cells if c.method == method.name]
        if not rows:
            aggregate[method.name] = {
                "mean_error": None, "std_error": None, "max_error": None,
                "beta_error": None,
            }
            continue
        betas = [c.report.beta_error for c in rows if c.report.beta_error is not None]
        aggregate[method.name] = {
            "mean_error": float(np.mean([c.report.mean_error for c in rows])),
            "std_error": float(np.mean([c.report.std_error for c in rows])),
            "max_error": float(np.mean([c.report.max_error for c in rows])),
            "beta_error": float(np.mean(betas)) if betas else None,
        }

    _write_outputs(cfg, cells, failures, aggregate, digest)
    return RunSummary(
        cells=cells, failures=failures, aggregate=aggregate, output_dir=cfg.output_dir
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".10g")


def _write_outputs(cfg, cells, failures, aggregate, digest) -> None:
    runs_path = os.path.join(cfg.output_dir, "runs.csv")
    with open(runs_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "repeat", "method", "env_r", "loss", "beta_error", "ess",
                "bias_sq", "variance", "covariance",
            ]
        )
        for cell in cells:
            for env_key in sorted(cell.report.per_env_loss, key=str):
                writer.writerow(
                    [
                        cell.repeat,
                        cell.method,
                        env_key,
                        _fmt(cell.report.per_env_loss[env_key]),
                        _fmt(cell.report.beta_error),
                        _fmt(cell.ess),
                        _fmt(cell.bias_sq),
                        _fmt(cell.variance),
                        _fmt(cell.covariance),
                    ]
                )

    agg_path = os.path.join(cfg.output_dir, "aggregate.csv")
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mean_error", "std_error", "max_error", "beta_error"])
        for method in cfg.methods:
            stats = aggregate[method.name]
            writer.writerow(
                [
                    method.name,
                    _fmt(stats["mean_error"]),
                    _fmt(stats["std_error"]),
                    _fmt(stats["max_error"]),
                    _fmt(stats["beta_error"]),
                ]
            )

    diagnostics = {}
    for cell in cells:
        if cell.variance is None:
            continue
        diagnostics[f"{cell.method}/repeat{cell.repeat}"] = {
            "ess_ensemble": cell.ess,
            "ess_members_mean": cell.ess_members_mean,
            "variance": cell.variance,
            "covariance": cell.covariance,
            "bias_sq": cell.bias_sq,
            "total": cell.total,
        }
    with open(os.path.join(cfg.output_dir, "diagnostics.json"), "w") as fh:
        json.dump(diagnostics, fh, indent=2, sort_keys=True)

    manifest = {
        "config_sha256": digest,
        "package": f"stableweight {__version__}",
        "numpy": np.__version__,
        "mode": cfg.mode,
        "master_seed": cfg.master_seed,
        "repeats": cfg.repeats,
        "methods": [m.name for m in cfg.methods],
        "sawa_k": cfg.sawa_k,
        "aggregate": aggregate,
        "failures": [list(f) for f in failures],
    }
    with open(os.path.join(cfg.output_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def generate_train_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    """The repeat-0 training dataset for a synthetic config."""
    if cfg.mode not in ("synthetic_linear", "synthetic_nonlinear"):
        raise ConfigError(["gen-data applies to synthetic modes only"])
    syn = cfg.synthetic
    rng = make_rng(derive_seed(cfg.master_seed, _DATA, 0))
    spec = syn.spec()
    if cfg.mode == "synthetic_nonlinear":
        spec = replace(spec, outcome_mode="mlp")
    train, _ = make_env_suite(
        spec, syn.n_train, syn.r_train, 1, [syn.r_test[0]], rng,
        v_b=syn.biased_indices(),
    )
    return train


def learn_weights_only(cfg: ExperimentConfig) -> tuple[str, WeightSet]:
    """Weights of the first weight-learning method at repeat 0, for
    inspection."""
    weight_methods = [m for m in cfg.methods if m.learner in WEIGHT_LEARNERS]
    if not weight_methods:
        raise ConfigError(["no weight-learning method in the config"])
    method = weight_methods[0]

    if cfg.mode == "tabular":
        schema = cfg.tabular.schema()
        ds = load_csv(cfg.tabular.path, schema)
        splits = split_environments(ds, schema)
        train = splits.pop(cfg.tabular.train_environment)
        train, _ = standardize_train_tests(train, splits)
        x_std = train.x
    else:
        train = generate_train_dataset(cfg)
        x_std = standardize_columns(train.x)[0]

    count = cfg.sawa_k if method.sawa else 1
    members = _learner_members(cfg, x_std, 0, method.learner, count)
    weights = average_weights(members[: cfg.sawa_k]) if method.sawa else members[0]
    return method.name, weights
