"""Independence-based sample reweighting with weight averaging for stable
prediction under covariate shift: weight learners (decorrelation and
density-ratio), the averaging ensemble, downstream weighted estimators, a
synthetic selection-bias generator, and a config-driven experiment harness.
"""

__version__ = "0.1.0"

from .datagen import (
    EnvironmentSpec,
    LabeledDataset,
    SyntheticSpec,
    apply_selection_bias,
    gen_base,
    make_env_suite,
    selection_prob,
)
from .metrics import MetricsReport, beta_error, bias_variance_report, env_errors
from .mlp import MlpModel, TrainConfig, mlp_forward, mlp_init, mlp_train
from .numeric import derive_seed, make_rng, mvn_sample, solve_spd, standardize_columns
from .regress import (
    LinearModel,
    lasso_fit,
    mlp_regress_fit,
    ols_fit,
    predict,
    predict_class,
    ridge_fit,
    weighted_logistic_fit,
    wls_fit,
)
from .reweight import (
    DwrConfig,
    LsifModel,
    WeightSet,
    dwr_learn,
    dwr_objective,
    effective_sample_size,
    lsif_learn,
    normalize_clip,
    srdo_learn_classifier,
    srdo_resample,
    weighted_cov,
)
from .sawa import (
    Decomposition,
    SawaConfig,
    average_weights,
    decompose_error,
    pairwise_diversity,
    sawa_run,
)
from .tabular import TabularDataset, TabularSchema, load_csv, split_environments
