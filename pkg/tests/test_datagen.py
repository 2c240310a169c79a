import numpy as np
import pytest

from stableweight.datagen import (
    DEFAULT_R_TEST_GRID,
    EnvironmentSpec,
    LabeledDataset,
    SyntheticSpec,
    apply_selection_bias,
    block_cov,
    default_beta_s,
    default_biased_count,
    gen_base,
    gen_biased,
    load_dataset_csv,
    make_env_suite,
    save_dataset_csv,
    selection_prob,
)
from stableweight.mlp import mlp_init
from stableweight.numeric import make_rng
from stableweight.regress import ols_fit


class TestSpecs:
    def test_default_beta_alternates_unit_norm(self):
        beta = default_beta_s(5)
        assert np.isclose(np.linalg.norm(beta), 1.0)
        assert np.all(np.sign(beta) == [1, -1, 1, -1, 1])

    def test_default_biased_count(self):
        assert default_biased_count(10) == 2
        assert default_biased_count(4) == 1
        assert default_biased_count(3) == 1

    def test_block_cov_structure(self):
        cov = block_cov(2, 2, 0.9, 0.1)
        expected = np.array(
            [
                [1.0, 0.9, 0.0, 0.0],
                [0.9, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.1],
                [0.0, 0.0, 0.1, 1.0],
            ]
        )
        assert np.array_equal(cov, expected)

    def test_rho_bounds(self):
        with pytest.raises(ValueError):
            SyntheticSpec(rho_s=1.0)
        with pytest.raises(ValueError):
            SyntheticSpec(rho_v=-0.1)

    def test_linear_poly_needs_three_stable(self):
        with pytest.raises(ValueError, match="p_s >= 3"):
            SyntheticSpec(p_s=2, beta_s=[1.0, 1.0])

    def test_environment_spec_bounds(self):
        with pytest.raises(ValueError):
            EnvironmentSpec(r=1.0, v_b=(0,))
        with pytest.raises(ValueError):
            EnvironmentSpec(r=3.5, v_b=(0,))
        with pytest.raises(ValueError):
            EnvironmentSpec(r=2.0, v_b=())
        EnvironmentSpec(r=-2.0, v_b=(0, 1))


class TestGenBase:
    def test_zero_noise_exact_outcome(self):
        spec = SyntheticSpec(p_s=3, p_v=2, beta_s=[1.0, 1.0, 1.0], noise_sd=0.0)
        ds = gen_base(spec, 100, make_rng(0))
        s = ds.x[:, :3]
        expected = s[:, 0] + s[:, 1] + s[:, 2] + s[:, 0] * s[:, 1] * s[:, 2]
        assert np.allclose(ds.y, expected)
        assert np.array_equal(ds.y, ds.f_noiseless)

    def test_stable_block_correlation(self):
        ds = gen_base(SyntheticSpec(), 20000, make_rng(1))
        s = ds.x[:, ds.stable_idx]
        corr = np.corrcoef(s.T)
        off = corr[~np.eye(5, dtype=bool)]
        assert off.min() >= 0.87 and off.max() <= 0.93

    def test_mlp_mode_zero_net_gives_pure_noise(self):
        net = mlp_init((3, 16, 1), "tanh", "linear", make_rng(2))
        for w in net.weights:
            w[:] = 0.0
        spec = SyntheticSpec(p_s=3, p_v=1, outcome_mode="mlp", gen_net=net, noise_sd=1.0)
        ds = gen_base(spec, 4000, make_rng(3))
        assert np.allclose(ds.f_noiseless, 0.0)
        assert abs(ds.y.std() - 1.0) < 0.05

    def test_mlp_mode_requires_net(self):
        spec = SyntheticSpec(p_s=3, p_v=1, outcome_mode="mlp")
        with pytest.raises(ValueError, match="gen_net"):
            gen_base(spec, 10, make_rng(4))

    def test_index_metadata(self):
        ds = gen_base(SyntheticSpec(p_s=3, p_v=4), 10, make_rng(5))
        assert np.array_equal(ds.stable_idx, [0, 1, 2])
        assert np.array_equal(ds.unstable_idx, [3, 4, 5, 6])


class TestSelectionProb:
    def test_zero_distance_probability_one(self):
        assert selection_prob(1.3, np.array([1.3]), 2.0) == 1.0

    def test_direct_formula_positive_r(self):
        assert np.isclose(selection_prob(1.0, np.array([0.0]), 2.0), 2.0**-5)

    def test_direct_formula_negative_r(self):
        # D = |1 - (-1) * 0| = 1
        assert np.isclose(selection_prob(1.0, np.array([0.0]), -2.0), 2.0**-5)

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            selection_prob(0.0, np.array([0.0]), 0.5)

    def test_always_in_unit_interval(self):
        rng = make_rng(6)
        for _ in range(200):
            f = float(rng.standard_normal() * 3)
            v = rng.standard_normal(3) * 3
            r = float(rng.uniform(1.01, 3.0) * rng.choice([-1.0, 1.0]))
            p = selection_prob(f, v, r)
            assert 0.0 < p <= 1.0

    def test_product_over_biased_variables(self):
        p1 = selection_prob(0.5, np.array([0.0]), 2.0)
        p2 = selection_prob(0.5, np.array([1.5]), 2.0)
        both = selection_prob(0.5, np.array([0.0, 1.5]), 2.0)
        assert np.isclose(both, p1 * p2)


class TestApplySelectionBias:
    def test_positive_rate_positive_correlation(self):
        spec = SyntheticSpec()
        env = EnvironmentSpec(r=2.5, v_b=(0,))
        ds = gen_biased(spec, 5000, env, make_rng(7))
        v = ds.x[:, ds.unstable_idx[0]]
        assert np.corrcoef(v, ds.y)[0, 1] > 0.1

    def test_negative_rate_negative_correlation(self):
        spec = SyntheticSpec()
        env = EnvironmentSpec(r=-2.5, v_b=(0,))
        ds = gen_biased(spec, 5000, env, make_rng(8))
        v = ds.x[:, ds.unstable_idx[0]]
        assert np.corrcoef(v, ds.y)[0, 1] < -0.1

    def test_tracking_variable_keeps_everything(self):
        # make the biased variable equal the noiseless outcome: distance 0
        rng = make_rng(9)
        x = rng.standard_normal((500, 2))
        f = x[:, 0] * 2.0
        x[:, 1] = f
        ds = LabeledDataset(
            x=x, y=f, f_noiseless=f,
            stable_idx=np.array([0]), unstable_idx=np.array([1]),
        )
        kept = apply_selection_bias(ds, EnvironmentSpec(2.0, (0,)), make_rng(10))
        assert kept.n == 500

    def test_all_rejected_raises(self):
        x = np.ones((20, 2))
        f = np.full(20, 50.0)  # distance 49 -> probability ~ 3^-245
        ds = LabeledDataset(
            x=x, y=f, f_noiseless=f,
            stable_idx=np.array([0]), unstable_idx=np.array([1]),
        )
        with pytest.raises(ValueError, match="larger base"):
            apply_selection_bias(ds, EnvironmentSpec(3.0, (0,)), make_rng(11))

    def test_needs_noiseless_outcome(self):
        ds = LabeledDataset(
            x=np.ones((5, 2)), y=np.ones(5), f_noiseless=None,
            stable_idx=np.array([0]), unstable_idx=np.array([1]),
        )
        with pytest.raises(ValueError, match="noiseless"):
            apply_selection_bias(ds, EnvironmentSpec(2.0, (0,)), make_rng(12))

    def test_stronger_bias_stronger_correlation(self):
        spec = SyntheticSpec()
        weak = gen_biased(spec, 4000, EnvironmentSpec(1.5, (0,)), make_rng(13))
        strong = gen_biased(spec, 4000, EnvironmentSpec(2.5, (0,)), make_rng(13))
        corr_weak = abs(np.corrcoef(weak.x[:, weak.unstable_idx[0]], weak.y)[0, 1])
        corr_strong = abs(np.corrcoef(strong.x[:, strong.unstable_idx[0]], strong.y)[0, 1])
        assert corr_weak <= corr_strong + 0.02


class TestMakeEnvSuite:
    def test_default_grid_matches_protocol(self):
        assert DEFAULT_R_TEST_GRID == (-3.0, -2.5, -2.0, -1.5, 1.5, 2.0, 2.5, 3.0)

    def test_exact_training_size(self):
        spec = SyntheticSpec()
        train, tests = make_env_suite(spec, 1000, 2.1, 300, [1.5, -1.5], make_rng(14), v_b=(0,))
        assert train.n == 1000
        assert [t.n for t in tests] == [300, 300]

    def test_environments_share_conditional_outcome(self):
        # unbiased draws from one spec: regressing y on the stable block must
        # give the same coefficients across environments up to sampling noise
        spec = SyntheticSpec()
        betas = []
        for seed in (15, 16, 17):
            ds = gen_base(spec, 20000, make_rng(seed))
            model = ols_fit(ds.x[:, ds.stable_idx], ds.y)
            betas.append(model.beta)
        # per-environment coefficient s.e. is ~0.07 here (cubic-term residual
        # plus collinearity), so a max-min spread of 3 draws stays under 0.25
        spread = np.stack(betas).max(axis=0) - np.stack(betas).min(axis=0)
        assert spread.max() < 0.25

    def test_selection_keeps_conditional_unbiased_beta_v_zero(self):
        # on unbiased pooled data the unstable coefficients vanish within
        # three standard errors
        spec = SyntheticSpec()
        ds = gen_base(spec, 20000, make_rng(18))
        model = ols_fit(ds.x, ds.y)
        xa = np.column_stack([ds.x, np.ones(ds.n)])
        resid = ds.y - xa @ np.concatenate([model.beta, [model.intercept]])
        sigma2 = resid @ resid / (ds.n - xa.shape[1])
        cov_beta = sigma2 * np.linalg.inv(xa.T @ xa)
        se = np.sqrt(np.diag(cov_beta))[:-1]
        for j in ds.unstable_idx:
            assert abs(model.beta[j]) <= 3.0 * se[j]

    def test_mlp_mode_creates_shared_generator(self):
        spec = SyntheticSpec(outcome_mode="mlp")
        train, tests = make_env_suite(spec, 300, 2.0, 200, [1.5], make_rng(19), v_b=(0,))
        assert train.n == 300 and tests[0].n == 200


class TestDatasetCsv:
    def test_round_trip_with_header(self, tmp_path):
        spec = SyntheticSpec(p_s=3, p_v=2)
        ds = gen_base(spec, 20, make_rng(20))
        path = tmp_path / "data.csv"
        save_dataset_csv(ds, path)
        header = path.read_text().splitlines()[0]
        assert header == "S1,S2,S3,V1,V2,Y"
        loaded = load_dataset_csv(path)
        assert np.array_equal(loaded.x, ds.x)
        assert np.array_equal(loaded.y, ds.y)
        assert np.array_equal(loaded.stable_idx, ds.stable_idx)
        assert np.array_equal(loaded.unstable_idx, ds.unstable_idx)
