"""
Unit tests for the ATE estimators and their variance estimates
"""

import dataclasses
import math

import numpy as np
import pytest

from app.models import ate_estimators
from app.models.ate_estimators import (
    METHODS,
    AteEstimator,
    AteReport,
    TuningConfig,
    ate_adjusted,
    ate_lasso,
    ate_lasso_ols,
    ate_ols,
    ate_unadjusted,
    confidence_interval,
    neyman_variance_adjusted,
    normal_quantile,
    zero_adjustment,
)
from app.models.errors import (
    GroupSizeError,
    OlsNotApplicableError,
    RefitError,
    VarianceError,
)
from app.models.lasso_solver import fit_ols
from app.models.population import ExperimentSample
from app.utils.validation import ValidationError
from tests.conftest import make_sparse_sample


class TestNormalQuantile:
    """Test quantiles and interval construction"""

    def test_95_percent(self):
        """Test z_0.975"""
        assert normal_quantile(0.95) == pytest.approx(1.959963984540054, abs=1e-9)

    def test_invalid_level(self):
        """Test levels outside (0, 1)"""
        with pytest.raises(ValidationError):
            normal_quantile(1.0)

    def test_interval_half_width(self):
        """Test estimate -/+ z sqrt(sigma2 / n)"""
        low, high = confidence_interval(1.0, 4.0, 16, 0.95)
        assert high - low == pytest.approx(2 * 1.959963984540054 * 0.5)
        assert (low + high) / 2 == pytest.approx(1.0)

    def test_negative_variance_rejected(self):
        """Test sigma2 >= 0"""
        with pytest.raises(ValidationError):
            confidence_interval(0.0, -1.0, 10)


class TestUnadjusted:
    """Test the difference-in-means estimator"""

    def test_toy_values(self, toy_sample):
        """Test hand-computed estimate and Neyman variance"""
        report = ate_unadjusted(toy_sample)
        assert report.estimate == pytest.approx(2.5)
        assert report.sigma2_hat == pytest.approx(14.0 / 3.0)
        assert report.standard_error == pytest.approx(math.sqrt(14.0 / 3.0 / 8))
        assert report.selected_treated is None
        assert report.covers(2.5)

    def test_identical_groups(self):
        """Test identical arms give a zero estimate"""
        sample = ExperimentSample(
            np.zeros((4, 1)), [1, 1, 0, 0], [1.0, 3.0, 1.0, 3.0]
        )
        assert ate_unadjusted(sample).estimate == pytest.approx(0.0)

    def test_group_of_one_rejected(self):
        """Test GroupSizeError when a group has a single unit"""
        sample = ExperimentSample(np.zeros((3, 1)), [1, 0, 0], [1.0, 2.0, 3.0])
        with pytest.raises(GroupSizeError):
            ate_unadjusted(sample)

    def test_runs_through_zero_adjustment(self, toy_sample, mocker):
        """Test both arms are fitted with zero adjustment vectors"""
        spy = mocker.spy(ate_estimators, "zero_adjustment")
        ate_unadjusted(toy_sample)
        assert [call.args[1] for call in spy.call_args_list] == [True, False]
        assert not spy.spy_return.beta.any()

    def test_report_serializes(self, toy_sample):
        """Test to_dict includes the interval and standard error"""
        payload = ate_unadjusted(toy_sample).to_dict()
        assert payload["method"] == "unadjusted"
        assert len(payload["ci"]) == 2
        assert payload["standard_error"] > 0


class TestAdjustedEstimate:
    """Test the adjusted estimator and its variance"""

    def test_zero_adjustment_equals_unadjusted(self, sparse_sample):
        """Test beta = 0 in both groups reproduces the difference in means"""
        fit_a = zero_adjustment(sparse_sample, True)
        fit_b = zero_adjustment(sparse_sample, False)
        estimate = ate_adjusted(sparse_sample, fit_a, fit_b)
        assert estimate == pytest.approx(ate_unadjusted(sparse_sample).estimate)
        sigma2 = neyman_variance_adjusted(sparse_sample, fit_a, fit_b)
        assert sigma2 == pytest.approx(ate_unadjusted(sparse_sample).sigma2_hat)

    def test_balanced_covariates_leave_estimate_unchanged(self, toy_sample):
        """Test xbar_A = xbar_B = xbar gives the unadjusted estimate for any beta"""
        fit_a = fit_ols(*toy_sample.group(True))
        fit_b = fit_ols(*toy_sample.group(False))
        assert ate_adjusted(toy_sample, fit_a, fit_b) == pytest.approx(2.5)

    def test_wrong_dimension_rejected(self, toy_sample, sparse_sample):
        """Test the adjustment vector must match p"""
        fit = zero_adjustment(sparse_sample, True)
        with pytest.raises(ValidationError):
            ate_adjusted(toy_sample, fit, fit)

    def test_imputation_identity(self):
        """Test the adjusted estimate equals imputing the missing potential outcomes"""
        generator = np.random.default_rng(30)
        for _ in range(10):
            sample = make_sparse_sample(n=int(generator.integers(20, 80)), p=4,
                                        seed=int(generator.integers(1000)))
            fit_a = dataclasses.replace(
                fit_ols(*sample.group(True)), beta=generator.standard_normal(4)
            )
            fit_b = dataclasses.replace(
                fit_ols(*sample.group(False)), beta=generator.standard_normal(4)
            )
            mask = sample.treated_mask
            n, n_a, n_b = sample.n, sample.n_treated, sample.n_control
            a_bar = sample.observed[mask].mean()
            b_bar = sample.observed[~mask].mean()
            x_a = sample.covariates[mask].mean(axis=0)
            x_b = sample.covariates[~mask].mean(axis=0)
            a_imputed = a_bar + (x_b - x_a) @ fit_a.beta
            b_imputed = b_bar + (x_a - x_b) @ fit_b.beta
            expected = (n_a * a_bar + n_b * a_imputed) / n - (
                n_b * b_bar + n_a * b_imputed
            ) / n
            estimate = ate_adjusted(sample, fit_a, fit_b)
            assert estimate == pytest.approx(expected, abs=1e-12)

    def test_df_adjustment_ratio(self, sparse_sample):
        """Test the df-adjusted value is n_g / (n_g - df) times the plain one"""
        fit_a = fit_ols(*sparse_sample.group(True))
        fit_b = fit_ols(*sparse_sample.group(False))
        n_g = sparse_sample.n_treated
        assert n_g == sparse_sample.n_control
        assert fit_a.df == fit_b.df == sparse_sample.p + 1
        adjusted = neyman_variance_adjusted(sparse_sample, fit_a, fit_b, df_adjust=True)
        plain = neyman_variance_adjusted(sparse_sample, fit_a, fit_b, df_adjust=False)
        assert adjusted == pytest.approx(plain * n_g / (n_g - fit_a.df), rel=1e-12)

    def test_location_equivariance(self, sparse_sample):
        """Test adding c to every treated outcome shifts all four estimates by c"""
        shifted = sparse_sample.with_observed(
            sparse_sample.observed + 3.0 * sparse_sample.assignment
        )
        estimator = AteEstimator(TuningConfig(folds=5, n_lambda=15, seed=2))
        before = estimator.estimate(sparse_sample)
        after = estimator.estimate(shifted)
        for a, b in zip(before, after):
            assert b.estimate == pytest.approx(a.estimate + 3.0, abs=1e-6), a.method
            assert b.sigma2_hat == pytest.approx(a.sigma2_hat, rel=1e-6), a.method

    def test_df_exhausts_group(self):
        """Test VarianceError when n_g <= df, and the n_g denominator fallback"""
        sample = ExperimentSample(
            np.array([[0.0], [1.0], [0.0], [1.0]]), [1, 1, 0, 0], [1.0, 2.0, 0.5, 0.0]
        )
        fit_a = fit_ols(*sample.group(True))
        fit_b = fit_ols(*sample.group(False))
        with pytest.raises(VarianceError, match="df_adjust=False"):
            neyman_variance_adjusted(sample, fit_a, fit_b, df_adjust=True)
        assert neyman_variance_adjusted(sample, fit_a, fit_b, df_adjust=False) >= 0


class TestOls:
    """Test full OLS adjustment"""

    def test_reduces_variance_on_predictive_covariates(self, sparse_sample):
        """Test OLS variance is below the unadjusted one when X predicts y"""
        ols = ate_ols(sparse_sample)
        unadjusted = ate_unadjusted(sparse_sample)
        assert ols.method == "ols"
        assert ols.sigma2_hat < unadjusted.sigma2_hat
        assert ols.estimate == pytest.approx(0.5, abs=0.3)

    def test_exact_linear_equal_slopes(self):
        """Test an exact fit gives the effect and zero variance on imbalanced groups"""
        generator = np.random.default_rng(31)
        X = generator.standard_normal((30, 3))
        assignment = np.zeros(30, dtype=int)
        assignment[:12] = 1
        X[:12] += 0.7
        y = 1.0 + X @ np.array([2.0, -1.0, 0.5]) + 1.25 * assignment
        report = ate_ols(ExperimentSample(X, assignment, y))
        assert report.estimate == pytest.approx(1.25, abs=1e-10)
        assert report.sigma2_hat == pytest.approx(0.0, abs=1e-18)

    def test_no_covariates(self, toy_frame):
        """Test p = 0 reduces to the difference in means"""
        sample = ExperimentSample(
            np.empty((8, 0)), toy_frame["t"].to_numpy(), toy_frame["y"].to_numpy()
        )
        report = ate_ols(sample)
        assert report.estimate == pytest.approx(2.5)
        assert report.sigma2_hat == pytest.approx(ate_unadjusted(sample).sigma2_hat)

    def test_matches_two_regressions(self):
        """Test against explicit normal-equation fits in each group"""
        sample = make_sparse_sample(n=20, p=2, seed=9)
        x_bar = sample.covariates.mean(axis=0)
        terms = []
        for treated in (True, False):
            X_g, y_g = sample.group(treated)
            design = np.column_stack([np.ones(len(y_g)), X_g])
            coef = np.linalg.solve(design.T @ design, design.T @ y_g)
            terms.append(y_g.mean() - (X_g.mean(axis=0) - x_bar) @ coef[1:])
        assert ate_ols(sample).estimate == pytest.approx(terms[0] - terms[1], abs=1e-10)

    def test_refuses_high_dimension(self):
        """Test OlsNotApplicableError when p >= min(n_A, n_B)"""
        sample = make_sparse_sample(n=40, p=25)
        with pytest.raises(OlsNotApplicableError, match="Lasso"):
            ate_ols(sample)

    def test_rank_deficiency_wrapped(self):
        """Test rank-deficient group designs surface as OlsNotApplicableError"""
        base = make_sparse_sample(n=40, p=3)
        X = np.column_stack([base.covariates, base.covariates[:, 0]])
        sample = ExperimentSample(X, base.assignment, base.observed)
        with pytest.raises(OlsNotApplicableError):
            ate_ols(sample)


class TestLassoEstimators:
    """Test cv(Lasso) and cv(Lasso+OLS)"""

    def test_huge_pinned_lambda_reverts_to_unadjusted(self, sparse_sample):
        """Test a pinned grid above lambda_max gives the unadjusted estimate"""
        tuning = TuningConfig(folds=5, fixed_lambdas=(1e6,))
        report = ate_lasso(sparse_sample, tuning)
        unadjusted = ate_unadjusted(sparse_sample)
        assert report.estimate == pytest.approx(unadjusted.estimate)
        assert report.sigma2_hat == pytest.approx(unadjusted.sigma2_hat)
        assert report.selected_treated == 0
        assert report.selected_control == 0

    def test_null_grid_reverts_to_unadjusted(self, sparse_sample):
        """Test the [lambda_max] grid selects nothing"""
        report = ate_lasso(sparse_sample, TuningConfig(folds=5, null_grid=True))
        assert report.estimate == pytest.approx(ate_unadjusted(sparse_sample).estimate)

    def test_lasso_reduces_variance(self, sparse_sample):
        """Test cv(Lasso) variance estimate below the unadjusted one"""
        report = ate_lasso(sparse_sample, TuningConfig(folds=5, n_lambda=30))
        assert report.method == "cv_lasso"
        assert report.sigma2_hat < ate_unadjusted(sparse_sample).sigma2_hat
        assert report.selected_treated >= 2
        assert {"x1", "x2"} <= set(report.selected_treated_names)

    def test_lasso_ols_keeps_true_covariates(self, sparse_sample):
        """Test the refit support contains the two signal covariates"""
        refit = ate_lasso_ols(sparse_sample, TuningConfig(folds=5, n_lambda=30))
        assert refit.method == "cv_lasso_ols"
        assert {"x1", "x2"} <= set(refit.selected_treated_names)
        assert refit.selected_treated == len(refit.selected_treated_names)
        assert refit.lambda_treated is not None
        assert refit.refit_fallback is False

    def test_full_support_refit_equals_ols(self, sparse_sample):
        """Test a Lasso support covering every covariate reproduces ate_ols"""
        tuning = TuningConfig(folds=5, fixed_lambdas=(1e-8,))
        report = ate_lasso_ols(sparse_sample, tuning)
        ols = ate_ols(sparse_sample)
        assert report.selected_treated == sparse_sample.p
        assert report.selected_control == sparse_sample.p
        assert report.estimate == pytest.approx(ols.estimate, abs=1e-10)
        assert report.sigma2_hat == pytest.approx(ols.sigma2_hat, rel=1e-10)

    def test_deterministic_given_seed(self, sparse_sample):
        """Test identical seed gives identical reports"""
        tuning = TuningConfig(folds=5, n_lambda=20, seed=3)
        a = ate_lasso(sparse_sample, tuning)
        b = ate_lasso(sparse_sample, tuning)
        assert a.estimate == b.estimate
        assert a.sigma2_hat == b.sigma2_hat

    def test_group_smaller_than_folds(self, toy_sample):
        """Test GroupSizeError when n_g < K"""
        with pytest.raises(GroupSizeError):
            ate_lasso(toy_sample, TuningConfig(folds=10))

    def test_full_refit_fallback_flagged(self, sparse_sample, mocker):
        """Test a failed full-group refit keeps the Lasso fit and flags it"""
        mocker.patch(
            "app.models.ate_estimators.fit_ols", side_effect=RefitError("ill-posed")
        )
        report = ate_lasso_ols(sparse_sample, TuningConfig(folds=5, n_lambda=20))
        assert report.refit_fallback is True


class TestAteEstimator:
    """Test the orchestrator running several methods"""

    def test_all_methods_in_order(self, sparse_sample):
        """Test one report per method in request order"""
        estimator = AteEstimator(TuningConfig(folds=5, n_lambda=20))
        reports, cv = estimator.estimate_with_cv(sparse_sample, list(reversed(METHODS)))
        assert [r.method for r in reports] == list(reversed(METHODS))
        assert all(isinstance(r, AteReport) for r in reports)
        assert set(cv) == {"treated", "control"}
        assert set(cv["treated"]) == {"lasso", "lasso_ols"}

    def test_shared_cv_matches_single_method(self, sparse_sample):
        """Test running both Lasso methods together gives the same cv(Lasso)"""
        tuning = TuningConfig(folds=5, n_lambda=20)
        together = AteEstimator(tuning).estimate(sparse_sample, ["cv_lasso", "cv_lasso_ols"])
        alone = ate_lasso(sparse_sample, tuning)
        assert together[0].estimate == pytest.approx(alone.estimate)

    def test_no_cv_without_lasso(self, sparse_sample):
        """Test that non-Lasso methods produce no CV results"""
        reports, cv = AteEstimator().estimate_with_cv(sparse_sample, ["unadjusted"])
        assert len(reports) == 1
        assert cv == {}

    def test_unknown_method(self, sparse_sample):
        """Test method validation"""
        with pytest.raises(ValidationError):
            AteEstimator().estimate(sparse_sample, ["ridge"])

    def test_invalid_ci_level(self):
        """Test the constructor validates the confidence level"""
        with pytest.raises(ValidationError):
            AteEstimator(ci_level=1.5)

    def test_ci_level_propagates(self, sparse_sample):
        """Test narrower intervals at lower levels"""
        wide = AteEstimator(ci_level=0.95).estimate(sparse_sample, ["unadjusted"])[0]
        narrow = AteEstimator(ci_level=0.8).estimate(sparse_sample, ["unadjusted"])[0]
        assert narrow.ci_length < wide.ci_length
        assert narrow.ci_level == 0.8
