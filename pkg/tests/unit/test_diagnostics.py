"""
Unit tests for the regularity-condition diagnostics
"""

import math

import numpy as np
import pytest

from app.models.ate_estimators import TuningConfig
from app.models.diagnostics import (
    NOT_ESTIMABLE,
    DiagnosticsSettings,
    bootstrap_support,
    diagnose,
    estimate_delta_n,
    estimate_residuals,
    fourth_moments,
    gram_eigenvalues,
    residual_covariances,
    scaling_statistic,
    support_names,
)
from app.models.errors import DiagnosticsError, RefitError
from app.utils.validation import ValidationError

FAST_TUNING = TuningConfig(folds=3, n_lambda=10, seed=1)

class TestFourthMoments:
    """Test the per-column moment check"""

    def test_known_values(self):
        """Test centered fourth moments on a hand-checkable matrix"""
        X = np.array([[-1.0, 0.0], [1.0, 0.0], [-1.0, 2.0], [1.0, 2.0]])
        np.testing.assert_allclose(fourth_moments(X), [1.0, 1.0])

    def test_outlier_dominates(self):
        """Test a single large value inflates the moment"""
        column = np.zeros(10)
        column[0] = 10.0
        moments = fourth_moments(column.reshape(-1, 1))
        assert moments[0] > 100.0

    def test_accepts_sample(self, sparse_sample):
        """Test an ExperimentSample is read through its covariates"""
        assert fourth_moments(sparse_sample).shape == (10,)

    def test_single_row_rejected(self):
        """Test at least two rows"""
        with pytest.raises(ValidationError):
            fourth_moments(np.ones((1, 3)))

class TestBootstrapSupport:
    """Test bootstrap selection frequencies"""

    def test_signal_covariates_selected(self, sparse_sample):
        """Test x1 and x2 exceed the threshold"""
        result = bootstrap_support(sparse_sample, "treated", B=8, tuning=FAST_TUNING)
        assert {0, 1} <= set(result.support)
        assert result.frequencies.shape == (10,)
        assert result.frequencies[0] == pytest.approx(1.0)
        assert result.failures == 0
        assert result.to_dict()["resamples"] == 8

    def test_deterministic_and_thread_independent(self, sparse_sample):
        """Test serial and threaded resampling agree"""
        serial = bootstrap_support(sparse_sample, "control", B=6, tuning=FAST_TUNING)
        threaded = bootstrap_support(
            sparse_sample, "control", B=6, tuning=FAST_TUNING, max_workers=3
        )
        assert serial.support == threaded.support
        np.testing.assert_array_equal(serial.frequencies, threaded.frequencies)

    def test_failure_rate_exceeded(self, sparse_sample, mocker):
        """Test DiagnosticsError when too many resamples fail"""
        mocker.patch(
            "app.models.diagnostics.AteEstimator.select_group",
            side_effect=RefitError("ill-posed"),
        )
        with pytest.raises(DiagnosticsError, match="treated"):
            bootstrap_support(sparse_sample, "treated", B=4, tuning=FAST_TUNING)

    @pytest.mark.parametrize(
        "kwargs",
        [{"group": "both"}, {"B": 0}, {"threshold": 1.0}],
    )
    def test_invalid_arguments(self, sparse_sample, kwargs):
        """Test argument validation"""
        arguments = {"group": "treated", "B": 2, "threshold": 0.5}
        arguments.update(kwargs)
        with pytest.raises(ValidationError):
            bootstrap_support(sparse_sample, tuning=FAST_TUNING, **arguments)

class TestResiduals:
    """Test residual, delta_n and covariance estimates"""

    def test_group_sizes(self, sparse_sample):
        """Test one residual per unit in each group"""
        residuals = estimate_residuals(sparse_sample, [0, 1])
        assert residuals.treated.shape == (sparse_sample.n_treated,)
        assert residuals.control.shape == (sparse_sample.n - sparse_sample.n_treated,)

    def test_included_columns_orthogonal(self, sparse_sample):
        """Test OLS residuals have zero covariance with the regressors"""
        residuals = estimate_residuals(sparse_sample, [0, 1])
        cov_a, cov_b = residual_covariances(sparse_sample, residuals)
        np.testing.assert_allclose(cov_a[:2], 0.0, atol=1e-10)
        np.testing.assert_allclose(cov_b[:2], 0.0, atol=1e-10)

    def test_true_support_shrinks_delta_n(self, sparse_sample):
        """Test omitting a signal covariate leaves a larger maximal covariance"""
        full = estimate_delta_n(sparse_sample, estimate_residuals(sparse_sample, [0, 1]))
        partial = estimate_delta_n(sparse_sample, estimate_residuals(sparse_sample, [0]))
        assert full < partial
        assert full >= 0.0

    def test_delta_n_ignores_outcome_shift(self, sparse_sample):
        """Test adding a constant to every outcome leaves delta_n unchanged"""
        shifted = sparse_sample.with_observed(sparse_sample.observed + 25.0)
        base = estimate_delta_n(sparse_sample, estimate_residuals(sparse_sample, [0]))
        moved = estimate_delta_n(shifted, estimate_residuals(shifted, [0]))
        assert moved == pytest.approx(base, abs=1e-10)

    def test_empty_support_residuals_are_centered_outcomes(self, sparse_sample):
        """Test S = {} regresses on the intercept only"""
        residuals = estimate_residuals(sparse_sample, [])
        _, y_a = sparse_sample.group(True)
        np.testing.assert_allclose(residuals.treated, y_a - y_a.mean())
        assert residuals.second_moments[0] == pytest.approx(np.var(y_a))

    def test_separate_control_support(self, sparse_sample):
        """Test the control group can use its own support"""
        same = estimate_residuals(sparse_sample, [0, 1])
        split = estimate_residuals(sparse_sample, [0, 1], [])
        np.testing.assert_allclose(same.treated, split.treated)
        assert not np.allclose(same.control, split.control)

class TestScalingAndGram:
    """Test the scaling statistic and sub-Gram eigenvalues"""

    def test_scaling_statistic(self):
        """Test s log(p) / sqrt(n)"""
        assert scaling_statistic(4, 100, 400) == pytest.approx(4 * math.log(100) / 20)
        assert scaling_statistic(0, 10, 50) == 0.0

    def test_scaling_statistic_needs_two_columns(self):
        """Test log(p) with p < 2 is rejected"""
        with pytest.raises(ValidationError):
            scaling_statistic(1, 1, 10)

    def test_orthogonal_columns(self):
        """Test eigenvalues of an orthogonal centered design"""
        X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        low, high = gram_eigenvalues(X, [0, 1])
        assert low == pytest.approx(1.0)
        assert high == pytest.approx(1.0)

    def test_collinear_support_has_zero_eigenvalue(self):
        """Test a duplicated column gives a zero smallest eigenvalue"""
        column = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        low, high = gram_eigenvalues(np.column_stack([column, column]), [0, 1])
        assert low == pytest.approx(0.0, abs=1e-10)
        assert high == pytest.approx(2 * np.var(column))

    def test_three_by_three_spectrum(self):
        """Test a sub-Gram matrix with roots 2 - sqrt(2), 2 and 2 + sqrt(2)"""
        target = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
        # orthonormal columns orthogonal to the ones vector
        basis = np.column_stack(
            [
                np.array([1.0, -1.0, 0.0, 0.0]) / math.sqrt(2),
                np.array([1.0, 1.0, -2.0, 0.0]) / math.sqrt(6),
                np.array([1.0, 1.0, 1.0, -3.0]) / math.sqrt(12),
            ]
        )
        X = 2.0 * basis @ np.linalg.cholesky(target).T
        np.testing.assert_allclose(X.T @ X / 4, target, atol=1e-12)
        low, high = gram_eigenvalues(X, [0, 1, 2])
        assert low == pytest.approx(2 - math.sqrt(2), abs=1e-8)
        assert high == pytest.approx(2 + math.sqrt(2), abs=1e-8)

    def test_empty_support_rejected(self):
        """Test non-empty supports only"""
        with pytest.raises(ValidationError):
            gram_eigenvalues(np.eye(3), [])

class TestDiagnose:
    """Test the full inspection report"""

    @pytest.fixture
    def report(self, sparse_sample):
        return diagnose(sparse_sample, FAST_TUNING, DiagnosticsSettings(resamples=4))

    def test_support_and_statistics(self, report, sparse_sample):
        """Test the union support, scaling and assignment fraction"""
        assert {0, 1} <= set(report.estimated_support)
        assert report.support_size == len(report.estimated_support)
        assert set(report.support_treated) <= set(report.estimated_support)
        assert report.scaling_stat == pytest.approx(
            report.support_size * math.log(10) / math.sqrt(120)
        )
        assert report.p_A == pytest.approx(0.5)
        assert report.tau == pytest.approx(1 / 70)
        assert report.delta_n_hat >= 0.0
        assert support_names(report)[:2] == ["x1", "x2"]

    def test_conditions(self, report):
        """Test Gaussian covariates pass the moment and sub-Gram checks"""
        conditions = report.conditions
        assert set(conditions) == {"fourth_moment", "scaling", "sub_gram"}
        assert conditions["fourth_moment"] == "PASS"
        assert conditions["sub_gram"] == "PASS"
        assert report.flagged_columns == ()

    def test_heavy_tailed_column_flagged(self, sparse_sample):
        """Test a column with a large outlier is flagged by name"""
        X = np.array(sparse_sample.covariates)
        X[0, 9] = 60.0
        sample = sparse_sample.__class__(
            X, sparse_sample.assignment, sparse_sample.observed
        )
        report = diagnose(sample, FAST_TUNING, DiagnosticsSettings(resamples=3))
        assert report.flagged_columns == ("x10",)
        assert report.conditions["fourth_moment"] == "FLAG"

    def test_serialization(self, report):
        """Test to_dict lists the not-estimable constants and the caveat"""
        payload = report.to_dict()
        assert set(payload["not_estimable"]) == set(NOT_ESTIMABLE)
        assert payload["estimated_support_names"][:2] == ["x1", "x2"]
        assert len(payload["fourth_moments"]) == 10
        assert payload["bootstrap_failures"] == {"treated": 0, "control": 0}
        assert payload["notes"]
