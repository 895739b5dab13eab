"""
Unit tests for the plain-text report tables
"""

import numpy as np

from app.models.ate_estimators import AteEstimator, TuningConfig, ate_unadjusted
from app.models.diagnostics import DiagnosticsReport, DiagnosticsSettings
from app.models.simulation import SimulationConfig, generate_population, run_monte_carlo
from app.utils.report_tables import diagnostics_table, estimate_table, simulation_table


def make_report(**overrides):
    fields = dict(
        fourth_moments=np.array([3.0, 45.0]),
        max_fourth_moment=45.0,
        flagged_columns=("income",),
        estimated_support=(0,),
        support_treated=(0,),
        support_control=(),
        support_size=1,
        delta_n_hat=0.0123,
        scaling_stat=0.2,
        residual_second_moments=(1.0, 1.1),
        gram_eigs_on_support=(0.9, 0.9),
        p_A=0.5,
        tau=1 / 70,
        column_names=("age", "income"),
    )
    fields.update(overrides)
    return DiagnosticsReport(**fields)


class TestEstimateTable:
    """Test the estimate table"""

    def test_one_row_per_method(self, toy_sample):
        """Test rows and columns of the estimate table"""
        table = estimate_table([ate_unadjusted(toy_sample)])
        header, row = table.strip().splitlines()
        assert header.split()[:3] == ["method", "ATE", "sigma_hat"]
        assert row.split()[0] == "unadjusted"
        assert "2.5000" in row

    def test_unadjusted_has_no_selection(self, sparse_sample):
        """Test missing selection counts are shown as '-'"""
        reports = AteEstimator(TuningConfig(folds=3, n_lambda=10)).estimate(
            sparse_sample, ["unadjusted", "cv_lasso"]
        )
        lines = estimate_table(reports).strip().splitlines()
        assert lines[1].split()[-1] == "-"
        assert lines[2].split()[-1] != "-"


class TestSimulationTable:
    """Test the Monte Carlo table"""

    def test_header_and_rows(self):
        """Test the design header and one row per method"""
        config = SimulationConfig(
            n=30, p=3, s=1, n_A=15, replications=2, seed=5, methods=("unadjusted",),
            bootstrap_resamples=5,
        )
        summary = run_monte_carlo(generate_population(config), config)
        lines = simulation_table(summary).splitlines()
        assert lines[0].startswith("true ATE")
        assert "2 replications" in lines[0]
        assert "n=30 p=3 n_A=15" in lines[0]
        assert lines[2].split()[0] == "unadjusted"


class TestDiagnosticsTable:
    """Test the diagnostics table"""

    def test_statuses_and_support(self):
        """Test PASS/FLAG rows and support names"""
        text = diagnostics_table(make_report())
        assert "FLAG" in text
        assert "PASS" in text
        assert "support (1): age" in text
        assert "heavy-tailed columns: income" in text
        assert "delta_n_hat: 0.0123" in text

    def test_empty_support(self):
        """Test an empty support without eigenvalues"""
        report = make_report(
            estimated_support=(),
            support_treated=(),
            support_size=0,
            gram_eigs_on_support=None,
            flagged_columns=(),
            settings=DiagnosticsSettings(fourth_moment_threshold=50.0),
        )
        text = diagnostics_table(report)
        assert "support (0): -" in text
        assert "heavy-tailed" not in text
