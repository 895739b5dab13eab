"""
Plain-text tables for the CLI --table flag
"""

from typing import Any, List, Sequence

import pandas as pd

from app.models.ate_estimators import AteReport
from app.models.diagnostics import DiagnosticsReport, support_names
from app.models.simulation import MonteCarloSummary

_FLOAT_FORMAT = "{:.4f}".format


def _render(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False, float_format=_FLOAT_FORMAT, na_rep="-") + "\n"


def _or_none(value: Any) -> Any:
    return value if value is not None else float("nan")


def estimate_table(reports: Sequence[AteReport]) -> str:
    """One row per method: estimate, sigma_hat, CI and selected counts"""
    rows = [
        {
            "method": r.method,
            "ATE": r.estimate,
            "sigma_hat": r.sigma2_hat**0.5,
            "SE": r.standard_error,
            "CI low": r.ci[0],
            "CI high": r.ci[1],
            "CI length": r.ci_length,
            "selected A": _or_none(r.selected_treated),
            "selected B": _or_none(r.selected_control),
        }
        for r in reports
    ]
    return _render(pd.DataFrame(rows))


def simulation_table(summary: MonteCarloSummary) -> str:
    """Bias/SD/RMSE, coverage and CI length, and selection counts per method"""
    rows: List[dict] = []
    for name, s in summary.methods.items():
        rows.append(
            {
                "method": name,
                "bias": _or_none(s.bias),
                "SD": _or_none(s.sd),
                "RMSE": _or_none(s.rmse),
                "coverage": _or_none(s.coverage),
                "CI length": _or_none(s.mean_ci_length),
                "SE/SD": _or_none(s.se_to_sd_ratio),
                "selected A": _or_none(s.mean_selected_treated),
                "selected B": _or_none(s.mean_selected_control),
                "failures": s.failures,
            }
        )
    header = (
        f"true ATE {summary.true_ate:.4f}, {summary.config.replications} replications, "
        f"n={summary.config.n} p={summary.config.p} n_A={summary.config.n_A}\n"
    )
    return header + _render(pd.DataFrame(rows))


def diagnostics_table(report: DiagnosticsReport) -> str:
    conditions = report.conditions
    rows = [
        {
            "condition": "fourth moment",
            "value": report.max_fourth_moment,
            "threshold": report.settings.fourth_moment_threshold,
            "status": conditions["fourth_moment"],
        },
        {
            "condition": "scaling",
            "value": _or_none(report.scaling_stat),
            "threshold": report.settings.scaling_threshold,
            "status": conditions["scaling"],
        },
        {
            "condition": "sub-Gram min eigenvalue",
            "value": (
                report.gram_eigs_on_support[0]
                if report.gram_eigs_on_support is not None
                else float("nan")
            ),
            "threshold": 0.0,
            "status": conditions["sub_gram"],
        },
    ]
    lines = [_render(pd.DataFrame(rows))]
    lines.append(f"delta_n_hat: {report.delta_n_hat:.4f}\n")
    lines.append(f"p_A: {report.p_A:.4f}  tau: {report.tau:.4f}\n")
    names = support_names(report)
    lines.append(f"support ({len(names)}): {', '.join(names) or '-'}\n")
    if report.flagged_columns:
        lines.append(f"heavy-tailed columns: {', '.join(report.flagged_columns)}\n")
    return "".join(lines)
