"""
Average treatment effect estimators for completely randomized experiments

Unadjusted difference in means, OLS adjustment, cv(Lasso) and
cv(Lasso+OLS) adjustment, with Neyman-type conservative variance
estimates and normal confidence intervals.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.models.cross_validation import (
    CvResult,
    SolverSettings,
    cross_validate,
)
from app.models.errors import (
    EstimationError,
    GroupSizeError,
    OlsNotApplicableError,
    VarianceError,
)
from app.models.lasso_solver import (
    DEFAULT_KKT_TOL,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    AdjustmentFit,
    CenteredProblem,
    LambdaGrid,
    fit_ols,
    lambda_grid,
    null_fit,
)
from app.models.population import ExperimentSample
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

METHODS = ("unadjusted", "ols", "cv_lasso", "cv_lasso_ols")


@dataclass(frozen=True)
class TuningConfig:
    """Lambda grid and cross-validation settings shared by both groups"""

    folds: int = 10
    seed: int = 0
    n_lambda: int = 100
    lambda_ratio: Optional[float] = None
    fixed_lambdas: Optional[Tuple[float, ...]] = None
    null_grid: bool = False
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    kkt_tol: float = DEFAULT_KKT_TOL
    max_workers: int = 1

    @property
    def solver(self) -> SolverSettings:
        return SolverSettings(self.tol, self.max_iter, self.kkt_tol)

    def with_seed(self, seed: int) -> "TuningConfig":
        return dataclasses.replace(self, seed=int(seed))


@dataclass(frozen=True)
class AteReport:
    """Point estimate, variance estimate and confidence interval"""

    method: str
    estimate: float
    sigma2_hat: float
    ci_level: float
    ci: Tuple[float, float]
    n: int
    df_adjusted: bool = True
    selected_treated: Optional[int] = None
    selected_control: Optional[int] = None
    selected_treated_names: Optional[Tuple[str, ...]] = None
    selected_control_names: Optional[Tuple[str, ...]] = None
    lambda_treated: Optional[float] = None
    lambda_control: Optional[float] = None
    refit_fallback: bool = False

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.sigma2_hat / self.n)

    @property
    def ci_length(self) -> float:
        return self.ci[1] - self.ci[0]

    def covers(self, value: float) -> bool:
        return self.ci[0] <= value <= self.ci[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "estimate": self.estimate,
            "sigma2_hat": self.sigma2_hat,
            "standard_error": self.standard_error,
            "ci_level": self.ci_level,
            "ci": [self.ci[0], self.ci[1]],
            "n": self.n,
            "df_adjusted": self.df_adjusted,
            "selected_treated": self.selected_treated,
            "selected_control": self.selected_control,
            "selected_treated_names": (
                list(self.selected_treated_names)
                if self.selected_treated_names is not None
                else None
            ),
            "selected_control_names": (
                list(self.selected_control_names)
                if self.selected_control_names is not None
                else None
            ),
            "lambda_treated": self.lambda_treated,
            "lambda_control": self.lambda_control,
            "refit_fallback": self.refit_fallback,
        }


def normal_quantile(level: float) -> float:
    """Two-sided standard normal quantile z_{(1+level)/2}"""
    if not 0 < level < 1:
        raise ValidationError("Confidence level must be in (0, 1)")
    return float(stats.norm.ppf((1 + level) / 2))


def confidence_interval(
    estimate: float, sigma2_hat: float, n: int, level: float = 0.95
) -> Tuple[float, float]:
    """estimate -/+ z * sqrt(sigma2_hat / n)"""
    if sigma2_hat < 0:
        raise ValidationError("Variance estimate must be non-negative")
    half_width = normal_quantile(level) * math.sqrt(sigma2_hat / n)
    return (estimate - half_width, estimate + half_width)


def _require_groups(sample: ExperimentSample, minimum: int = 2) -> None:
    if sample.n_treated < minimum or sample.n_control < minimum:
        raise GroupSizeError(
            f"Both groups need at least {minimum} units "
            f"(treated={sample.n_treated}, control={sample.n_control})"
        )


def _report(
    method: str,
    sample: ExperimentSample,
    estimate: float,
    sigma2_hat: float,
    ci_level: float,
    df_adjust: bool,
    **selection: Any,
) -> AteReport:
    return AteReport(
        method=method,
        estimate=float(estimate),
        sigma2_hat=float(sigma2_hat),
        ci_level=ci_level,
        ci=confidence_interval(estimate, sigma2_hat, sample.n, ci_level),
        n=sample.n,
        df_adjusted=df_adjust,
        **selection,
    )


def _check_fit(sample: ExperimentSample, fit: AdjustmentFit) -> None:
    if fit.beta.shape != (sample.p,):
        raise ValidationError(
            f"Adjustment vector has length {fit.beta.shape[0]}, "
            f"expected {sample.p}"
        )


def ate_adjusted(
    sample: ExperimentSample, fit_a: AdjustmentFit, fit_b: AdjustmentFit
) -> float:
    """
    Regression-adjusted difference in means

    [abar_A - (xbar_A - xbar)^T beta_a] - [bbar_B - (xbar_B - xbar)^T beta_b]
    with xbar the full-sample covariate mean.
    """
    _check_fit(sample, fit_a)
    _check_fit(sample, fit_b)
    mask = sample.treated_mask
    x_bar = sample.covariates.mean(axis=0)
    treated_term = sample.observed[mask].mean() - (
        sample.covariates[mask].mean(axis=0) - x_bar
    ) @ fit_a.beta
    control_term = sample.observed[~mask].mean() - (
        sample.covariates[~mask].mean(axis=0) - x_bar
    ) @ fit_b.beta
    return float(treated_term - control_term)


def _residual_sum_of_squares(
    X: np.ndarray, y: np.ndarray, beta: np.ndarray
) -> float:
    residual = y - y.mean() - (X - X.mean(axis=0)) @ beta
    return float(residual @ residual)


def neyman_variance_adjusted(
    sample: ExperimentSample,
    fit_a: AdjustmentFit,
    fit_b: AdjustmentFit,
    df_adjust: bool = True,
) -> float:
    """
    Conservative variance estimate for sqrt(n) * (ATE_hat - ATE)

    (n / n_A) * sigma2_e_a + (n / n_B) * sigma2_e_b, where each residual
    variance divides by n_g - df_g (df = selected + 1) or, without the
    degrees-of-freedom adjustment, by n_g.

    Raises:
        VarianceError: If df_adjust and a group has n_g <= df
    """
    _check_fit(sample, fit_a)
    _check_fit(sample, fit_b)
    total = 0.0
    for treated, fit in ((True, fit_a), (False, fit_b)):
        X_g, y_g = sample.group(treated)
        n_g = y_g.shape[0]
        denominator = n_g - fit.df if df_adjust else n_g
        if denominator <= 0:
            label = "treated" if treated else "control"
            raise VarianceError(
                f"The {label} group has {n_g} units but {fit.df} degrees of "
                "freedom; use the variance without degrees-of-freedom "
                "adjustment (df_adjust=False)"
            )
        rss = _residual_sum_of_squares(X_g, y_g, np.asarray(fit.beta))
        total += sample.n / n_g * rss / denominator
    return float(total)


def zero_adjustment(sample: ExperimentSample, treated: bool) -> AdjustmentFit:
    """All-zero adjustment vector for one group"""
    return null_fit(*sample.group(treated))


def ate_unadjusted(sample: ExperimentSample, ci_level: float = 0.95) -> AteReport:
    """
    Difference in group means with the Neyman conservative variance

    Evaluated as the adjusted estimator with zero adjustment vectors, whose
    df = 1 residual variance is the within-group sample variance.

    Raises:
        GroupSizeError: If either group has fewer than 2 units
    """
    _require_groups(sample)
    fit_a = zero_adjustment(sample, True)
    fit_b = zero_adjustment(sample, False)
    estimate = ate_adjusted(sample, fit_a, fit_b)
    sigma2 = neyman_variance_adjusted(sample, fit_a, fit_b, df_adjust=True)
    return _report("unadjusted", sample, estimate, sigma2, ci_level, True)


def ate_ols(
    sample: ExperimentSample, ci_level: float = 0.95, df_adjust: bool = True
) -> AteReport:
    """
    Separate OLS regressions per group on all covariates

    Raises:
        OlsNotApplicableError: If p >= min(n_A, n_B) or a group design is
            rank deficient
    """
    _require_groups(sample)
    if sample.p >= min(sample.n_treated, sample.n_control):
        raise OlsNotApplicableError(
            f"OLS adjustment needs p < min(n_A, n_B); got p={sample.p}, "
            f"n_A={sample.n_treated}, n_B={sample.n_control}. "
            "Use the Lasso adjustment instead"
        )
    try:
        fit_a = fit_ols(*sample.group(True))
        fit_b = fit_ols(*sample.group(False))
    except EstimationError as e:
        raise OlsNotApplicableError(
            f"OLS adjustment failed ({e}); use the Lasso adjustment instead"
        ) from e
    estimate = ate_adjusted(sample, fit_a, fit_b)
    sigma2 = neyman_variance_adjusted(sample, fit_a, fit_b, df_adjust)
    return _report("ols", sample, estimate, sigma2, ci_level, df_adjust)


@dataclass(frozen=True, eq=False)
class GroupSelection:
    """Cross-validated adjustment fits for one group"""

    grid: LambdaGrid
    cv: Dict[str, CvResult]
    fits: Dict[str, AdjustmentFit]


class AteEstimator:
    """
    Runs the requested estimators on one sample

    The fold paths and the full-group path are computed once per group and
    shared by cv(Lasso) and cv(Lasso+OLS).
    """

    def __init__(
        self,
        tuning: Optional[TuningConfig] = None,
        ci_level: float = 0.95,
        df_adjust: bool = True,
    ) -> None:
        self.tuning = tuning or TuningConfig()
        self.ci_level = ci_level
        self.df_adjust = df_adjust
        normal_quantile(ci_level)

    def _grid(self, X_g: np.ndarray, y_g: np.ndarray) -> LambdaGrid:
        tuning = self.tuning
        if tuning.fixed_lambdas:
            return LambdaGrid.pinned(tuning.fixed_lambdas)
        if tuning.null_grid:
            lambda_max = CenteredProblem(X_g, y_g).lambda_max
            return LambdaGrid([lambda_max if lambda_max > 0 else 1.0])
        return lambda_grid(X_g, y_g, tuning.n_lambda, tuning.lambda_ratio)

    def select_group(
        self, X_g: np.ndarray, y_g: np.ndarray, modes: Sequence[str], seed: int
    ) -> GroupSelection:
        """
        Cross-validate lambda for each mode and refit on the whole group

        cv(Lasso) keeps the full-group Lasso at its optimum; cv(Lasso+OLS)
        refits OLS on the full-group Lasso support at its own optimum,
        falling back to the Lasso coefficients when the refit is ill-posed.
        """
        tuning = self.tuning
        if y_g.shape[0] < tuning.folds:
            raise GroupSizeError(
                f"Group of {y_g.shape[0]} units is smaller than {tuning.folds} folds"
            )
        grid = self._grid(X_g, y_g)
        cv = cross_validate(
            X_g,
            y_g,
            grid,
            tuning.folds,
            seed,
            modes,
            tuning.solver,
            tuning.max_workers,
        )
        last = max(result.optimal_index for result in cv.values())
        problem = CenteredProblem(X_g, y_g)
        path = problem.path(
            LambdaGrid(grid.values[: last + 1]),
            tuning.tol,
            tuning.max_iter,
            tuning.kkt_tol,
        )

        fits: Dict[str, AdjustmentFit] = {}
        if "lasso" in cv:
            fits["lasso"] = path[cv["lasso"].optimal_index]
        if "lasso_ols" in cv:
            lasso_fit = path[cv["lasso_ols"].optimal_index]
            try:
                refit = fit_ols(X_g, y_g, lasso_fit.support)
                fits["lasso_ols"] = dataclasses.replace(
                    refit, lambda_value=lasso_fit.lambda_value
                )
            except EstimationError as e:
                logger.warning(
                    "Full-group Lasso+OLS refit failed, using Lasso coefficients: %s",
                    e,
                    extra={"support_size": len(lasso_fit.support)},
                )
                fits["lasso_ols"] = dataclasses.replace(
                    lasso_fit, refit_fallback=True
                )
        return GroupSelection(grid=grid, cv=cv, fits=fits)

    def _lasso_reports(
        self, sample: ExperimentSample, modes: Sequence[str]
    ) -> Tuple[Dict[str, AteReport], GroupSelection, GroupSelection]:
        _require_groups(sample)
        treated = self.select_group(*sample.group(True), modes, self.tuning.seed)
        control = self.select_group(
            *sample.group(False), modes, self.tuning.seed + 1
        )
        names = sample.column_names()
        reports: Dict[str, AteReport] = {}
        for mode in modes:
            fit_a, fit_b = treated.fits[mode], control.fits[mode]
            method = "cv_lasso" if mode == "lasso" else "cv_lasso_ols"
            reports[method] = _report(
                method,
                sample,
                ate_adjusted(sample, fit_a, fit_b),
                neyman_variance_adjusted(sample, fit_a, fit_b, self.df_adjust),
                self.ci_level,
                self.df_adjust,
                selected_treated=fit_a.selected_count,
                selected_control=fit_b.selected_count,
                selected_treated_names=tuple(names[j] for j in fit_a.support),
                selected_control_names=tuple(names[j] for j in fit_b.support),
                lambda_treated=fit_a.lambda_value,
                lambda_control=fit_b.lambda_value,
                refit_fallback=fit_a.refit_fallback or fit_b.refit_fallback,
            )
        return reports, treated, control

    def lasso(self, sample: ExperimentSample) -> AteReport:
        return self._lasso_reports(sample, ("lasso",))[0]["cv_lasso"]

    def lasso_ols(self, sample: ExperimentSample) -> AteReport:
        return self._lasso_reports(sample, ("lasso_ols",))[0]["cv_lasso_ols"]

    def estimate_with_cv(
        self, sample: ExperimentSample, methods: Sequence[str] = METHODS
    ) -> Tuple[List[AteReport], Dict[str, Dict[str, CvResult]]]:
        """
        Run each requested method, in the order given

        Returns:
            (reports, cv) where cv maps "treated"/"control" to the CvResult
            of each Lasso mode that ran (empty without Lasso methods)

        Raises:
            ValidationError: For unknown method names
            EstimationError: From the first failing estimator
        """
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValidationError(
                f"Unknown methods {unknown}; choose from {', '.join(METHODS)}"
            )
        modes = [
            mode
            for mode, method in (("lasso", "cv_lasso"), ("lasso_ols", "cv_lasso_ols"))
            if method in methods
        ]
        lasso_reports: Dict[str, AteReport] = {}
        cv: Dict[str, Dict[str, CvResult]] = {}
        if modes:
            lasso_reports, treated, control = self._lasso_reports(sample, modes)
            cv = {"treated": dict(treated.cv), "control": dict(control.cv)}
        reports: List[AteReport] = []
        for method in methods:
            if method == "unadjusted":
                reports.append(ate_unadjusted(sample, self.ci_level))
            elif method == "ols":
                reports.append(ate_ols(sample, self.ci_level, self.df_adjust))
            else:
                reports.append(lasso_reports[method])
        return reports, cv

    def estimate(
        self, sample: ExperimentSample, methods: Sequence[str] = METHODS
    ) -> List[AteReport]:
        return self.estimate_with_cv(sample, methods)[0]


def ate_lasso(
    sample: ExperimentSample,
    tuning: Optional[TuningConfig] = None,
    ci_level: float = 0.95,
    df_adjust: bool = True,
) -> AteReport:
    """cv(Lasso) adjusted estimate with df = selected + 1 per group"""
    return AteEstimator(tuning, ci_level, df_adjust).lasso(sample)


def ate_lasso_ols(
    sample: ExperimentSample,
    tuning: Optional[TuningConfig] = None,
    ci_level: float = 0.95,
    df_adjust: bool = True,
) -> AteReport:
    """cv(Lasso+OLS) adjusted estimate: Lasso support, OLS coefficients"""
    return AteEstimator(tuning, ci_level, df_adjust).lasso_ols(sample)
