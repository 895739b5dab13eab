"""
Shared estimation service for the CLI and the HTTP API
Validates options and dispatches to the numerical core
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type

import pandas as pd

from app.config import Config
from app.models.ate_estimators import METHODS, AteEstimator, AteReport, TuningConfig
from app.models.cross_validation import CvResult
from app.models.design_matrix import DesignMatrix, FeaturizeOptions, build_design_matrix
from app.models.diagnostics import DiagnosticsReport, DiagnosticsSettings, diagnose
from app.models.population import ExperimentSample, Population
from app.models.simulation import (
    MonteCarloSummary,
    SimulationConfig,
    generate_population,
    run_monte_carlo,
)
from app.services.logging_service import log_function_call
from app.services.service_container import get_container, register_services
from app.utils.data_io import DatasetMeta, raw_covariates
from app.utils.schemas import (
    DiagnoseOptionsSchema,
    EstimateOptionsSchema,
    FeaturizeOptionsSchema,
    load_simulation_config,
    load_with,
)
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)


@dataclass
class EstimationResult:
    reports: List[AteReport]
    cv: Dict[str, Dict[str, CvResult]] = field(default_factory=dict)
    emit_cv: bool = False

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"reports": [r.to_dict() for r in self.reports]}
        if self.emit_cv:
            result["cv"] = {
                group: {mode: cv.to_dict() for mode, cv in modes.items()}
                for group, modes in self.cv.items()
            }
        return result


class EstimationService:
    """Centralized service for estimation, featurization, diagnostics and simulation"""

    def __init__(self, settings: Type[Config] = Config) -> None:
        self.settings = settings

    def default_methods(self, sample: ExperimentSample) -> List[str]:
        """All methods, leaving out OLS when p >= min(n_A, n_B)"""
        if sample.p >= min(sample.n_treated, sample.n_control):
            logger.info(
                "OLS adjustment skipped by default",
                extra={"p": sample.p, "n_treated": sample.n_treated},
            )
            return [m for m in METHODS if m != "ols"]
        return list(METHODS)

    @log_function_call()
    def estimate(
        self, sample: ExperimentSample, options: Mapping[str, Any]
    ) -> EstimationResult:
        """
        Run the requested estimators on an observed experiment

        Args:
            sample: Observed experiment
            options: methods, folds, ci_level, seed, df_adjust, n_lambda,
                lambdas (pins both grids), emit_cv

        Returns:
            EstimationResult with one AteReport per method

        Raises:
            ValidationError: If options are invalid
            EstimationError: If an estimator fails
        """
        validated = load_with(EstimateOptionsSchema, options)
        methods = validated.get("methods") or self.default_methods(sample)
        lambdas = validated.get("lambdas")
        tuning = TuningConfig(
            folds=validated["folds"],
            seed=validated["seed"],
            n_lambda=validated["n_lambda"],
            fixed_lambdas=tuple(lambdas) if lambdas else None,
            tol=self.settings.SOLVER_TOL,
            max_iter=self.settings.SOLVER_MAX_SWEEPS,
            kkt_tol=self.settings.SOLVER_KKT_TOL,
        )
        estimator = AteEstimator(tuning, validated["ci_level"], validated["df_adjust"])
        reports, cv = estimator.estimate_with_cv(sample, methods)
        return EstimationResult(reports, cv, validated["emit_cv"])

    @log_function_call()
    def featurize(
        self, frame: pd.DataFrame, meta: DatasetMeta, options: Mapping[str, Any]
    ) -> DesignMatrix:
        validated = load_with(FeaturizeOptionsSchema, options)
        raw, flags = raw_covariates(frame, meta)
        return build_design_matrix(raw, flags, FeaturizeOptions(**validated))

    @log_function_call()
    def diagnose(
        self,
        sample: ExperimentSample,
        options: Mapping[str, Any],
        max_workers: int = 1,
    ) -> DiagnosticsReport:
        validated = load_with(DiagnoseOptionsSchema, options)
        tuning = TuningConfig(folds=validated["folds"], seed=validated["seed"])
        settings = DiagnosticsSettings(
            resamples=validated["resamples"],
            threshold=validated["threshold"],
            fourth_moment_threshold=validated["fourth_moment_threshold"],
            scaling_threshold=validated["scaling_threshold"],
            max_workers=max_workers,
        )
        return diagnose(sample, tuning, settings)

    def simulation_config(
        self,
        payload: Optional[Mapping[str, Any]] = None,
        preset: Optional[str] = None,
        **overrides: Any,
    ) -> SimulationConfig:
        """
        Build a SimulationConfig from a preset and/or a payload

        Payload fields override the preset; keyword overrides win over both.

        Raises:
            ValidationError: If the merged config is invalid
        """
        base: Dict[str, Any] = {
            "replications": self.settings.DEFAULT_REPLICATIONS,
            "bootstrap_resamples": self.settings.MONTE_CARLO_BOOTSTRAP,
        }
        if preset:
            try:
                base.update(get_container().get_preset(preset))
            except ValueError as e:
                raise ValidationError(str(e)) from e
        base.update(dict(payload or {}))
        return load_simulation_config(base, **overrides)

    @log_function_call()
    def simulate(self, config: SimulationConfig) -> Tuple[Population, MonteCarloSummary]:
        population = generate_population(config)
        return population, run_monte_carlo(population, config)


def get_estimation_service() -> EstimationService:
    """Get the estimation service registered with the global container"""
    register_services()
    service: EstimationService = get_container().get_service("estimation_service")
    return service
