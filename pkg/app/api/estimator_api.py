"""
ATE estimator API endpoints
JSON surface over the estimation service: estimate, featurize, diagnose
and small Monte Carlo runs
"""

import logging
from typing import Any, Dict, Tuple, Union

import pandas as pd
from flask import Blueprint, Response, current_app, request

from app.models.ate_estimators import METHODS
from app.models.errors import EstimationError
from app.services.estimation_service import get_estimation_service
from app.services.service_container import get_container
from app.utils.api_response import APIResponse
from app.utils.data_io import DatasetMeta, frame_to_csv, frame_to_sample
from app.utils.validation import ValidationError, parse_choice_list

logger = logging.getLogger(__name__)

estimator_bp = Blueprint("estimator", __name__)

ViewResult = Union[Response, Tuple[Response, int]]


@estimator_bp.errorhandler(ValidationError)
@estimator_bp.errorhandler(EstimationError)
def handle_domain_error(error: Exception) -> ViewResult:
    if isinstance(error, EstimationError):
        logger.warning("Estimation failed", extra={"error_type": type(error).__name__})
    return APIResponse.from_exception(error)


def _json_body() -> Dict[str, Any]:
    payload = request.get_json(silent=True)
    if payload is None:
        raise ValidationError("No JSON data provided")
    if not isinstance(payload, dict):
        raise ValidationError("JSON body must be an object")
    return payload


def _options(payload: Dict[str, Any]) -> Dict[str, Any]:
    options = payload.get("options") or {}
    if not isinstance(options, dict):
        raise ValidationError("'options' must be an object")
    if isinstance(options.get("methods"), str):
        options = dict(options)
        options["methods"] = parse_choice_list(options["methods"], METHODS, "methods")
    return options


def _dataset(payload: Dict[str, Any]) -> Tuple[pd.DataFrame, DatasetMeta]:
    """Records-oriented 'data' plus the same 'meta' object the CLI reads from disk"""
    records = payload.get("data")
    if not isinstance(records, list) or not records:
        raise ValidationError("'data' must be a non-empty list of records")
    if not all(isinstance(row, dict) for row in records):
        raise ValidationError("Every entry of 'data' must be an object")
    frame = pd.DataFrame.from_records(records)
    frame.columns = [str(c) for c in frame.columns]
    return frame, DatasetMeta.from_dict(payload.get("meta") or {})


@estimator_bp.route("/estimate", methods=["POST"])
def estimate() -> ViewResult:
    """
    Estimate the ATE with the requested methods

    Expected JSON payload:
    {
        "data": [{"y": 1.2, "t": 1, "x1": 0.3}, ...],
        "meta": {"outcome": "y", "treatment": "t"},
        "options": {"methods": ["unadjusted", "cv_lasso"], "seed": 0}
    }
    """
    payload = _json_body()
    frame, meta = _dataset(payload)
    sample = frame_to_sample(frame, meta)
    result = get_estimation_service().estimate(sample, _options(payload))
    return APIResponse.success(result.to_dict())


@estimator_bp.route("/featurize", methods=["POST"])
def featurize() -> ViewResult:
    payload = _json_body()
    frame, meta = _dataset(payload)
    design = get_estimation_service().featurize(frame, meta, _options(payload))
    return APIResponse.success(
        {
            "rows": design.columns.tolist(),
            "metadata": design.metadata(),
        }
    )


@estimator_bp.route("/diagnose", methods=["POST"])
def diagnose() -> ViewResult:
    """Condition diagnostics; options.seed is required"""
    payload = _json_body()
    frame, meta = _dataset(payload)
    sample = frame_to_sample(frame, meta)
    report = get_estimation_service().diagnose(sample, _options(payload))
    return APIResponse.success(report.to_dict())


@estimator_bp.route("/simulate", methods=["POST"])
def simulate() -> ViewResult:
    """
    Run a small Monte Carlo study

    Expected JSON payload:
    {
        "preset": "smoke",
        "config": {"replications": 10, "seed": 3},
        "format": "json"
    }

    "format": "csv" returns the per-replication records as a CSV download.
    """
    payload = _json_body()
    config_payload = payload.get("config") or {}
    if not isinstance(config_payload, dict):
        raise ValidationError("'config' must be an object")
    preset = payload.get("preset")
    if preset is None and "seed" not in config_payload:
        raise ValidationError(
            "A seed is required", {"seed": ["Missing data for required field."]}
        )

    service = get_estimation_service()
    config = service.simulation_config(config_payload, preset)
    limit = current_app.config["API_MAX_REPLICATIONS"]
    if config.replications > limit:
        raise ValidationError(
            f"At most {limit} replications per request; use the CLI for larger runs",
            {"replications": [f"Must be at most {limit}."]},
        )

    population, summary = service.simulate(config)

    if payload.get("format") == "csv":
        return Response(
            frame_to_csv(summary.records),
            mimetype="text/csv",
            headers={
                "Content-Disposition": "attachment; filename=replications.csv"
            },
        )

    data = summary.to_dict()
    data["population"] = {"n": population.n, "p": population.p}
    return APIResponse.success(data)


@estimator_bp.route("/presets", methods=["GET"])
def list_presets() -> ViewResult:
    container = get_container()
    return APIResponse.success(
        {name: container.get_preset(name) for name in container.list_presets()}
    )
