"""
Marshmallow schemas for simulation configs and request options
"""

from typing import Any, Dict, Mapping, Type

from marshmallow import EXCLUDE, Schema
from marshmallow import ValidationError as SchemaValidationError
from marshmallow import fields, post_load, validate

from app.models.ate_estimators import METHODS
from app.models.simulation import (
    COVARIATE_FAMILIES,
    ERROR_FAMILIES,
    SimulationConfig,
)
from app.utils.validation import ValidationError


def _methods_field() -> fields.List:
    return fields.List(
        fields.String(validate=validate.OneOf(METHODS)),
        validate=validate.Length(min=1),
    )


class SimulationConfigSchema(Schema):
    """Validates a simulation config file and builds SimulationConfig"""

    class Meta:
        unknown = EXCLUDE

    name = fields.String(allow_none=True)
    n = fields.Integer(validate=validate.Range(min=2, max=100_000))
    p = fields.Integer(validate=validate.Range(min=0, max=100_000))
    s = fields.Integer(validate=validate.Range(min=0))
    rho = fields.Float(validate=validate.Range(min=0.0, max=1.0, max_inclusive=False))
    n_A = fields.Integer(validate=validate.Range(min=1))
    replications = fields.Integer(validate=validate.Range(min=1, max=1_000_000))
    seed = fields.Integer(validate=validate.Range(min=0))
    linear_only = fields.Boolean()
    hidden_covariates = fields.Boolean()
    error_family = fields.String(validate=validate.OneOf(ERROR_FAMILIES))
    covariate_family = fields.String(validate=validate.OneOf(COVARIATE_FAMILIES))
    noise_scale = fields.Float(validate=validate.Range(min=0.0))
    methods = _methods_field()
    ci_level = fields.Float(
        validate=validate.Range(min=0.0, max=1.0, min_inclusive=False, max_inclusive=False)
    )
    folds = fields.Integer(validate=validate.Range(min=2))
    n_lambda = fields.Integer(validate=validate.Range(min=2))
    bootstrap_resamples = fields.Integer(validate=validate.Range(min=1))
    max_workers = fields.Integer(validate=validate.Range(min=1, max=256))
    strict = fields.Boolean()

    @post_load
    def make_config(self, data: Dict[str, Any], **kwargs: Any) -> SimulationConfig:
        if "methods" in data:
            data["methods"] = tuple(data["methods"])
        return SimulationConfig(**data)


class EstimateOptionsSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    methods = _methods_field()
    folds = fields.Integer(load_default=10, validate=validate.Range(min=2))
    ci_level = fields.Float(
        load_default=0.95,
        validate=validate.Range(min=0.0, max=1.0, min_inclusive=False, max_inclusive=False),
    )
    seed = fields.Integer(load_default=0, validate=validate.Range(min=0))
    df_adjust = fields.Boolean(load_default=True)
    n_lambda = fields.Integer(load_default=100, validate=validate.Range(min=2))
    lambdas = fields.List(
        fields.Float(validate=validate.Range(min=0.0, min_inclusive=False)),
        load_default=None,
    )
    emit_cv = fields.Boolean(load_default=False)


class DiagnoseOptionsSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    resamples = fields.Integer(load_default=1000, validate=validate.Range(min=1))
    threshold = fields.Float(
        load_default=0.5, validate=validate.Range(min=0.0, max=1.0, max_inclusive=False)
    )
    seed = fields.Integer(required=True, validate=validate.Range(min=0))
    folds = fields.Integer(load_default=10, validate=validate.Range(min=2))
    fourth_moment_threshold = fields.Float(load_default=30.0)
    scaling_threshold = fields.Float(load_default=1.0)


class FeaturizeOptionsSchema(Schema):
    class Meta:
        unknown = EXCLUDE

    include_quadratics = fields.Boolean(load_default=True)
    include_interactions = fields.Boolean(load_default=True)
    corr_threshold = fields.Float(
        load_default=0.95, validate=validate.Range(min=0.0, max=1.0)
    )
    min_ones = fields.Integer(load_default=20, validate=validate.Range(min=0))
    standardize = fields.Boolean(load_default=True)


def load_with(schema_cls: Type[Schema], payload: Mapping[str, Any]) -> Any:
    """
    Load payload with a schema, translating marshmallow errors

    Raises:
        ValidationError: With per-field messages in field_errors
    """
    try:
        return schema_cls().load(dict(payload))
    except SchemaValidationError as e:
        fields_in_error = ", ".join(sorted(str(k) for k in e.normalized_messages()))
        raise ValidationError(
            f"Invalid fields: {fields_in_error}", e.normalized_messages()
        ) from e


def load_simulation_config(
    payload: Mapping[str, Any], **overrides: Any
) -> SimulationConfig:
    """SimulationConfig from a mapping, with overrides applied on top"""
    merged = dict(payload)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return load_with(SimulationConfigSchema, merged)
